#ifndef TNU_DOMAIN_HPP
#define TNU_DOMAIN_HPP

// Existence domains of the t functionals for discrete laws.
//
// Scatter (U_{d,a0}): every linear subspace H of dimension q < d must carry
// mass Q(H) < 1 - (d-q)/a0. Location-scatter (V_{d,a0}): the same bound for
// every affine subspace of dimension q < d; decided through the lift
// y -> (y, 1), which maps V_{d,a0} onto U_{d+1,a0}.
//
// A subspace carrying mass is spanned by the sample points it contains, so
// the exact check enumerates point-spanned subspaces. Each subspace is
// reached through its canonical spanning sequence (the smallest index it
// contains, then the smallest index outside the span so far, ...), and the
// last extension step groups the remaining points by direction instead of
// enumerating them.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tnu/errors.hpp"
#include "tnu/sample.hpp"

namespace tnu {

struct DomainReport {
  enum class Kind { scatter, locscatter };

  Kind kind = Kind::scatter;
  bool member = true;
  double a0 = 0.0;
  /// Dimension of the subspace with the largest mass - threshold among those
  /// examined: linear for scatter, affine for location-scatter. For
  /// non-members this is the worst violation; for members, subspaces that
  /// cannot violate are pruned, so it is the tightest one examined.
  std::optional<int> worst_subspace_dim;
  double worst_mass = 0.0;
  /// 1 - (d - q)/a0 for the worst subspace.
  double threshold = 0.0;
  /// Input row indices spanning the worst subspace (empty for the origin).
  std::vector<Eigen::Index> witness_points;
  /// False when produced by the randomized search.
  bool exact = true;

  double margin() const { return worst_mass - threshold; }
};

/// Mass equal to the threshold within this slack counts as a violation.
inline constexpr double kDomainEqualitySlack = 1e-12;
/// Relative tolerance (times the largest point norm) for rank decisions.
inline constexpr double kDomainRankTolerance = 1e-9;

namespace detail {

class SubspaceSearch {
 public:
  SubspaceSearch(const Matrix& pts, const Vector& w, double origin_mass, double a0, double tol)
      : pts_(pts), w_(w), a0_(a0), tol_(tol), d_(pts.cols()) {
    best_q_ = 0;
    best_mass_ = origin_mass;
    best_margin_ = origin_mass - threshold(0);
    origin_mass_ = origin_mass;
    // Fixed generic directions for sign canonicalization and sort keys.
    std::mt19937_64 gen(0x5eed5eedULL);
    std::normal_distribution<double> nd;
    sign_dir_ = Vector(d_);
    key_dir_ = Vector(d_);
    for (Eigen::Index c = 0; c < d_; ++c) {
      sign_dir_(c) = nd(gen);
      key_dir_(c) = nd(gen);
    }
    sign_dir_.normalize();
    key_dir_.normalize();
  }

  double threshold(Eigen::Index q) const {
    return 1.0 - static_cast<double>(d_ - q) / a0_;
  }

  void run() {
    if (d_ == 1 || pts_.rows() == 0) return;
    Matrix basis(d_, 0);
    std::vector<Eigen::Index> picks;
    extend(basis, origin_mass_, picks);
  }

  Eigen::Index best_q() const { return best_q_; }
  double best_mass() const { return best_mass_; }
  const std::vector<Eigen::Index>& best_picks() const { return best_picks_; }

 private:
  void record(Eigen::Index q, double mass, const std::vector<Eigen::Index>& picks) {
    const double margin = mass - threshold(q);
    if (margin > best_margin_) {
      best_margin_ = margin;
      best_q_ = q;
      best_mass_ = mass;
      best_picks_ = picks;
    }
  }

  // `basis` is an orthonormal basis (d x r) of the span of `picks`;
  // `span_mass` the mass of that span (already recorded by the caller).
  void extend(const Matrix& basis, double span_mass, std::vector<Eigen::Index>& picks) {
    const Eigen::Index r = basis.cols();
    const Eigen::Index n = pts_.rows();
    const Eigen::Index last = picks.empty() ? -1 : picks.back();

    // Residuals of the points off the current span, one column per candidate.
    Matrix res = pts_.transpose();
    if (r > 0) {
      res -= basis * (basis.transpose() * res);
      res -= basis * (basis.transpose() * res);
    }
    std::vector<Eigen::Index> cand;  // candidate -> point index
    cand.reserve(static_cast<std::size_t>(n));
    double min_res = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double nr = res.col(i).norm();
      if (nr <= tol_) continue;  // in the current span
      min_res = std::min(min_res, nr);
      cand.push_back(i);
    }
    if (cand.empty()) return;
    const Eigen::Index m = static_cast<Eigen::Index>(cand.size());
    Matrix dir(d_, m);
    Vector key(m);
    for (Eigen::Index k = 0; k < m; ++k) {
      dir.col(k) = res.col(cand[static_cast<std::size_t>(k)]).normalized();
      if (dir.col(k).dot(sign_dir_) < 0.0) dir.col(k) = -dir.col(k);
      key(k) = dir.col(k).dot(key_dir_);
    }
    // b lies in span(basis, a) iff its residual is parallel to a's.
    auto parallel = [&](Eigen::Index kb, Eigen::Index ka) {
      const auto rb = res.col(cand[static_cast<std::size_t>(kb)]);
      const auto da = dir.col(ka);
      return (rb - rb.dot(da) * da).norm() <= tol_;
    };

    // Group candidates whose residuals are parallel.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return key(a) < key(b); });
    const double window = 4.0 * tol_ / min_res + 1e-15;
    std::vector<int> group_of(static_cast<std::size_t>(m), -1);
    std::vector<Eigen::Index> reps;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const Eigen::Index c = order[pos];
      int found = -1;
      for (std::size_t back = pos; back-- > 0;) {
        const Eigen::Index o = order[back];
        if (key(c) - key(o) > window) break;
        if (dir.col(o).dot(dir.col(c)) < 0.0) continue;
        if (parallel(c, o)) {
          found = group_of[static_cast<std::size_t>(o)];
          break;
        }
      }
      if (found < 0) {
        found = static_cast<int>(reps.size());
        reps.push_back(c);
      }
      group_of[static_cast<std::size_t>(c)] = found;
    }
    // Directions nearly orthogonal to sign_dir_ may have been split by the
    // sign choice; merge such groups by a direct test.
    const std::size_t ng = reps.size();
    std::vector<int> parent(ng);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int g) {
      while (parent[static_cast<std::size_t>(g)] != g) {
        parent[static_cast<std::size_t>(g)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(g)])];
        g = parent[static_cast<std::size_t>(g)];
      }
      return g;
    };
    for (std::size_t g = 0; g < ng; ++g) {
      if (std::abs(dir.col(reps[g]).dot(sign_dir_)) > 1e-6) continue;
      for (std::size_t h = 0; h < ng; ++h) {
        if (h != g && parallel(reps[g], reps[h])) {
          parent[static_cast<std::size_t>(find(static_cast<int>(g)))] = find(static_cast<int>(h));
        }
      }
    }

    std::vector<double> gmass(ng, 0.0);
    std::vector<Eigen::Index> ghead(ng, n);     // smallest point index in the group
    std::vector<Eigen::Index> ghead_cand(ng, 0);
    for (Eigen::Index k = 0; k < m; ++k) {
      const auto g = static_cast<std::size_t>(find(group_of[static_cast<std::size_t>(k)]));
      const Eigen::Index idx = cand[static_cast<std::size_t>(k)];
      gmass[g] += w_(idx);
      if (idx < ghead[g]) {
        ghead[g] = idx;
        ghead_cand[g] = k;
      }
    }
    // Candidate mass with point index > i, for the pruning bound.
    std::vector<double> suffix(static_cast<std::size_t>(n) + 1, 0.0);
    {
      std::vector<double> by_index(static_cast<std::size_t>(n), 0.0);
      for (Eigen::Index idx : cand) by_index[static_cast<std::size_t>(idx)] = w_(idx);
      for (Eigen::Index i = n; i-- > 0;) {
        suffix[static_cast<std::size_t>(i)] =
            suffix[static_cast<std::size_t>(i) + 1] + by_index[static_cast<std::size_t>(i)];
      }
    }

    const Eigen::Index q = r + 1;
    for (std::size_t g = 0; g < ng; ++g) {
      if (find(static_cast<int>(g)) != static_cast<int>(g)) continue;
      const Eigen::Index head = ghead[g];
      if (head <= last) continue;  // not a canonical spanning sequence
      const double mass = span_mass + gmass[g];
      picks.push_back(head);
      record(q, mass, picks);
      if (q < d_ - 1) {
        // Later picks have larger indices, so this bounds every extension;
        // descend only where a violation is still possible.
        const double bound = mass + suffix[static_cast<std::size_t>(head) + 1] - (gmass[g] - w_(head));
        if (bound >= threshold(q + 1) - kDomainEqualitySlack) {
          Matrix next(d_, r + 1);
          next.leftCols(r) = basis;
          next.col(r) = dir.col(ghead_cand[g]);
          extend(next, mass, picks);
        }
      }
      picks.pop_back();
    }
  }

  const Matrix& pts_;
  const Vector& w_;
  double a0_;
  double tol_;
  Eigen::Index d_;
  double origin_mass_ = 0.0;
  Vector sign_dir_;
  Vector key_dir_;
  Eigen::Index best_q_ = 0;
  double best_mass_ = 0.0;
  double best_margin_ = 0.0;
  std::vector<Eigen::Index> best_picks_;
};

struct PreparedSample {
  Matrix nonzero;                       // distinct nonzero atoms, heaviest first
  Vector weights;
  std::vector<Eigen::Index> origin_rows;  // input row for each atom
  double origin_mass = 0.0;
  double tol = 0.0;
};

inline PreparedSample prepare(const EmpiricalSample& q) {
  std::vector<Eigen::Index> rows;
  const EmpiricalSample c = q.compressed(&rows);
  const double scale = c.points().rowwise().norm().maxCoeff();
  PreparedSample out;
  out.tol = kDomainRankTolerance * scale;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    if (scale == 0.0 || c.points().row(i).norm() <= out.tol) {
      out.origin_mass += c.weight(i);
    } else {
      keep.push_back(i);
    }
  }
  std::stable_sort(keep.begin(), keep.end(), [&](Eigen::Index a, Eigen::Index b) { return c.weight(a) > c.weight(b); });
  out.nonzero.resize(static_cast<Eigen::Index>(keep.size()), c.dim());
  out.weights.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    out.nonzero.row(static_cast<Eigen::Index>(k)) = c.points().row(keep[k]);
    out.weights(static_cast<Eigen::Index>(k)) = c.weight(keep[k]);
    out.origin_rows.push_back(rows[static_cast<std::size_t>(keep[k])]);
  }
  return out;
}

inline DomainReport finish_report(Eigen::Index d, double a0, Eigen::Index q, double mass,
                                  std::vector<Eigen::Index> witness, bool exact) {
  DomainReport rep;
  rep.a0 = a0;
  rep.worst_subspace_dim = static_cast<int>(q);
  rep.worst_mass = mass;
  rep.threshold = 1.0 - static_cast<double>(d - q) / a0;
  rep.member = mass < rep.threshold - kDomainEqualitySlack;
  rep.witness_points = std::move(witness);
  std::sort(rep.witness_points.begin(), rep.witness_points.end());
  rep.exact = exact;
  return rep;
}

inline DomainReport to_locscat(DomainReport rep) {
  rep.kind = DomainReport::Kind::locscatter;
  // A q-dimensional linear subspace of R^{d+1} meets the hyperplane
  // x_{d+1} = 1 in an affine subspace of dimension q - 1.
  if (rep.worst_subspace_dim) *rep.worst_subspace_dim -= 1;
  return rep;
}

}  // namespace detail

/// Largest dimension handled by the exact enumeration.
inline constexpr Eigen::Index kExactDomainMaxDim = 4;
/// Largest distinct-point count handled exactly at dimension kExactDomainMaxDim.
inline constexpr Eigen::Index kExactDomainMaxPointsAtMaxDim = 500;
/// At d = 3 the exact search is quadratic in the point count; the automatic
/// checks switch to the randomized search above this many points.
inline constexpr Eigen::Index kAutoExactMaxPointsDim3 = 5000;

/// Whether the automatic checks use the exact enumeration for n points in R^d.
inline bool use_exact_domain_check(Eigen::Index d, Eigen::Index n) {
  if (d <= 2) return true;
  if (d == 3) return n <= kAutoExactMaxPointsDim3;
  return d == kExactDomainMaxDim && n <= kExactDomainMaxPointsAtMaxDim;
}

/// Exact membership of Q in U_{d,a0}. Requires a0 > d.
inline DomainReport check_scatter_domain(const EmpiricalSample& q, double a0) {
  const Eigen::Index d = q.dim();
  if (!(a0 > static_cast<double>(d))) {
    throw ParameterError("check_scatter_domain: need a0 > d (a0=" + std::to_string(a0) +
                         ", d=" + std::to_string(d) + ")");
  }
  const detail::PreparedSample prep = detail::prepare(q);
  if (d > kExactDomainMaxDim ||
      (d == kExactDomainMaxDim && prep.nonzero.rows() > kExactDomainMaxPointsAtMaxDim)) {
    throw ParameterError(
        "check_scatter_domain: exact enumeration limited to d <= 3, or d == 4 with at most 500 "
        "distinct points; use check_scatter_domain_randomized");
  }
  detail::SubspaceSearch search(prep.nonzero, prep.weights, prep.origin_mass, a0, prep.tol);
  search.run();
  std::vector<Eigen::Index> witness;
  for (Eigen::Index p : search.best_picks()) witness.push_back(prep.origin_rows[static_cast<std::size_t>(p)]);
  return detail::finish_report(d, a0, search.best_q(), search.best_mass(), std::move(witness), true);
}

/// Randomized search for violating subspaces: spans of random point subsets.
/// A reported violation is genuine; membership is only probable (exact=false).
inline DomainReport check_scatter_domain_randomized(const EmpiricalSample& q, double a0,
                                                    int trials = 20000, std::uint64_t seed = 1) {
  const Eigen::Index d = q.dim();
  if (!(a0 > static_cast<double>(d))) throw ParameterError("check_scatter_domain_randomized: need a0 > d");
  if (trials < 1) throw ParameterError("check_scatter_domain_randomized: trials must be positive");
  const detail::PreparedSample prep = detail::prepare(q);
  const Eigen::Index n = prep.nonzero.rows();
  auto thr = [&](Eigen::Index k) { return 1.0 - static_cast<double>(d - k) / a0; };
  Eigen::Index best_q = 0;
  double best_mass = prep.origin_mass;
  double best_margin = prep.origin_mass - thr(0);
  std::vector<Eigen::Index> best_picks;
  std::mt19937_64 gen(seed);
  if (n > 0) {
    std::discrete_distribution<Eigen::Index> pick(prep.weights.data(), prep.weights.data() + n);
    for (int t = 0; t < trials; ++t) {
      const Eigen::Index target = 1 + t % (d - 1 > 0 ? d - 1 : 1);
      if (target > d - 1) break;
      Matrix basis(d, 0);
      std::vector<Eigen::Index> picks;
      for (int attempt = 0; attempt < 4 * target && basis.cols() < target; ++attempt) {
        const Eigen::Index i = pick(gen);
        Vector res = prep.nonzero.row(i).transpose();
        res -= basis * (basis.transpose() * res);
        res -= basis * (basis.transpose() * res);
        if (res.norm() <= prep.tol) continue;
        basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
        basis.col(basis.cols() - 1) = res.normalized();
        picks.push_back(i);
      }
      if (basis.cols() != target) continue;
      double mass = prep.origin_mass;
      for (Eigen::Index i = 0; i < n; ++i) {
        Vector res = prep.nonzero.row(i).transpose();
        res -= basis * (basis.transpose() * res);
        if (res.norm() <= prep.tol) mass += prep.weights(i);
      }
      if (mass - thr(target) > best_margin) {
        best_margin = mass - thr(target);
        best_q = target;
        best_mass = mass;
        best_picks = picks;
      }
    }
  }
  std::vector<Eigen::Index> witness;
  for (Eigen::Index p : best_picks) witness.push_back(prep.origin_rows[static_cast<std::size_t>(p)]);
  return detail::finish_report(d, a0, best_q, best_mass, std::move(witness), false);
}

/// y -> (y, 1) applied to every point; weights unchanged.
inline EmpiricalSample lift(const EmpiricalSample& p) {
  Matrix pts(p.size(), p.dim() + 1);
  pts.leftCols(p.dim()) = p.points();
  pts.col(p.dim()).setOnes();
  return EmpiricalSample(std::move(pts), p.weights());
}

/// Exact membership of P in V_{d,a0}. Requires a0 > d + 1.
inline DomainReport check_locscat_domain(const EmpiricalSample& p, double a0) {
  if (!(a0 > static_cast<double>(p.dim() + 1))) {
    throw ParameterError("check_locscat_domain: need a0 > d + 1 (a0=" + std::to_string(a0) +
                         ", d=" + std::to_string(p.dim()) + ")");
  }
  return detail::to_locscat(check_scatter_domain(lift(p), a0));
}

struct Atom {
  Vector location;
  double mass = 0.0;
};

/// Heaviest atom after merging coincident points; ties go to the
/// lexicographically smallest location.
inline Atom max_atom(const EmpiricalSample& p) {
  const EmpiricalSample c = p.compressed();
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < c.size(); ++i)
    if (c.weight(i) > c.weight(best)) best = i;
  return Atom{c.point(best), c.weight(best)};
}

}  // namespace tnu

#endif  // TNU_DOMAIN_HPP
