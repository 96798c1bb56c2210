#ifndef TNU_SIMLAB_HPP
#define TNU_SIMLAB_HPP

// Monte Carlo checks of the sqrt(n) asymptotics: sampling distributions of
// sqrt(n) (estimate - functional) against the computed asymptotic covariance.
//
// Every replicate draws from its own generator keyed by (seed, replicate), and
// results are reduced in replicate order, so reports do not depend on the
// number of worker threads.

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "tnu/asymptotics.hpp"
#include "tnu/domain.hpp"
#include "tnu/errors.hpp"
#include "tnu/locscatter.hpp"
#include "tnu/sample.hpp"
#include "tnu/scatter.hpp"
#include "tnu/symspace.hpp"

namespace tnu {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Generator for replicate `rep` of a run seeded with `seed`.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t rep) {
  const std::uint64_t k1 = splitmix64(seed ^ splitmix64(rep));
  const std::uint64_t k2 = splitmix64(k1 ^ 0x2545f4914f6cdd1dULL);
  std::seed_seq seq{static_cast<std::uint32_t>(k1), static_cast<std::uint32_t>(k1 >> 32),
                    static_cast<std::uint32_t>(k2), static_cast<std::uint32_t>(k2 >> 32)};
  return std::mt19937_64(seq);
}

class Sampler {
 public:
  enum class Kind { multivariate_t, gaussian, discrete, contaminated };

  static Sampler multivariate_t(double nu0, Vector mu0, const Matrix& sigma0, std::uint64_t seed) {
    if (!(nu0 > 0.0)) throw ParameterError("multivariate_t: nu0 must be positive");
    Sampler s = location_scale(Kind::multivariate_t, std::move(mu0), sigma0, seed);
    s.nu0_ = nu0;
    return s;
  }
  static Sampler gaussian(Vector mu0, const Matrix& sigma0, std::uint64_t seed) {
    return location_scale(Kind::gaussian, std::move(mu0), sigma0, seed);
  }
  static Sampler discrete(EmpiricalSample law, std::uint64_t seed) {
    Sampler s;
    s.kind_ = Kind::discrete;
    s.law_ = law.compressed();
    s.seed_ = seed;
    return s;
  }
  static Sampler contaminated(const Sampler& base, double eps, Vector point, std::uint64_t seed) {
    if (!(eps >= 0.0 && eps <= 1.0)) throw ParameterError("contaminated: eps outside [0,1]");
    if (point.size() != base.dim()) throw ParameterError("contaminated: point dimension mismatch");
    Sampler s;
    s.kind_ = Kind::contaminated;
    s.base_ = std::make_shared<const Sampler>(base);
    s.eps_ = eps;
    s.point_ = std::move(point);
    s.seed_ = seed;
    if (base.is_discrete()) s.law_ = base.law().contaminated(eps, s.point_).compressed();
    return s;
  }

  Kind kind() const { return kind_; }
  std::uint64_t seed() const { return seed_; }
  Eigen::Index dim() const {
    if (kind_ == Kind::discrete) return law_.dim();
    if (kind_ == Kind::contaminated) return base_->dim();
    return mu0_.size();
  }
  /// True when the sampled law is finitely supported (its functional is computable).
  bool is_discrete() const {
    return kind_ == Kind::discrete || (kind_ == Kind::contaminated && base_->is_discrete());
  }
  /// The sampled law itself; only for discrete samplers.
  const EmpiricalSample& law() const {
    if (!is_discrete()) throw ParameterError("Sampler::law: law is not discrete");
    return law_;
  }

  /// n i.i.d. draws for replicate `rep`, as an empirical measure. Draws from
  /// a discrete law come back aggregated onto its support.
  EmpiricalSample draw(Eigen::Index n, std::uint64_t rep) const {
    if (n < 1) throw ParameterError("Sampler::draw: n must be positive");
    std::mt19937_64 gen = substream(seed_, rep);
    if (is_discrete()) return draw_multinomial(n, gen);
    Matrix pts(n, dim());
    for (Eigen::Index i = 0; i < n; ++i) pts.row(i) = draw_one(gen).transpose();
    return EmpiricalSample::uniform(std::move(pts));
  }

 private:
  static Sampler location_scale(Kind kind, Vector mu0, const Matrix& sigma0, std::uint64_t seed) {
    Sampler s;
    s.kind_ = kind;
    if (sigma0.rows() != mu0.size()) throw ParameterError("Sampler: mu0/Sigma0 dimension mismatch");
    const SpdMatrix spd(sigma0);
    s.chol_ = Eigen::LLT<Matrix>(spd.matrix()).matrixL();
    s.mu0_ = std::move(mu0);
    s.seed_ = seed;
    return s;
  }

  Vector draw_one(std::mt19937_64& gen) const {
    switch (kind_) {
      case Kind::gaussian:
      case Kind::multivariate_t: {
        std::normal_distribution<double> nd;
        Vector z(mu0_.size());
        for (Eigen::Index c = 0; c < z.size(); ++c) z(c) = nd(gen);
        double scale = 1.0;
        if (kind_ == Kind::multivariate_t) {
          std::chi_squared_distribution<double> chi(nu0_);
          scale = 1.0 / std::sqrt(chi(gen) / nu0_);
        }
        return mu0_ + scale * (chol_ * z);
      }
      case Kind::contaminated: {
        std::bernoulli_distribution coin(eps_);
        if (coin(gen)) return point_;
        return base_->draw_one(gen);
      }
      case Kind::discrete:
        break;
    }
    throw ParameterError("Sampler: draw_one on a discrete law");
  }

  EmpiricalSample draw_multinomial(Eigen::Index n, std::mt19937_64& gen) const {
    const Eigen::Index k = law_.size();
    Vector counts = Vector::Zero(k);
    Eigen::Index left = n;
    double mass_left = 1.0;
    for (Eigen::Index i = 0; i < k && left > 0; ++i) {
      if (i == k - 1) {
        counts(i) = static_cast<double>(left);
        break;
      }
      const double p = std::clamp(law_.weight(i) / mass_left, 0.0, 1.0);
      std::binomial_distribution<Eigen::Index> bin(left, p);
      const Eigen::Index c = bin(gen);
      counts(i) = static_cast<double>(c);
      left -= c;
      mass_left -= law_.weight(i);
    }
    return EmpiricalSample(law_.points(), counts).compressed();
  }

  Kind kind_ = Kind::gaussian;
  double nu0_ = 0.0;
  Vector mu0_;
  Matrix chol_;
  EmpiricalSample law_;
  std::shared_ptr<const Sampler> base_;
  double eps_ = 0.0;
  Vector point_;
  std::uint64_t seed_ = 0;
};

enum class EstimatorKind { scatter, locscatter };

struct McOptions {
  EstimatorKind estimator = EstimatorKind::scatter;
  /// Worker threads; 0 means hardware concurrency.
  unsigned threads = 0;
  /// Entries of the target covariance with |S_ij| above this enter max_rel_err.
  double rel_entry_threshold = 0.05;
  /// Sample size of the surrogate "truth" solve for continuous laws.
  Eigen::Index surrogate_n = 1000000;
  /// Keep per-replicate estimates in the report.
  bool keep_replicates = false;
  ScatterConfig solver;
};

struct McReport {
  Eigen::Index n = 0;
  int reps = 0;
  EstimatorKind estimator = EstimatorKind::scatter;
  Vector functional;
  Matrix empirical_cov;
  AsymptoticCov target_cov;
  double max_rel_err = 0.0;
  /// Kolmogorov distance of each standardized coordinate to N(0,1); NaN for
  /// coordinates with zero target variance.
  Vector normality_stat;
  double existence_rate = 0.0;
  int solver_failures = 0;
  /// existence_rate < 0.99.
  bool flagged = false;
  /// Functional and target covariance come from one large sample.
  bool surrogate_truth = false;
  std::vector<Vector> replicate_estimates;
};

namespace detail {

inline Vector estimate_vector(const EmpiricalSample& s, double nu, EstimatorKind kind, const ScatterConfig& base) {
  ScatterConfig cfg = base;
  cfg.check_domain = false;
  if (kind == EstimatorKind::scatter) {
    cfg.nu = nu;
    return sym_to_vec(solve_scatter(s, cfg).A.sym()).coords;
  }
  const LocScatEstimate est = solve_locscatter(s, nu, cfg);
  return locscat_params(est.mu, est.Sigma.sym());
}

inline bool in_domain(const EmpiricalSample& s, double nu, EstimatorKind kind) {
  const double a0 = nu + static_cast<double>(s.dim());
  if (kind == EstimatorKind::scatter) return check_scatter_domain_auto(s, a0).member;
  return check_locscat_domain_auto(s, a0).member;
}

struct Truth {
  Vector functional;
  AsymptoticCov cov;
  bool surrogate = false;
};

inline Truth compute_truth(const Sampler& sampler, double nu, const McOptions& opt) {
  Truth t;
  EmpiricalSample law;
  if (sampler.is_discrete()) {
    law = sampler.law();
  } else {
    law = sampler.draw(opt.surrogate_n, ~std::uint64_t{0});
    t.surrogate = true;
  }
  ScatterConfig cfg = opt.solver;
  // A draw from a continuous law lies in the domain almost surely, and the
  // exact check is quadratic in the surrogate size.
  if (t.surrogate) cfg.check_domain = false;
  if (opt.estimator == EstimatorKind::scatter) {
    cfg.nu = nu;
    const ScatterResult fit = solve_scatter(law, cfg);
    t.functional = sym_to_vec(fit.A.sym()).coords;
    t.cov = asymptotic_cov_scatter_at(law, fit.A, nu);
  } else {
    const LocScatEstimate est = solve_locscatter(law, nu, cfg);
    t.functional = locscat_params(est.mu, est.Sigma.sym());
    t.cov = asymptotic_cov_locscatter_at(law, est);
  }
  return t;
}

struct ReplicateOutcome {
  bool exists = false;
  bool solved = false;
  Vector estimate;
};

/// Runs `reps` replicates on a pool of threads, results indexed by replicate.
inline std::vector<ReplicateOutcome> run_replicates(const Sampler& sampler, double nu, Eigen::Index n, int reps,
                                                    const McOptions& opt) {
  std::vector<ReplicateOutcome> out(static_cast<std::size_t>(reps));
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int r = next++; r < reps; r = next++) {
      ReplicateOutcome& o = out[static_cast<std::size_t>(r)];
      const EmpiricalSample s = sampler.draw(n, static_cast<std::uint64_t>(r));
      o.exists = in_domain(s, nu, opt.estimator);
      if (!o.exists) continue;
      try {
        o.estimate = estimate_vector(s, nu, opt.estimator, opt.solver);
        o.solved = true;
      } catch (const Error&) {
        o.solved = false;
      }
    }
  };
  unsigned nt = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
  nt = std::min<unsigned>(nt, static_cast<unsigned>(std::max(1, reps)));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < nt; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& th : pool) th.join();
  return out;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Kolmogorov distance between the empirical law of xs and N(0,1).
inline double ks_to_normal(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const double m = static_cast<double>(xs.size());
  double dmax = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = normal_cdf(xs[i]);
    dmax = std::max({dmax, std::abs(f - static_cast<double>(i) / m), std::abs(static_cast<double>(i + 1) / m - f)});
  }
  return dmax;
}

}  // namespace detail

inline McReport run_clt_experiment(const Sampler& sampler, double nu, Eigen::Index n, int reps,
                                   const McOptions& opt = {}) {
  if (reps < 2) throw ParameterError("run_clt_experiment: reps must be at least 2");
  if (n < 1) throw ParameterError("run_clt_experiment: n must be positive");
  if (opt.estimator == EstimatorKind::locscatter) require_nu_above_one(nu);

  const detail::Truth truth = detail::compute_truth(sampler, nu, opt);
  const std::vector<detail::ReplicateOutcome> outcomes = detail::run_replicates(sampler, nu, n, reps, opt);

  McReport rep;
  rep.n = n;
  rep.reps = reps;
  rep.estimator = opt.estimator;
  rep.functional = truth.functional;
  rep.target_cov = truth.cov;
  rep.surrogate_truth = truth.surrogate;

  const Eigen::Index k = truth.functional.size();
  const double rootn = std::sqrt(static_cast<double>(n));
  std::vector<Vector> errs;
  int exists = 0;
  for (const auto& o : outcomes) {
    if (o.exists) ++exists;
    if (o.exists && !o.solved) ++rep.solver_failures;
    if (o.solved) {
      errs.push_back(rootn * (o.estimate - truth.functional));
      if (opt.keep_replicates) rep.replicate_estimates.push_back(o.estimate);
    }
  }
  rep.existence_rate = static_cast<double>(exists) / static_cast<double>(reps);
  rep.flagged = rep.existence_rate < 0.99;

  rep.empirical_cov = Matrix::Zero(k, k);
  rep.normality_stat = Vector::Constant(k, std::nan(""));
  if (errs.size() >= 2) {
    Vector mean = Vector::Zero(k);
    for (const Vector& e : errs) mean += e;
    mean /= static_cast<double>(errs.size());
    for (const Vector& e : errs) rep.empirical_cov.noalias() += (e - mean) * (e - mean).transpose();
    rep.empirical_cov /= static_cast<double>(errs.size() - 1);

    for (Eigen::Index c = 0; c < k; ++c) {
      const double var = truth.cov.S(c, c);
      if (!(var > 0.0)) continue;
      std::vector<double> z;
      z.reserve(errs.size());
      for (const Vector& e : errs) z.push_back(e(c) / std::sqrt(var));
      rep.normality_stat(c) = detail::ks_to_normal(std::move(z));
    }
  }
  double worst = 0.0;
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) {
      const double s = truth.cov.S(i, j);
      if (std::abs(s) > opt.rel_entry_threshold) {
        worst = std::max(worst, std::abs(rep.empirical_cov(i, j) - s) / std::abs(s));
      }
    }
  rep.max_rel_err = worst;
  return rep;
}

struct SweepPoint {
  Eigen::Index n = 0;
  double mean_error = 0.0;
  int used = 0;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  /// Least-squares slope of log(mean_error) on log(n).
  double slope = 0.0;
  bool surrogate_truth = false;
};

inline SweepResult run_consistency_sweep(const Sampler& sampler, double nu, const std::vector<Eigen::Index>& n_list,
                                         int reps, const McOptions& opt = {}) {
  if (n_list.size() < 2) throw ParameterError("run_consistency_sweep: need at least two sample sizes");
  if (reps < 1) throw ParameterError("run_consistency_sweep: reps must be positive");
  if (opt.estimator == EstimatorKind::locscatter) require_nu_above_one(nu);
  const detail::Truth truth = detail::compute_truth(sampler, nu, opt);
  SweepResult out;
  out.surrogate_truth = truth.surrogate;
  for (std::size_t idx = 0; idx < n_list.size(); ++idx) {
    // Distinct replicate keys per sample size.
    McOptions o = opt;
    const Sampler& s = sampler;
    std::vector<detail::ReplicateOutcome> outcomes;
    {
      std::vector<detail::ReplicateOutcome> raw(static_cast<std::size_t>(reps));
      std::atomic<int> next{0};
      auto worker = [&]() {
        for (int r = next++; r < reps; r = next++) {
          auto& oc = raw[static_cast<std::size_t>(r)];
          const std::uint64_t key = (static_cast<std::uint64_t>(idx) << 40) + static_cast<std::uint64_t>(r);
          const EmpiricalSample smp = s.draw(n_list[idx], key);
          oc.exists = detail::in_domain(smp, nu, o.estimator);
          if (!oc.exists) continue;
          try {
            oc.estimate = detail::estimate_vector(smp, nu, o.estimator, o.solver);
            oc.solved = true;
          } catch (const Error&) {
          }
        }
      };
      unsigned nt = o.threads ? o.threads : std::max(1u, std::thread::hardware_concurrency());
      nt = std::min<unsigned>(nt, static_cast<unsigned>(reps));
      std::vector<std::thread> pool;
      for (unsigned t = 1; t < nt; ++t) pool.emplace_back(worker);
      worker();
      for (std::thread& th : pool) th.join();
      outcomes = std::move(raw);
    }
    SweepPoint pt;
    pt.n = n_list[idx];
    double acc = 0.0;
    for (const auto& oc : outcomes) {
      if (!oc.solved) continue;
      acc += (oc.estimate - truth.functional).norm();
      ++pt.used;
    }
    if (pt.used == 0) throw NumericalBreakdown("run_consistency_sweep: no replicate produced an estimate");
    pt.mean_error = acc / pt.used;
    out.points.push_back(pt);
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(out.points.size());
  for (const SweepPoint& p : out.points) {
    const double x = std::log(static_cast<double>(p.n));
    const double y = std::log(p.mean_error);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  out.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return out;
}

struct ClassConstraint {
  bool holds = false;
  double tail_mass = 0.0;
  double tail_bound = 0.0;
  bool in_domain = false;
  /// max(||A||, ||A^{-1}||) of the fitted scatter; infinite outside the domain.
  double w_norm = std::numeric_limits<double>::infinity();
  /// M^2 (nu+d-delta) / (delta nu), the implied bound on ||A_nu(Q)||.
  double norm_bound = 0.0;
  std::optional<SpdMatrix> A;
};

/// Tail condition Q(|y| > M) <= (1-delta)/(nu+d) together with A_nu(Q) in W_delta.
inline ClassConstraint class_constraint(const EmpiricalSample& q, double m, double delta, double nu) {
  if (!(m > 0.0)) throw ParameterError("class_constraint: M must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw ParameterError("class_constraint: delta must lie in (0,1)");
  const Eigen::Index d = q.dim();
  ClassConstraint out;
  const Vector norms = q.points().rowwise().norm();
  for (Eigen::Index i = 0; i < q.size(); ++i)
    if (norms(i) > m) out.tail_mass += q.weight(i);
  out.tail_bound = (1.0 - delta) / (nu + static_cast<double>(d));
  out.norm_bound = m * m * (nu + static_cast<double>(d) - delta) / (delta * nu);
  out.in_domain = check_scatter_domain_auto(q, nu + static_cast<double>(d)).member;
  if (out.in_domain) {
    ScatterConfig cfg;
    cfg.nu = nu;
    cfg.check_domain = false;
    cfg.max_iter = 5000;
    out.A = solve_scatter(q, cfg).A;
    out.w_norm = std::max(out.A->sym().operator_norm(), 1.0 / out.A->sym().eigenvalues().minCoeff());
  }
  out.holds = out.in_domain && out.tail_mass <= out.tail_bound && out.w_norm < 1.0 / delta;
  return out;
}

inline bool check_class_constraint(const EmpiricalSample& q, double m, double delta, double nu) {
  return class_constraint(q, m, delta, nu).holds;
}

}  // namespace tnu

#endif  // TNU_SIMLAB_HPP
