#ifndef TNU_ONED_HPP
#define TNU_ONED_HPP

// One-dimensional t_nu location and scale, extended to the boundary: when one
// atom carries mass >= nu/(nu+1) the functional is (atom, 0).
//
// Interior case: for fixed mu the scale sigma(mu) solves
//   F(mu, sigma) = \int (x-mu)^2 / (nu sigma^2 + (x-mu)^2) dQ(x) = 1/(nu+1),
// F strictly decreasing in sigma; mu then minimizes the C^1 profile
// mu -> Qh(mu, sigma(mu)), whose derivative is \int (nu+1)(mu-x)/D dQ with
// D = (x-mu)^2 + nu sigma^2.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "tnu/domain.hpp"
#include "tnu/errors.hpp"
#include "tnu/locscatter.hpp"
#include "tnu/sample.hpp"

namespace tnu {

struct OneDEstimate {
  double mu = 0.0;
  double sigma = 0.0;
  /// True iff a single atom carries mass >= nu/(nu+1); then sigma == 0.
  bool boundary = false;
  std::optional<std::pair<double, double>> atom;  // (location, mass)
};

namespace detail {

inline void require_1d(const EmpiricalSample& q, const char* who) {
  if (q.dim() != 1) throw ParameterError(std::string(who) + ": sample must be one-dimensional");
}

inline double scale_f(const EmpiricalSample& q, double mu, double sigma, double nu) {
  const double ns2 = nu * sigma * sigma;
  double f = 0.0;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const double r2 = (q.points()(i, 0) - mu) * (q.points()(i, 0) - mu);
    if (r2 > 0.0) f += q.weight(i) * r2 / (ns2 + r2);
  }
  return f;
}

/// Interquartile range of the law, or its full range when the IQR is zero.
inline double data_scale(const EmpiricalSample& q) {
  std::vector<std::pair<double, double>> xs;
  for (Eigen::Index i = 0; i < q.size(); ++i) xs.emplace_back(q.points()(i, 0), q.weight(i));
  std::sort(xs.begin(), xs.end());
  auto quantile = [&](double level) {
    double acc = 0.0;
    for (const auto& [x, w] : xs) {
      acc += w;
      if (acc >= level) return x;
    }
    return xs.back().first;
  };
  double s = quantile(0.75) - quantile(0.25);
  if (!(s > 0.0)) s = xs.back().first - xs.front().first;
  if (!(s > 0.0)) s = std::max(1.0, std::abs(xs.front().first));
  return s;
}

}  // namespace detail

/// Mass the law puts exactly at mu.
inline double mass_at(const EmpiricalSample& q, double mu) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < q.size(); ++i)
    if (q.points()(i, 0) == mu) m += q.weight(i);
  return m;
}

/// F(mu, sigma) of the scale equation.
inline double scale_equation(const EmpiricalSample& q, double mu, double sigma, double nu) {
  detail::require_1d(q, "scale_equation");
  return detail::scale_f(q, mu, sigma, nu);
}

/// Unique sigma > 0 with F(mu, sigma) = 1/(nu+1), by bisection in log sigma.
/// Throws NoPositiveSolution when Q({mu}^c) <= 1/(nu+1).
inline double sigma_of_mu(const EmpiricalSample& q, double mu, double nu) {
  detail::require_1d(q, "sigma_of_mu");
  const double target = 1.0 / (nu + 1.0);
  if (!(1.0 - mass_at(q, mu) > target)) {
    throw NoPositiveSolution("sigma_of_mu: mass off mu does not exceed 1/(nu+1)");
  }
  const double scale = detail::data_scale(q) + std::abs(mu - q.mean()(0));
  double lo = 1e-12 * scale;
  double hi = 10.0 * scale;
  while (detail::scale_f(q, mu, lo, nu) < target) {
    lo *= 1e-3;
    if (lo < 1e-300) throw NumericalBreakdown("sigma_of_mu: lower bracket underflow");
  }
  while (detail::scale_f(q, mu, hi, nu) > target) hi *= 10.0;
  for (int it = 0; it < 400 && hi / lo - 1.0 > 1e-15; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (detail::scale_f(q, mu, mid, nu) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::sqrt(lo * hi);
}

/// Qh(mu, sigma) = \int log sigma + (nu+1)/2 log[(1 + (x-mu)^2/(nu sigma^2)) / (1 + x^2/nu)] dQ.
inline double objective_oned(const EmpiricalSample& q, double mu, double sigma, double nu) {
  detail::require_1d(q, "objective_oned");
  const double ns2 = nu * sigma * sigma;
  double acc = std::log(sigma);
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const double x = q.points()(i, 0);
    acc += q.weight(i) * 0.5 * (nu + 1.0) *
           std::log(((ns2 + (x - mu) * (x - mu)) / ns2) * (nu / (nu + x * x)));
  }
  return acc;
}

/// Profile mu -> Qh(mu, sigma(mu)).
inline double profile_objective(const EmpiricalSample& q, double mu, double nu) {
  return objective_oned(q, mu, sigma_of_mu(q, mu, nu), nu);
}

/// Derivative of the profile: the partial in mu at sigma = sigma(mu).
inline double profile_derivative(const EmpiricalSample& q, double mu, double nu) {
  const double sigma = sigma_of_mu(q, mu, nu);
  const double ns2 = nu * sigma * sigma;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const double r = mu - q.points()(i, 0);
    acc += q.weight(i) * (nu + 1.0) * r / (r * r + ns2);
  }
  return acc;
}

inline OneDEstimate solve_oned(const EmpiricalSample& q_in, double nu) {
  detail::require_1d(q_in, "solve_oned");
  require_nu_above_one(nu);
  const EmpiricalSample q = q_in.compressed();
  const double big = nu / (nu + 1.0);
  int big_atoms = 0;
  for (Eigen::Index i = 0; i < q.size(); ++i)
    if (q.weight(i) >= big - kDomainEqualitySlack) ++big_atoms;
  if (big_atoms > 1) throw NumericalBreakdown("solve_oned: more than one atom reaches nu/(nu+1)");

  const Atom atom = max_atom(q);
  OneDEstimate out;
  out.atom = std::make_pair(atom.location(0), atom.mass);
  if (atom.mass >= big - kDomainEqualitySlack) {
    out.mu = atom.location(0);
    out.sigma = 0.0;
    out.boundary = true;
    return out;
  }

  const double xmin = q.points().col(0).minCoeff();
  const double xmax = q.points().col(0).maxCoeff();
  const double range = xmax - xmin;
  double lo = xmin - range;
  double hi = xmax + range;

  // Golden-section pass to localize the minimum of the profile.
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - invphi * (b - a), dpt = a + invphi * (b - a);
  double fc = profile_objective(q, c, nu), fd = profile_objective(q, dpt, nu);
  for (int it = 0; it < 60; ++it) {
    if (fc < fd) {
      b = dpt;
      dpt = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = profile_objective(q, c, nu);
    } else {
      a = c;
      c = dpt;
      fc = fd;
      dpt = a + invphi * (b - a);
      fd = profile_objective(q, dpt, nu);
    }
  }
  // Derivative bisection on a sign-changing bracket around it.
  double blo = a, bhi = b;
  if (!(profile_derivative(q, blo, nu) <= 0.0 && profile_derivative(q, bhi, nu) >= 0.0)) {
    blo = xmin;
    bhi = xmax;
  }
  for (int it = 0; it < 200 && bhi - blo > 1e-15 * (1.0 + std::abs(blo) + range); ++it) {
    const double mid = 0.5 * (blo + bhi);
    if (profile_derivative(q, mid, nu) > 0.0) {
      bhi = mid;
    } else {
      blo = mid;
    }
  }
  out.mu = 0.5 * (blo + bhi);
  out.sigma = sigma_of_mu(q, out.mu, nu);
  return out;
}

/// Closed form for Q = (1-p) delta_a + p delta_b.
inline OneDEstimate two_point_closed_form(double a, double b, double p, double nu) {
  require_nu_above_one(nu);
  if (!(a < b)) throw ParameterError("two_point_closed_form: need a < b");
  if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("two_point_closed_form: p outside [0,1]");
  const double q = 1.0 - p;
  OneDEstimate out;
  if (p <= 1.0 / (nu + 1.0)) {
    out.mu = a;
    out.boundary = true;
    out.atom = std::make_pair(a, q);
    return out;
  }
  if (p >= nu / (nu + 1.0)) {
    out.mu = b;
    out.boundary = true;
    out.atom = std::make_pair(b, p);
    return out;
  }
  const double mu_p = (nu * p - q) / (nu - 1.0);
  const double s2_p = (nu * nu * p * q - nu * (p * p + q * q) + p * q) / ((nu - 1.0) * (nu - 1.0));
  out.mu = a + (b - a) * mu_p;
  out.sigma = (b - a) * std::sqrt(s2_p);
  out.atom = std::make_pair(p >= 0.5 ? b : a, std::max(p, q));
  return out;
}

struct BoundaryProbe {
  double eps = 0.0;
  double sigma = 0.0;
  /// sigma / sqrt(eps/(nu-1)); NaN for eps <= 0.
  double ratio = 0.0;
};

/// sigma_nu(Q_eps) for Q_eps = q_eps delta_0 + p_eps delta_1 with
/// p_eps = (nu - eps)/(nu + 1). eps <= 0 lands on the big-atom side.
inline std::vector<BoundaryProbe> boundary_rate_probe(double nu, const std::vector<double>& eps_list) {
  require_nu_above_one(nu);
  std::vector<BoundaryProbe> out;
  for (double eps : eps_list) {
    const double p = (nu - eps) / (nu + 1.0);
    if (!(p > 0.0 && p <= 1.0)) throw ParameterError("boundary_rate_probe: eps out of range");
    const OneDEstimate est = solve_oned(EmpiricalSample::from_values({0.0, 1.0}, {1.0 - p, p}), nu);
    BoundaryProbe bp;
    bp.eps = eps;
    bp.sigma = est.sigma;
    bp.ratio = eps > 0.0 ? est.sigma / std::sqrt(eps / (nu - 1.0)) : std::nan("");
    out.push_back(bp);
  }
  return out;
}

}  // namespace tnu

#endif  // TNU_ONED_HPP
