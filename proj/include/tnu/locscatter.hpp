#ifndef TNU_LOCSCATTER_HPP
#define TNU_LOCSCATTER_HPP

// Location-scatter t_nu functional (mu_nu, Sigma_nu), nu > 1.
//
// P on R^d is lifted to Q on R^{d+1} by y -> (y, 1); the pure-scatter
// functional of Q with nu' = nu - 1 has A_{d+1,d+1} = 1 and equals
// [[Sigma + mu mu', mu], [mu', 1]].

#include <Eigen/Dense>

#include <cmath>
#include <utility>

#include "tnu/domain.hpp"
#include "tnu/errors.hpp"
#include "tnu/sample.hpp"
#include "tnu/scatter.hpp"
#include "tnu/symspace.hpp"

namespace tnu {

struct LocScatEstimate {
  Vector mu;
  SpdMatrix Sigma;
  double nu = 0.0;
  /// A_{d+1,d+1} of the lifted solution; equals 1 at the functional.
  double gamma_check = 0.0;
  /// \int u_{nu,d}((y-mu)'Sigma^{-1}(y-mu)) dP; equals 1 at the functional.
  double weight_check = 0.0;
  ScatterResult scatter_diag;
  bool converged = false;
};

/// Tolerance on gamma_check and weight_check.
inline constexpr double kEmbeddingCheckTolerance = 1e-6;

inline void require_nu_above_one(double nu) {
  if (!(nu > 1.0) || !std::isfinite(nu)) {
    throw NuOutOfRange("location-scatter t functional requires nu > 1 (got " + std::to_string(nu) + ")");
  }
}

inline DomainReport check_locscat_domain_auto(const EmpiricalSample& p, double a0) {
  if (!(a0 > static_cast<double>(p.dim() + 1))) {
    throw ParameterError("check_locscat_domain: need a0 > d + 1");
  }
  return detail::to_locscat(check_scatter_domain_auto(lift(p), a0));
}

/// Squared Mahalanobis distances (y_i - mu)' Sigma^{-1} (y_i - mu).
inline Vector mahalanobis_sq(const EmpiricalSample& p, const Vector& mu, const SpdMatrix& sigma) {
  const Matrix centered = p.points().rowwise() - mu.transpose();
  return detail::quad_forms(centered, sigma.inverse_matrix());
}

/// Ph_nu(mu, Sigma) = \int 1/2 log det Sigma + rho((y-mu)'Sigma^{-1}(y-mu)) - rho(y'y) dP.
inline double objective_locscat(const EmpiricalSample& p, const Vector& mu, const SpdMatrix& sigma, double nu) {
  const Eigen::Index d = p.dim();
  if (mu.size() != d || sigma.dim() != d) throw ParameterError("objective_locscat: dimension mismatch");
  const Vector s = mahalanobis_sq(p, mu, sigma);
  const Vector s0 = p.points().rowwise().squaredNorm();
  const double half = 0.5 * (nu + static_cast<double>(d));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) acc += p.weight(i) * half * std::log((nu + s(i)) / (nu + s0(i)));
  return 0.5 * sigma.log_det() + acc;
}

inline LocScatEstimate solve_locscatter(const EmpiricalSample& p, double nu, ScatterConfig cfg = {}) {
  require_nu_above_one(nu);
  const Eigen::Index d = p.dim();
  if (cfg.check_domain) {
    DomainReport rep = check_locscat_domain_auto(p, nu + static_cast<double>(d));
    if (!rep.member) throw DomainViolation(std::move(rep));
  }
  cfg.nu = nu - 1.0;
  cfg.check_domain = false;
  LocScatEstimate est;
  est.nu = nu;
  est.scatter_diag = solve_scatter(lift(p), cfg);
  const EmbeddedScatter parts = extract(est.scatter_diag.A);
  est.mu = parts.mu;
  est.Sigma = parts.Sigma;
  est.gamma_check = parts.gamma;
  const Vector s = mahalanobis_sq(p, est.mu, est.Sigma);
  double wsum = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) wsum += p.weight(i) * weight_u(s(i), nu, d);
  est.weight_check = wsum;
  est.converged = est.scatter_diag.converged &&
                  std::abs(est.gamma_check - 1.0) <= kEmbeddingCheckTolerance &&
                  std::abs(est.weight_check - 1.0) <= kEmbeddingCheckTolerance;
  return est;
}

/// One EM step for the t location-scatter likelihood with weights
/// w_i = u_{nu,d}((x_i-mu)'Sigma^{-1}(x_i-mu)).
inline std::pair<Vector, SpdMatrix> direct_em_step(const EmpiricalSample& p, const Vector& mu,
                                                   const SpdMatrix& sigma, double nu) {
  const Eigen::Index d = p.dim();
  const Vector s = mahalanobis_sq(p, mu, sigma);
  Vector pw(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) pw(i) = p.weight(i) * weight_u(s(i), nu, d);
  const Vector mu_next = p.points().transpose() * pw / pw.sum();
  const Matrix centered = p.points().rowwise() - mu_next.transpose();
  const Matrix sigma_next = centered.transpose() * pw.asDiagonal() * centered;
  try {
    return {mu_next, SpdMatrix(sigma_next)};
  } catch (const NotPositiveDefinite&) {
    throw DegeneracyError("direct_em_step: updated Sigma is singular");
  }
}

struct DirectEmResult {
  Vector mu;
  SpdMatrix Sigma;
  int iterations = 0;
  bool converged = false;
};

/// Iterates direct_em_step from the sample mean and covariance until the
/// relative change drops below tol.
inline DirectEmResult solve_locscatter_direct_em(const EmpiricalSample& p, double nu, double tol = 1e-13,
                                                 int max_iter = 20000) {
  require_nu_above_one(nu);
  const Eigen::Index d = p.dim();
  Vector mu = p.mean();
  const Matrix centered = p.points().rowwise() - mu.transpose();
  Matrix cov = centered.transpose() * p.weights().asDiagonal() * centered;
  cov += 1e-8 * std::max(cov.trace(), 1e-300) * Matrix::Identity(d, d);
  SpdMatrix sigma(cov);
  DirectEmResult out;
  for (int it = 1; it <= max_iter; ++it) {
    auto [mu2, sigma2] = direct_em_step(p, mu, sigma, nu);
    const double change = (mu2 - mu).norm() / (1.0 + mu.norm()) +
                          (sigma2.matrix() - sigma.matrix()).norm() / sigma.matrix().norm();
    mu = std::move(mu2);
    sigma = std::move(sigma2);
    out.iterations = it;
    if (change <= tol) {
      out.converged = true;
      break;
    }
  }
  out.mu = std::move(mu);
  out.Sigma = std::move(sigma);
  return out;
}

}  // namespace tnu

#endif  // TNU_LOCSCATTER_HPP
