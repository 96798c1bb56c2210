#ifndef TNU_SCATTER_HPP
#define TNU_SCATTER_HPP

// Pure-scatter t_nu functional A_nu(Q): the minimizer over SPD A of
//
//   Qh(A) = 1/2 log det A + \int rho(y'A^{-1}y) - rho(y'y) dQ(y),
//   rho(s) = (nu+d)/2 log((nu+s)/nu),
//
// computed by the fixed-point (EM) iteration A <- \int u(y'A^{-1}y) yy' dQ
// with u(s) = (nu+d)/(nu+s).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "tnu/domain.hpp"
#include "tnu/errors.hpp"
#include "tnu/sample.hpp"
#include "tnu/symspace.hpp"

namespace tnu {

/// u_{nu,d}(s) = (nu+d)/(nu+s)
inline double weight_u(double s, double nu, Eigen::Index d) {
  return (nu + static_cast<double>(d)) / (nu + s);
}

/// rho_{nu,d}(s) = (nu+d)/2 log((nu+s)/nu)
inline double rho(double s, double nu, Eigen::Index d) {
  return 0.5 * (nu + static_cast<double>(d)) * std::log1p(s / nu);
}

struct ScatterConfig {
  enum class Init { identity, second_moment };

  double nu = 1.0;
  double tol_grad = 1e-10;
  double tol_step = 1e-12;
  int max_iter = 500;
  Init init = Init::second_moment;
  /// Skip the domain check when the caller has already done it.
  bool check_domain = true;
  /// Optional starting matrix; overrides `init` when non-empty.
  Matrix start;

  void validate() const {
    if (!(nu > 0.0) || !std::isfinite(nu)) throw NuOutOfRange("nu must be positive and finite");
    if (!(tol_grad > 0.0) || !(tol_step > 0.0)) throw ParameterError("tolerances must be positive");
    if (max_iter < 1) throw ParameterError("max_iter must be at least 1");
  }
};

struct ScatterResult {
  enum class Stop { gradient, step, max_iter };

  SpdMatrix A;
  int iterations = 0;
  double objective = 0.0;
  double grad_norm = 0.0;
  double step_norm = 0.0;
  bool converged = false;
  Stop stop = Stop::max_iter;
  std::vector<double> objective_trace;
};

/// Thrown when the law is outside the existence domain; carries the report.
class DomainViolation : public Error {
 public:
  explicit DomainViolation(DomainReport report)
      : Error(describe(report)), report_(std::move(report)) {}
  const DomainReport& report() const noexcept { return report_; }

 private:
  static std::string describe(const DomainReport& r) {
    return "law outside the existence domain: mass " + std::to_string(r.worst_mass) +
           " on a subspace of dimension " + std::to_string(r.worst_subspace_dim.value_or(-1)) +
           " reaches the threshold " + std::to_string(r.threshold);
  }
  DomainReport report_;
};

namespace detail {

/// s_i = y_i' C y_i for every row of Y.
inline Vector quad_forms(const Matrix& y, const Matrix& c) {
  return (y * c).cwiseProduct(y).rowwise().sum();
}

inline double objective_with_inverse(const EmpiricalSample& q, double log_det, const Matrix& inv, double nu) {
  const Eigen::Index d = q.dim();
  const Vector s = quad_forms(q.points(), inv);
  const Vector s0 = q.points().rowwise().squaredNorm();
  const double half = 0.5 * (nu + static_cast<double>(d));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    acc += q.weight(i) * half * std::log((nu + s(i)) / (nu + s0(i)));
  }
  return 0.5 * log_det + acc;
}

}  // namespace detail

/// Qh(A) for rho = rho_{nu,d}.
inline double objective(const EmpiricalSample& q, const SpdMatrix& a, double nu) {
  if (a.dim() != q.dim()) throw ParameterError("objective: dimension mismatch");
  return detail::objective_with_inverse(q, a.log_det(), a.inverse_matrix(), nu);
}

/// \int u(y'A^{-1}y) yy' dQ(y): the right-hand side of the critical-point equation.
inline SymMatrix fixed_point_map(const EmpiricalSample& q, const SpdMatrix& a, double nu) {
  if (a.dim() != q.dim()) throw ParameterError("fixed_point_map: dimension mismatch");
  const Eigen::Index d = q.dim();
  const Vector s = detail::quad_forms(q.points(), a.inverse_matrix());
  Vector coef(q.size());
  for (Eigen::Index i = 0; i < q.size(); ++i) coef(i) = q.weight(i) * weight_u(s(i), nu, d);
  return SymMatrix(Matrix(q.points().transpose() * coef.asDiagonal() * q.points()));
}

/// Gradient of A -> Qh(A) in the Frobenius geometry:
/// (A^{-1} - \int u(y'A^{-1}y) A^{-1}yy'A^{-1} dQ) / 2.
inline SymMatrix gradient(const EmpiricalSample& q, const SpdMatrix& a, double nu) {
  const Matrix inv = a.inverse_matrix();
  const Matrix b = fixed_point_map(q, a, nu).matrix();
  return SymMatrix(Matrix(0.5 * (inv - inv * b * inv)));
}

/// Gradient of C -> Qh(C^{-1}): (\int u yy' dQ - A) / 2, the mean of the score.
inline SymMatrix gradient_wrt_inverse(const EmpiricalSample& q, const SpdMatrix& a, double nu) {
  return SymMatrix(Matrix(0.5 * (fixed_point_map(q, a, nu).matrix() - a.matrix())));
}

/// Existence check that falls back to the randomized search beyond the exact limits.
inline DomainReport check_scatter_domain_auto(const EmpiricalSample& q, double a0) {
  if (use_exact_domain_check(q.dim(), q.size())) return check_scatter_domain(q, a0);
  // Each trial costs O(n d^2); keep the total work bounded.
  const double budget = 1e8 / static_cast<double>(std::max<Eigen::Index>(q.size(), 1));
  return check_scatter_domain_randomized(q, a0, static_cast<int>(std::clamp(budget, 500.0, 20000.0)));
}

/// A_nu(Q) by fixed-point iteration. Throws DomainViolation outside U_{d,nu+d}
/// and NumericalBreakdown if an iterate loses positive definiteness or the
/// objective increases.
inline ScatterResult solve_scatter(const EmpiricalSample& q_in, const ScatterConfig& cfg) {
  cfg.validate();
  const Eigen::Index d = q_in.dim();
  const double nu = cfg.nu;
  if (cfg.check_domain) {
    DomainReport rep = check_scatter_domain_auto(q_in, nu + static_cast<double>(d));
    if (!rep.member) throw DomainViolation(std::move(rep));
  }
  const EmpiricalSample q = q_in.compressed();

  SpdMatrix a;
  if (cfg.start.size() > 0) {
    a = SpdMatrix(cfg.start);
  } else if (cfg.init == ScatterConfig::Init::second_moment) {
    Matrix m = q.second_moment();
    m += 1e-8 * m.trace() * Matrix::Identity(d, d);
    a = SpdMatrix::is_spd(m) ? SpdMatrix(m) : SpdMatrix::identity(d);
  } else {
    a = SpdMatrix::identity(d);
  }

  ScatterResult res;
  Matrix inv = a.inverse_matrix();
  double obj = detail::objective_with_inverse(q, a.log_det(), inv, nu);
  res.objective_trace.push_back(obj);

  for (int it = 0;; ++it) {
    const Matrix b = fixed_point_map(q, a, nu).matrix();
    res.grad_norm = 0.5 * (inv - inv * b * inv).norm();
    res.iterations = it;
    if (res.grad_norm <= cfg.tol_grad) {
      res.stop = ScatterResult::Stop::gradient;
      break;
    }
    if (it == cfg.max_iter) {
      res.stop = ScatterResult::Stop::max_iter;
      break;
    }
    SpdMatrix next;
    try {
      next = SpdMatrix(b);
    } catch (const NotPositiveDefinite&) {
      throw NumericalBreakdown("solve_scatter: iterate " + std::to_string(it + 1) + " is not positive definite");
    }
    const Matrix next_inv = next.inverse_matrix();
    const double next_obj = detail::objective_with_inverse(q, next.log_det(), next_inv, nu);
    if (next_obj > obj + 1e-12 * std::max(1.0, std::abs(obj))) {
      throw NumericalBreakdown("solve_scatter: objective increased from " + std::to_string(obj) + " to " +
                               std::to_string(next_obj) + " at iteration " + std::to_string(it + 1));
    }
    res.step_norm = (b - a.matrix()).norm() / a.matrix().norm();
    a = std::move(next);
    inv = next_inv;
    obj = next_obj;
    res.objective_trace.push_back(obj);
    if (res.step_norm <= cfg.tol_step) {
      const Matrix b2 = fixed_point_map(q, a, nu).matrix();
      res.grad_norm = 0.5 * (inv - inv * b2 * inv).norm();
      res.iterations = it + 1;
      res.stop = ScatterResult::Stop::step;
      break;
    }
  }
  res.A = a;
  res.objective = obj;
  res.converged = res.grad_norm <= cfg.tol_grad;
  return res;
}

}  // namespace tnu

#endif  // TNU_SCATTER_HPP
