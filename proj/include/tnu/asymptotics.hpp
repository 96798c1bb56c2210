#ifndef TNU_ASYMPTOTICS_HPP
#define TNU_ASYMPTOTICS_HPP

// Second-order structure of the scatter objective in the inverse C = A^{-1},
// influence functions, and the asymptotic covariance of
// sqrt(n) (estimate - functional).
//
// The Hessian map is normalized so that its quadratic form is
//
//   vec(D)' H vec(D) = ||A^{1/2} D A^{1/2}||_F^2
//                      - (nu+d) \int (y'Dy)^2 / (nu + y'Cy)^2 dQ(y),
//
// i.e. the Hessian of 2 * Qh as a function of C (the second-order Taylor
// term of Qh is half of that form). At A = A_nu(Q) the form is positive
// definite. Scores are scaled to match: the influence function only depends
// on the ratio.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "tnu/errors.hpp"
#include "tnu/locscatter.hpp"
#include "tnu/sample.hpp"
#include "tnu/scatter.hpp"
#include "tnu/symspace.hpp"

namespace tnu {

/// Singular values below this fraction of the largest count as zero.
inline constexpr double kDefaultRankTolerance = 1e-8;

/// Second derivative of C -> 2 Qh(C^{-1}) at C = A^{-1}: the bilinear form
///   (B, D) -> tr(A B A D) - (nu+d) \int (y'By)(y'Dy) / (nu + y'Cy)^2 dQ(y)
/// as a symmetric matrix on SymVec coordinates. At the four-point law
/// {+-sqrt(2) e_j} with nu = 2 its eigenvalues are 1/2, 1/2 and 1.
struct HessianMap {
  Eigen::Index d = 0;
  /// Symmetric matrix on SymVec coordinates, size d(d+1)/2.
  Matrix matrix;
  double min_eigenvalue = 0.0;

  /// vec(D)' H vec(D) / 2, which is the second derivative of Qh in C along D.
  double quadratic_form(const SymMatrix& delta) const {
    const Vector v = sym_to_vec(delta).coords;
    return 0.5 * v.dot(matrix * v);
  }
  SymMatrix apply(const SymMatrix& delta) const {
    return vec_to_sym(SymVec{d, matrix * sym_to_vec(delta).coords});
  }
};

struct AsymptoticCov {
  enum class Parametrization { scatter_A, locscatter_muSigma };

  /// Covariance on SymVec(A) coordinates (scatter), or on
  /// (mu_1..mu_d, SymVec(Sigma)) coordinates (location-scatter).
  Matrix S;
  int rank = 0;
  Parametrization parametrization = Parametrization::scatter_A;
  Eigen::Index d = 0;
  Vector eigenvalues;
  /// Location-scatter only: rank of the mu block.
  int mu_rank = 0;
};

/// Numerical rank of a symmetric PSD matrix: eigenvalues above
/// rel_tol * max(largest eigenvalue, scale). A positive scale lets a matrix
/// that is zero up to roundoff report rank 0.
inline int numerical_rank(const Matrix& s, double rel_tol = kDefaultRankTolerance, double scale = 0.0) {
  if (s.size() == 0) return 0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (s + s.transpose()), Eigen::EigenvaluesOnly);
  const Vector ev = es.eigenvalues().cwiseAbs();
  const double cutoff = rel_tol * std::max(ev.maxCoeff(), scale);
  if (cutoff == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) > cutoff) ++r;
  return r;
}

/// G(y, A) = -A/2 + (nu+d) yy' / (2 (nu + y'A^{-1}y)), the gradient of the
/// per-point loss with respect to C = A^{-1}.
inline SymMatrix score(const Vector& y, const SpdMatrix& a, double nu) {
  const Eigen::Index d = a.dim();
  if (y.size() != d) throw ParameterError("score: dimension mismatch");
  const double s = a.inv_quad(y);
  return SymMatrix(Matrix(-0.5 * a.matrix() + (nu + static_cast<double>(d)) / (2.0 * (nu + s)) * y * y.transpose()));
}

inline HessianMap hessian(const EmpiricalSample& q, const SpdMatrix& a, double nu) {
  const Eigen::Index d = q.dim();
  if (a.dim() != d) throw ParameterError("hessian: dimension mismatch");
  Matrix h = congruence_jacobian(a.matrix());
  const Vector s = detail::quad_forms(q.points(), a.inverse_matrix());
  const double nd = nu + static_cast<double>(d);
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const Vector y = q.point(i);
    const Vector v = sym_to_vec_raw(y * y.transpose());
    const double den = nu + s(i);
    h.noalias() -= (q.weight(i) * nd / (den * den)) * v * v.transpose();
  }
  h = 0.5 * (h + h.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  return HessianMap{d, h, es.eigenvalues()(0)};
}

namespace detail {

/// Factorized Hessian at the functional, applying H^{-1} without inversion.
class InfluenceOperator {
 public:
  InfluenceOperator(const EmpiricalSample& q, const SpdMatrix& a, double nu) : a_(a), nu_(nu) {
    hess_ = hessian(q, a, nu);
    if (!(hess_.min_eigenvalue > 0.0)) {
      throw NumericalBreakdown("Hessian is not positive definite (min eigenvalue " +
                               std::to_string(hess_.min_eigenvalue) + ")");
    }
    llt_.compute(hess_.matrix);
    if (llt_.info() != Eigen::Success) throw NumericalBreakdown("Hessian factorization failed");
  }

  /// Influence on C = A^{-1}: -H^{-1} (2 G(y)).
  Vector inverse_influence(const Vector& y) const {
    const Vector g2 = 2.0 * sym_to_vec(score(y, a_, nu_)).coords;
    return -llt_.solve(g2);
  }
  /// Influence on A: -A IF_C A.
  Vector influence(const Vector& y) const {
    const Matrix ifc = vec_to_sym_raw(inverse_influence(y));
    return sym_to_vec_raw(-a_.matrix() * ifc * a_.matrix());
  }
  const HessianMap& hessian_map() const { return hess_; }

 private:
  SpdMatrix a_;
  double nu_;
  HessianMap hess_;
  Eigen::LLT<Matrix> llt_;
};

inline AsymptoticCov finish_cov(Matrix s, AsymptoticCov::Parametrization p, Eigen::Index d, double rank_tol,
                                double scale) {
  AsymptoticCov out;
  out.S = 0.5 * (s + s.transpose());
  out.parametrization = p;
  out.d = d;
  Eigen::SelfAdjointEigenSolver<Matrix> es(out.S, Eigen::EigenvaluesOnly);
  out.eigenvalues = es.eigenvalues();
  out.rank = numerical_rank(out.S, rank_tol, scale);
  return out;
}

}  // namespace detail

/// Influence function of A_nu at y, given A = A_nu(Q); SymVec coordinates.
inline SymMatrix influence_at(const Vector& y, const EmpiricalSample& q, const SpdMatrix& a, double nu) {
  detail::InfluenceOperator op(q, a, nu);
  return vec_to_sym(SymVec{q.dim(), op.influence(y)});
}

/// Influence function of A_nu at y: the first-order change of A_nu under
/// contamination (1 - eps) Q + eps delta_y.
inline SymMatrix influence(const Vector& y, const EmpiricalSample& q, double nu, ScatterConfig cfg = {}) {
  cfg.nu = nu;
  const ScatterResult fit = solve_scatter(q, cfg);
  return influence_at(y, q, fit.A, nu);
}

/// Covariance of vec(IF(Y)), Y ~ Q, at a known A = A_nu(Q).
inline AsymptoticCov asymptotic_cov_scatter_at(const EmpiricalSample& q, const SpdMatrix& a, double nu,
                                               double rank_tol = kDefaultRankTolerance) {
  detail::InfluenceOperator op(q, a, nu);
  const Eigen::Index k = symvec_size(q.dim());
  Matrix s = Matrix::Zero(k, k);
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const Vector f = op.influence(q.point(i));
    s.noalias() += q.weight(i) * f * f.transpose();
  }
  return detail::finish_cov(std::move(s), AsymptoticCov::Parametrization::scatter_A, q.dim(), rank_tol,
                            a.matrix().squaredNorm());
}

inline AsymptoticCov asymptotic_cov_scatter(const EmpiricalSample& q, double nu, ScatterConfig cfg = {},
                                            double rank_tol = kDefaultRankTolerance) {
  cfg.nu = nu;
  const ScatterResult fit = solve_scatter(q, cfg);
  return asymptotic_cov_scatter_at(q, fit.A, nu, rank_tol);
}

// ---------------------------------------------------------------------------
// Location-scatter via the lifted problem

/// (mu, SymVec(Sigma)) read off a lifted matrix: mu_j = A_{j,d+1},
/// Sigma_ij = A_ij - A_{i,d+1} A_{j,d+1}.
inline Vector locscat_params_from_lifted(const Matrix& a) {
  const Eigen::Index d = a.rows() - 1;
  const Vector mu = a.topRightCorner(d, 1);
  const Matrix sigma = a.topLeftCorner(d, d) - mu * mu.transpose();
  Vector out(d + symvec_size(d));
  out.head(d) = mu;
  out.tail(symvec_size(d)) = sym_to_vec_raw(sigma);
  return out;
}

inline Vector locscat_params(const Vector& mu, const SymMatrix& sigma) {
  Vector out(mu.size() + symvec_size(mu.size()));
  out.head(mu.size()) = mu;
  out.tail(symvec_size(mu.size())) = sym_to_vec(sigma).coords;
  return out;
}

/// Jacobian of locscat_params_from_lifted at A, from SymVec(A) coordinates.
inline Matrix locscat_jacobian(const Matrix& a) {
  const Eigen::Index d = a.rows() - 1;
  const Eigen::Index kin = symvec_size(d + 1);
  const Eigen::Index kout = d + symvec_size(d);
  const Vector mu = a.topRightCorner(d, 1);
  Matrix jac(kout, kin);
  Vector e = Vector::Zero(kin);
  for (Eigen::Index c = 0; c < kin; ++c) {
    e.setZero();
    e(c) = 1.0;
    const Matrix da = vec_to_sym_raw(e);
    const Vector dmu = da.topRightCorner(d, 1);
    const Matrix dsigma = da.topLeftCorner(d, d) - dmu * mu.transpose() - mu * dmu.transpose();
    jac.col(c).head(d) = dmu;
    jac.col(c).tail(symvec_size(d)) = sym_to_vec_raw(dsigma);
  }
  return jac;
}

/// Influence function of (mu_nu, Sigma_nu) at y in (mu, SymVec(Sigma)) coordinates.
inline Vector influence_locscatter(const Vector& y, const EmpiricalSample& p, double nu, ScatterConfig cfg = {}) {
  const LocScatEstimate est = solve_locscatter(p, nu, cfg);
  const EmpiricalSample q = lift(p);
  detail::InfluenceOperator op(q, est.scatter_diag.A, nu - 1.0);
  Vector z(y.size() + 1);
  z.head(y.size()) = y;
  z(y.size()) = 1.0;
  return locscat_jacobian(est.scatter_diag.A.matrix()) * op.influence(z);
}

inline AsymptoticCov asymptotic_cov_locscatter_at(const EmpiricalSample& p, const LocScatEstimate& est,
                                                  double rank_tol = kDefaultRankTolerance) {
  const Eigen::Index d = p.dim();
  const AsymptoticCov lifted = asymptotic_cov_scatter_at(lift(p), est.scatter_diag.A, est.nu - 1.0, rank_tol);
  const Matrix jac = locscat_jacobian(est.scatter_diag.A.matrix());
  const double scale = est.Sigma.matrix().squaredNorm();
  AsymptoticCov out = detail::finish_cov(jac * lifted.S * jac.transpose(),
                                         AsymptoticCov::Parametrization::locscatter_muSigma, d, rank_tol, scale);
  out.mu_rank = numerical_rank(out.S.topLeftCorner(d, d), rank_tol, est.Sigma.matrix().norm());
  return out;
}

inline AsymptoticCov asymptotic_cov_locscatter(const EmpiricalSample& p, double nu, ScatterConfig cfg = {},
                                               double rank_tol = kDefaultRankTolerance) {
  const LocScatEstimate est = solve_locscatter(p, nu, cfg);
  return asymptotic_cov_locscatter_at(p, est, rank_tol);
}

/// Lower bound delta^2 * alpha on the Hessian eigenvalues at A_nu(Q) for laws
/// with Q(|y| > M) <= (1-delta)/(nu+d) and A_nu(Q) in W_delta, where
/// alpha = delta^2 nu / (4 (nu+d) (nu+K^2)) and K = M / sqrt(delta).
inline double hessian_eigenvalue_lower_bound(double m, double delta, double nu, Eigen::Index d) {
  const double k2 = m * m / delta;
  const double nd = nu + static_cast<double>(d);
  const double alpha = delta * delta * nu / (4.0 * nd * (nu + k2));
  return delta * delta * alpha;
}

}  // namespace tnu

#endif  // TNU_ASYMPTOTICS_HPP
