#ifndef TNU_SYMSPACE_HPP
#define TNU_SYMSPACE_HPP

// Symmetric matrices, positive definite matrices, the isometric
// half-vectorization of S_d and the block correspondence between
// (d+1)x(d+1) scatter matrices and location-scatter triples.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "tnu/errors.hpp"

namespace tnu {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Symmetric d x d matrix. Storage is always exactly symmetric.
class SymMatrix {
 public:
  /// Relative asymmetry accepted (and removed) on construction.
  static constexpr double kSymmetryTolerance = 1e-12;

  SymMatrix() = default;

  explicit SymMatrix(const Matrix& m) : m_(m) {
    if (m.rows() != m.cols() || m.rows() == 0) {
      throw ParameterError("SymMatrix: expected a non-empty square matrix, got " +
                           std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
    if (!m.allFinite()) throw ParameterError("SymMatrix: non-finite entry");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > kSymmetryTolerance * scale) {
      throw ParameterError("SymMatrix: asymmetry " + std::to_string(asym) + " exceeds tolerance");
    }
    m_ = 0.5 * (m + m.transpose());
  }

  static SymMatrix identity(Eigen::Index d) { return SymMatrix(Matrix::Identity(d, d)); }
  static SymMatrix zero(Eigen::Index d) { return SymMatrix(Matrix::Zero(d, d)); }
  static SymMatrix outer(const Vector& y) { return SymMatrix(y * y.transpose()); }

  Eigen::Index dim() const { return m_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }
  const Matrix& matrix() const { return m_; }

  double trace() const { return m_.trace(); }
  double frobenius_norm() const { return m_.norm(); }
  /// Largest absolute eigenvalue.
  double operator_norm() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  Vector eigenvalues() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
  }

  /// Frobenius inner product trace(A'B).
  friend double inner(const SymMatrix& a, const SymMatrix& b) {
    return a.m_.cwiseProduct(b.m_).sum();
  }
  friend SymMatrix operator+(const SymMatrix& a, const SymMatrix& b) {
    return SymMatrix(a.m_ + b.m_);
  }
  friend SymMatrix operator-(const SymMatrix& a, const SymMatrix& b) {
    return SymMatrix(a.m_ - b.m_);
  }
  friend SymMatrix operator*(double s, const SymMatrix& a) { return SymMatrix(s * a.m_); }

  /// M X M' for an arbitrary (not necessarily square-compatible) M.
  SymMatrix congruence(const Matrix& m) const { return SymMatrix(m * m_ * m.transpose()); }

 private:
  Matrix m_;
};

/// Symmetric positive definite matrix with a cached LDL' factorization.
class SpdMatrix {
 public:
  /// Pivots below this multiple of the trace reject the matrix.
  static constexpr double kPivotTolerance = 1e-12;

  SpdMatrix() = default;

  explicit SpdMatrix(SymMatrix s) : s_(std::move(s)) {
    const double tr = s_.trace();
    if (!(tr > 0.0)) throw NotPositiveDefinite("SpdMatrix: non-positive trace");
    ldlt_.compute(s_.matrix());
    if (ldlt_.info() != Eigen::Success) throw NotPositiveDefinite("SpdMatrix: factorization failed");
    const Vector pivots = ldlt_.vectorD();
    if (pivots.minCoeff() <= kPivotTolerance * tr) {
      throw NotPositiveDefinite("SpdMatrix: pivot " + std::to_string(pivots.minCoeff()) +
                                " below 1e-12 * trace");
    }
  }
  explicit SpdMatrix(const Matrix& m) : SpdMatrix(SymMatrix(m)) {}

  static SpdMatrix identity(Eigen::Index d) { return SpdMatrix(SymMatrix::identity(d)); }

  /// True iff m is symmetric and passes the pivot test.
  static bool is_spd(const Matrix& m) {
    try {
      SpdMatrix tmp(m);
      return true;
    } catch (const Error&) {
      return false;
    }
  }

  Eigen::Index dim() const { return s_.dim(); }
  const SymMatrix& sym() const { return s_; }
  const Matrix& matrix() const { return s_.matrix(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return s_(i, j); }

  double log_det() const { return ldlt_.vectorD().array().log().sum(); }
  Vector solve(const Vector& b) const { return ldlt_.solve(b); }
  Matrix solve(const Matrix& b) const { return ldlt_.solve(b); }
  /// y' A^{-1} y
  double inv_quad(const Vector& y) const { return y.dot(ldlt_.solve(y)); }

  Matrix inverse_matrix() const {
    const Matrix inv = ldlt_.solve(Matrix::Identity(dim(), dim()));
    return 0.5 * (inv + inv.transpose());
  }
  SpdMatrix inverse() const { return SpdMatrix(inverse_matrix()); }

  /// Symmetric square root via eigen-decomposition.
  Matrix sqrt_matrix() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(matrix());
    return es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() *
           es.eigenvectors().transpose();
  }

 private:
  SymMatrix s_;
  Eigen::LDLT<Matrix> ldlt_;
};

// ---------------------------------------------------------------------------
// Half-vectorization

/// Coordinates of a symmetric matrix in the orthonormal basis of S_d:
/// diagonal entries first, then sqrt(2) * M(i,j) for i < j in row-major order.
struct SymVec {
  Eigen::Index d = 0;
  Vector coords;
};

inline Eigen::Index symvec_size(Eigen::Index d) { return d * (d + 1) / 2; }

/// Recovers d from d(d+1)/2; throws if len is not triangular.
inline Eigen::Index symvec_dim(Eigen::Index len) {
  Eigen::Index d = 0;
  while (symvec_size(d) < len) ++d;
  if (symvec_size(d) != len) {
    throw ParameterError("length " + std::to_string(len) + " is not d(d+1)/2");
  }
  return d;
}

/// Index pair (i, j), i <= j, of coordinate k.
inline std::pair<Eigen::Index, Eigen::Index> symvec_entry(Eigen::Index d, Eigen::Index k) {
  if (k < d) return {k, k};
  k -= d;
  for (Eigen::Index i = 0; i < d; ++i) {
    const Eigen::Index row = d - 1 - i;
    if (k < row) return {i, i + 1 + k};
    k -= row;
  }
  throw ParameterError("symvec_entry: index out of range");
}

inline Vector sym_to_vec_raw(const Matrix& m) {
  const Eigen::Index d = m.rows();
  Vector v(symvec_size(d));
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < d; ++i) v(k++) = m(i, i);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i + 1; j < d; ++j) v(k++) = M_SQRT2 * 0.5 * (m(i, j) + m(j, i));
  return v;
}

inline Matrix vec_to_sym_raw(const Vector& v) {
  const Eigen::Index d = symvec_dim(v.size());
  Matrix m(d, d);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < d; ++i) m(i, i) = v(k++);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i + 1; j < d; ++j) {
      m(i, j) = m(j, i) = v(k++) / M_SQRT2;
    }
  return m;
}

inline SymVec sym_to_vec(const SymMatrix& m) { return SymVec{m.dim(), sym_to_vec_raw(m.matrix())}; }

inline SymMatrix vec_to_sym(const SymVec& v) {
  if (v.coords.size() != symvec_size(v.d)) {
    throw ParameterError("vec_to_sym: " + std::to_string(v.coords.size()) +
                         " coordinates for d=" + std::to_string(v.d));
  }
  return SymMatrix(vec_to_sym_raw(v.coords));
}

/// Matrix of the linear map X -> M X M' in SymVec coordinates.
inline Matrix congruence_jacobian(const Matrix& m) {
  const Eigen::Index d = m.rows();
  const Eigen::Index k = symvec_size(d);
  Matrix jac(k, k);
  Vector e = Vector::Zero(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    e.setZero();
    e(c) = 1.0;
    jac.col(c) = sym_to_vec_raw(m * vec_to_sym_raw(e) * m.transpose());
  }
  return jac;
}

// ---------------------------------------------------------------------------
// Location-scatter embedding
//
//   A(Sigma, mu, gamma) = gamma * [[Sigma + mu mu', mu], [mu', 1]]

struct EmbeddedScatter {
  SpdMatrix A;
  SpdMatrix Sigma;
  Vector mu;
  double gamma = 1.0;
};

inline EmbeddedScatter embed(const SpdMatrix& sigma, const Vector& mu, double gamma = 1.0) {
  const Eigen::Index d = sigma.dim();
  if (mu.size() != d) throw ParameterError("embed: mu has wrong dimension");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ParameterError("embed: gamma must be positive");
  Matrix a(d + 1, d + 1);
  a.topLeftCorner(d, d) = sigma.matrix() + mu * mu.transpose();
  a.topRightCorner(d, 1) = mu;
  a.bottomLeftCorner(1, d) = mu.transpose();
  a(d, d) = 1.0;
  return EmbeddedScatter{SpdMatrix(Matrix(gamma * a)), sigma, mu, gamma};
}

/// Closed-form inverse of embed(Sigma, mu, gamma).A.
inline Matrix embedded_inverse(const SpdMatrix& sigma, const Vector& mu, double gamma) {
  const Eigen::Index d = sigma.dim();
  const Vector sinv_mu = sigma.solve(mu);
  Matrix inv(d + 1, d + 1);
  inv.topLeftCorner(d, d) = sigma.inverse_matrix();
  inv.topRightCorner(d, 1) = -sinv_mu;
  inv.bottomLeftCorner(1, d) = -sinv_mu.transpose();
  inv(d, d) = 1.0 + mu.dot(sinv_mu);
  return inv / gamma;
}

inline EmbeddedScatter extract(const SpdMatrix& a) {
  const Eigen::Index d = a.dim() - 1;
  if (d < 1) throw ParameterError("extract: need dimension >= 2");
  const double gamma = a(d, d);
  if (!(gamma > 0.0)) throw DegeneracyError("extract: A[d+1][d+1] must be positive");
  Vector mu = a.matrix().topRightCorner(d, 1) / gamma;
  Matrix sigma = a.matrix().topLeftCorner(d, d) / gamma - mu * mu.transpose();
  try {
    return EmbeddedScatter{a, SpdMatrix(sigma), std::move(mu), gamma};
  } catch (const NotPositiveDefinite&) {
    throw DegeneracyError("extract: resulting Sigma is not positive definite");
  }
}

/// Unvalidated input: checks the corner before requiring positive definiteness.
inline EmbeddedScatter extract(const Matrix& a) {
  if (a.rows() < 2 || a.rows() != a.cols()) throw ParameterError("extract: need a square matrix of size >= 2");
  if (!(a(a.rows() - 1, a.cols() - 1) > 0.0)) throw DegeneracyError("extract: A[d+1][d+1] must be positive");
  try {
    return extract(SpdMatrix(a));
  } catch (const NotPositiveDefinite&) {
    throw DegeneracyError("extract: A is not positive definite");
  }
}

}  // namespace tnu

#endif  // TNU_SYMSPACE_HPP
