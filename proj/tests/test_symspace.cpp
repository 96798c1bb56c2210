#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"
#include "tnu/symspace.hpp"

namespace {

using namespace tnu;
using tnu::testing::gaussian_matrix;
using tnu::testing::gaussian_vector;
using tnu::testing::random_spd;

Matrix random_symmetric(std::mt19937_64& gen, Eigen::Index d) {
  const Matrix g = gaussian_matrix(gen, d, d);
  return 0.5 * (g + g.transpose());
}

TEST(SymMatrix, StoresExactlySymmetricEntries) {
  Matrix m(2, 2);
  m << 1.0, 2.0, 2.0 + 1e-14, 3.0;
  const SymMatrix s(m);
  EXPECT_EQ(s(0, 1), s(1, 0));
}

TEST(SymMatrix, RejectsAsymmetricInput) {
  Matrix m(2, 2);
  m << 1.0, 2.0, 2.5, 3.0;
  EXPECT_THROW(SymMatrix{m}, ParameterError);
  EXPECT_THROW(SymMatrix{Matrix(2, 3)}, ParameterError);
}

TEST(SymMatrix, NormsSatisfyDimensionSandwich) {
  std::mt19937_64 gen(11);
  for (Eigen::Index d = 1; d <= 5; ++d) {
    for (int rep = 0; rep < 20; ++rep) {
      const SymMatrix s(random_symmetric(gen, d));
      const double op = s.operator_norm();
      const double fro = s.frobenius_norm();
      EXPECT_LE(op, fro * (1 + 1e-12));
      EXPECT_LE(fro, std::sqrt(static_cast<double>(d)) * op * (1 + 1e-12));
    }
  }
}

TEST(SpdMatrix, RejectsIndefiniteAndSingular) {
  Matrix m(2, 2);
  m << 1.0, 2.0, 2.0, 1.0;
  EXPECT_THROW(SpdMatrix{m}, NotPositiveDefinite);
  EXPECT_THROW(SpdMatrix{Matrix(Matrix::Zero(3, 3))}, NotPositiveDefinite);
  Matrix rank1 = Vector::Ones(3) * Vector::Ones(3).transpose();
  EXPECT_THROW(SpdMatrix{rank1}, NotPositiveDefinite);
  EXPECT_FALSE(SpdMatrix::is_spd(rank1));
}

TEST(SpdMatrix, DoubleInverseRecoversMatrix) {
  std::mt19937_64 gen(12);
  for (int rep = 0; rep < 50; ++rep) {
    const SpdMatrix a = random_spd(gen, 1 + rep % 5);
    const Matrix back = a.inverse().inverse().matrix();
    EXPECT_LE((back - a.matrix()).norm() / a.matrix().norm(), 1e-10);
  }
}

TEST(SpdMatrix, LogDetSolveAndSqrtAgreeWithDenseAlgebra) {
  std::mt19937_64 gen(13);
  const SpdMatrix a = random_spd(gen, 4);
  EXPECT_NEAR(a.log_det(), std::log(a.matrix().determinant()), 1e-10);
  const Vector y = gaussian_vector(gen, 4);
  EXPECT_NEAR(a.inv_quad(y), y.dot(a.matrix().inverse() * y), 1e-10);
  const Matrix r = a.sqrt_matrix();
  EXPECT_LE((r * r - a.matrix()).norm(), 1e-10);
  EXPECT_LE((r - r.transpose()).norm(), 1e-12);
}

TEST(SymVec, IdentityCoordinates) {
  const SymVec v = sym_to_vec(SymMatrix::identity(2));
  ASSERT_EQ(v.coords.size(), 3);
  EXPECT_DOUBLE_EQ(v.coords(0), 1.0);
  EXPECT_DOUBLE_EQ(v.coords(1), 1.0);
  EXPECT_DOUBLE_EQ(v.coords(2), 0.0);
  EXPECT_EQ(vec_to_sym(v).matrix(), Matrix::Identity(2, 2));
}

TEST(SymVec, OffDiagonalCarriesRootTwo) {
  Matrix m(2, 2);
  m << 0.0, 1.0, 1.0, 0.0;
  const SymVec v = sym_to_vec(SymMatrix(m));
  EXPECT_DOUBLE_EQ(v.coords(2), std::sqrt(2.0));
  EXPECT_NEAR(v.coords.squaredNorm(), 2.0, 1e-15);
  EXPECT_NEAR(v.coords.squaredNorm(), m.squaredNorm(), 1e-15);
}

TEST(SymVec, RoundTripIsExactForRepresentableEntries) {
  Matrix m(3, 3);
  m << 1.0, -2.0, 0.5, -2.0, 4.0, 8.0, 0.5, 8.0, -1.0;
  EXPECT_EQ(vec_to_sym(sym_to_vec(SymMatrix(m))).matrix(), m);
}

TEST(SymVec, RoundTripRandomWithinRounding) {
  std::mt19937_64 gen(14);
  for (Eigen::Index d = 1; d <= 6; ++d) {
    const Matrix m = random_symmetric(gen, d);
    EXPECT_LE((vec_to_sym(sym_to_vec(SymMatrix(m))).matrix() - m).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(SymVec, InnerProductIsTraceOfProduct) {
  std::mt19937_64 gen(15);
  for (Eigen::Index d = 1; d <= 6; ++d) {
    const SymMatrix a(random_symmetric(gen, d));
    const SymMatrix b(random_symmetric(gen, d));
    const double tr = (a.matrix() * b.matrix()).trace();
    EXPECT_NEAR(sym_to_vec(a).coords.dot(sym_to_vec(b).coords), tr, 1e-12);
    EXPECT_NEAR(inner(a, b), tr, 1e-12);
  }
}

TEST(SymVec, EntryIndexingMatchesLayout) {
  const Eigen::Index d = 4;
  Matrix m(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = 10.0 * static_cast<double>(std::min(i, j)) + static_cast<double>(std::max(i, j));
  const Vector v = sym_to_vec_raw(m);
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    const auto [i, j] = symvec_entry(d, k);
    EXPECT_NEAR(v(k), (i == j ? 1.0 : std::sqrt(2.0)) * m(i, j), 1e-12);
  }
  EXPECT_EQ(symvec_dim(10), 4);
  EXPECT_THROW(symvec_dim(7), ParameterError);
}

TEST(SymVec, CongruenceJacobianMatchesDirectMap) {
  std::mt19937_64 gen(16);
  const Matrix m = gaussian_matrix(gen, 3, 3);
  const Matrix x = random_symmetric(gen, 3);
  EXPECT_LE((congruence_jacobian(m) * sym_to_vec_raw(x) - sym_to_vec_raw(m * x * m.transpose())).norm(), 1e-12);
}

TEST(Embedding, IdentityBlock) {
  const EmbeddedScatter e = embed(SpdMatrix::identity(1), Vector::Zero(1));
  EXPECT_EQ(e.A.matrix(), Matrix::Identity(2, 2));
}

TEST(Embedding, TwoPointFunctionalBlock) {
  Matrix sigma(1, 1);
  sigma << 0.25;
  Vector mu(1);
  mu << 0.5;
  const EmbeddedScatter e = embed(SpdMatrix(sigma), mu);
  Matrix expect(2, 2);
  expect << 0.5, 0.5, 0.5, 1.0;
  EXPECT_LE((e.A.matrix() - expect).norm(), 1e-15);
  // Closed-form inverse against dense inversion.
  EXPECT_LE((embedded_inverse(SpdMatrix(sigma), mu, 1.0) - expect.inverse()).norm(), 1e-12);

  const EmbeddedScatter back = extract(e.A);
  EXPECT_NEAR(back.Sigma(0, 0), 0.25, 1e-15);
  EXPECT_NEAR(back.mu(0), 0.5, 1e-15);
  EXPECT_NEAR(back.gamma, 1.0, 1e-15);
}

TEST(Embedding, ExtractOfIdentity) {
  const EmbeddedScatter e = extract(SpdMatrix::identity(3));
  EXPECT_EQ(e.Sigma.matrix(), Matrix::Identity(2, 2));
  EXPECT_EQ(e.mu, Vector::Zero(2));
  EXPECT_EQ(e.gamma, 1.0);
}

TEST(Embedding, RoundTripAndBlockIdentities) {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> ug(0.2, 5.0);
  for (int rep = 0; rep < 100; ++rep) {
    const Eigen::Index d = 1 + rep % 4;
    const SpdMatrix sigma = random_spd(gen, d);
    const Vector mu = gaussian_vector(gen, d);
    const double gamma = ug(gen);
    const EmbeddedScatter e = embed(sigma, mu, gamma);
    const EmbeddedScatter back = extract(e.A);
    EXPECT_LE((back.Sigma.matrix() - sigma.matrix()).norm(), 1e-10 * sigma.matrix().norm());
    EXPECT_LE((back.mu - mu).norm(), 1e-10 * (1 + mu.norm()));
    EXPECT_NEAR(back.gamma, gamma, 1e-12 * gamma);

    const Matrix inv = embedded_inverse(sigma, mu, gamma);
    EXPECT_LE((inv * e.A.matrix() - Matrix::Identity(d + 1, d + 1)).norm(), 1e-8);

    // (y',1) A^{-1} (y',1)' = (1 + (y-mu)' Sigma^{-1} (y-mu)) / gamma
    const Vector y = gaussian_vector(gen, d);
    Vector z(d + 1);
    z << y, 1.0;
    EXPECT_NEAR(e.A.inv_quad(z), (1.0 + sigma.inv_quad(y - mu)) / gamma, 1e-9 * (1 + e.A.inv_quad(z)));
  }
}

TEST(Embedding, ExtractRejectsDegenerateCorner) {
  Matrix m = Matrix::Identity(3, 3);
  m(2, 2) = 0.0;
  EXPECT_THROW(extract(m), DegeneracyError);
  m(2, 2) = -1.0;
  EXPECT_THROW(extract(m), DegeneracyError);
  EXPECT_THROW(embed(SpdMatrix::identity(1), Vector::Zero(1), 0.0), ParameterError);
  EXPECT_THROW(embed(SpdMatrix::identity(1), Vector::Zero(1), -1.0), ParameterError);
}

}  // namespace
