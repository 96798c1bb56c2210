#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "test_support.hpp"
#include "tnu/domain.hpp"

namespace {

using namespace tnu;
using tnu::testing::cross_law;

/// Largest mass - threshold over all linear subspaces of dimension q < d
/// spanned by sample points, found by trying every point subset.
double brute_force_margin(const EmpiricalSample& s, double a0) {
  const Eigen::Index d = s.dim();
  const Eigen::Index n = s.size();
  double origin = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (s.point(i).norm() == 0.0) origin += s.weight(i);
  double best = origin - (1.0 - static_cast<double>(d) / a0);
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    Matrix span(d, 0);
    for (Eigen::Index i = 0; i < n; ++i)
      if (mask & (1u << i)) {
        span.conservativeResize(Eigen::NoChange, span.cols() + 1);
        span.col(span.cols() - 1) = s.point(i);
      }
    Eigen::FullPivLU<Matrix> lu(span);
    lu.setThreshold(1e-10);
    const Eigen::Index q = lu.rank();
    if (q == 0 || q >= d) continue;
    Eigen::HouseholderQR<Matrix> qr(lu.image(span));
    const Matrix qmat = qr.householderQ() * Matrix::Identity(d, q);
    double mass = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vector y = s.point(i);
      if ((y - qmat * (qmat.transpose() * y)).norm() <= 1e-9 * (1.0 + y.norm())) mass += s.weight(i);
    }
    best = std::max(best, mass - (1.0 - static_cast<double>(d - q) / a0));
  }
  return best;
}

EmpiricalSample random_lattice_sample(std::mt19937_64& gen, Eigen::Index d, Eigen::Index n) {
  std::uniform_int_distribution<int> coord(-2, 2);
  std::uniform_real_distribution<double> uw(0.05, 1.0);
  std::bernoulli_distribution heavy(0.2);
  Matrix pts(n, d);
  Vector w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < d; ++c) pts(i, c) = coord(gen);
    w(i) = heavy(gen) ? 6.0 * uw(gen) : uw(gen);
  }
  return EmpiricalSample(pts, w);
}

TEST(ScatterDomain, HeavyAtomInOneDimension) {
  const EmpiricalSample q = EmpiricalSample::from_values({0.0, 1.0}, {0.7, 0.3});
  const DomainReport rep = check_scatter_domain(q, 3.0);
  EXPECT_FALSE(rep.member);
  ASSERT_TRUE(rep.worst_subspace_dim.has_value());
  EXPECT_EQ(*rep.worst_subspace_dim, 0);
  EXPECT_NEAR(rep.worst_mass, 0.7, 1e-15);
  EXPECT_NEAR(rep.threshold, 2.0 / 3.0, 1e-15);
  EXPECT_GE(rep.worst_mass, rep.threshold);
}

TEST(ScatterDomain, GenericFourPointsArePlanarMembers) {
  Matrix pts(4, 2);
  pts << 1.0, 0.3, -0.4, 1.2, -1.1, -0.7, 0.6, -1.5;
  const EmpiricalSample q = EmpiricalSample::uniform(pts);
  EXPECT_TRUE(check_scatter_domain(q, 4.0).member);
  EXPECT_LT(brute_force_margin(q, 4.0), 0.0);
}

TEST(ScatterDomain, PointMassAtOriginIsNeverMember) {
  for (Eigen::Index d = 1; d <= 4; ++d) {
    const EmpiricalSample q = EmpiricalSample::uniform(Matrix::Zero(1, d));
    for (double extra : {0.1, 1.0, 10.0}) {
      const DomainReport rep = check_scatter_domain(q, static_cast<double>(d) + extra);
      EXPECT_FALSE(rep.member);
      EXPECT_EQ(*rep.worst_subspace_dim, 0);
      EXPECT_DOUBLE_EQ(rep.worst_mass, 1.0);
    }
  }
}

TEST(ScatterDomain, EqualityAtThresholdIsViolation) {
  // Mass exactly 3/4 on the x-axis, threshold 1 - 1/4.
  Matrix pts(4, 2);
  pts << 1.0, 0.0, -2.0, 0.0, 3.0, 0.0, 0.0, 1.0;
  const DomainReport rep = check_scatter_domain(EmpiricalSample::uniform(pts), 4.0);
  EXPECT_FALSE(rep.member);
  EXPECT_EQ(*rep.worst_subspace_dim, 1);
  EXPECT_NEAR(rep.margin(), 0.0, 1e-15);
  EXPECT_EQ(rep.witness_points.size(), 1u);
}

TEST(ScatterDomain, CrossLawIsMember) {
  for (Eigen::Index d = 1; d <= 4; ++d) {
    const DomainReport rep = check_scatter_domain(cross_law(d, std::sqrt(static_cast<double>(d))), d + 2.0);
    EXPECT_TRUE(rep.member) << "d=" << d;
  }
}

TEST(ScatterDomain, RejectsBadThresholdParameter) {
  const EmpiricalSample q = cross_law(2, 1.0);
  EXPECT_THROW(check_scatter_domain(q, 2.0), ParameterError);
  EXPECT_THROW(check_scatter_domain(q, 1.5), ParameterError);
}

TEST(ScatterDomain, ExactLimitsAreEnforced) {
  std::mt19937_64 gen(5);
  const EmpiricalSample big = tnu::testing::random_weighted(gen, 20, 5);
  EXPECT_THROW(check_scatter_domain(big, 7.0), ParameterError);
  EXPECT_TRUE(check_scatter_domain_randomized(big, 7.0).member);
  EXPECT_FALSE(check_scatter_domain_randomized(big, 7.0).exact);
}

TEST(ScatterDomain, AgreesWithBruteForceOnLatticeSamples) {
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> extra(0.2, 3.0);
  int violations = 0;
  for (int rep = 0; rep < 600; ++rep) {
    const Eigen::Index d = 1 + rep % 3;
    const Eigen::Index n = 2 + rep % 9;
    const EmpiricalSample s = random_lattice_sample(gen, d, n);
    const double a0 = static_cast<double>(d) + extra(gen);
    const double brute = brute_force_margin(s, a0);
    const DomainReport r = check_scatter_domain(s, a0);
    ASSERT_EQ(r.member, brute < -kDomainEqualitySlack) << "rep " << rep << " margin " << brute;
    if (!r.member) {
      ++violations;
      EXPECT_NEAR(r.margin(), brute, 1e-12) << "rep " << rep;
      EXPECT_GE(r.worst_mass, r.threshold - kDomainEqualitySlack);
    }
  }
  // Both verdicts must be exercised.
  EXPECT_GT(violations, 50);
  EXPECT_LT(violations, 550);
}

TEST(ScatterDomain, WitnessSpansTheReportedSubspace) {
  std::mt19937_64 gen(22);
  for (int rep = 0; rep < 200; ++rep) {
    const EmpiricalSample s = random_lattice_sample(gen, 3, 8);
    const DomainReport r = check_scatter_domain(s, 3.5);
    if (r.member) continue;
    const Eigen::Index q = *r.worst_subspace_dim;
    ASSERT_EQ(static_cast<Eigen::Index>(r.witness_points.size()), q);
    Matrix span(3, q);
    for (Eigen::Index k = 0; k < q; ++k) span.col(k) = s.point(r.witness_points[static_cast<std::size_t>(k)]);
    if (q == 0) continue;
    Eigen::HouseholderQR<Matrix> qr(span);
    const Matrix basis = qr.householderQ() * Matrix::Identity(3, q);
    double mass = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      const Vector y = s.point(i);
      if ((y - basis * (basis.transpose() * y)).norm() <= 1e-9) mass += s.weight(i);
    }
    EXPECT_NEAR(mass, r.worst_mass, 1e-12);
  }
}

TEST(ScatterDomain, InvariantUnderNonsingularMaps) {
  std::mt19937_64 gen(23);
  for (int rep = 0; rep < 100; ++rep) {
    const EmpiricalSample s = random_lattice_sample(gen, 2, 7);
    const Matrix m = tnu::testing::random_nonsingular(gen, 2);
    const DomainReport a = check_scatter_domain(s, 3.0);
    const DomainReport b = check_scatter_domain(s.linear_image(m), 3.0);
    EXPECT_EQ(a.member, b.member);
    if (!a.member) {
      EXPECT_NEAR(a.margin(), b.margin(), 1e-12);
    }
  }
}

TEST(ScatterDomain, HandlesThousandsOfGaussianPoints) {
  std::mt19937_64 gen(24);
  const EmpiricalSample s = EmpiricalSample::uniform(tnu::testing::gaussian_matrix(gen, 3000, 3));
  EXPECT_TRUE(check_scatter_domain(s, 5.0).member);
  EXPECT_TRUE(check_scatter_domain(lift(EmpiricalSample::uniform(tnu::testing::gaussian_matrix(gen, 2000, 2))), 4.0).member);
}

TEST(ScatterDomain, RandomizedSearchFindsPlantedViolation) {
  std::mt19937_64 gen(25);
  Matrix pts = tnu::testing::gaussian_matrix(gen, 600, 5);
  // 70% of the points on a 2-plane.
  for (Eigen::Index i = 0; i < 420; ++i) pts.row(i).tail(3).setZero();
  const DomainReport rep = check_scatter_domain_randomized(EmpiricalSample::uniform(pts), 6.0);
  EXPECT_FALSE(rep.member);
  EXPECT_FALSE(rep.exact);
  EXPECT_GE(rep.worst_mass, 0.7 - 1e-12);
}

TEST(LocScatDomain, MassOnALine) {
  Matrix pts(10, 2);
  for (Eigen::Index i = 0; i < 9; ++i) pts.row(i) << static_cast<double>(i), 2.0 * static_cast<double>(i) + 1.0;
  pts.row(9) << 5.0, -3.0;
  const DomainReport rep = check_locscat_domain(EmpiricalSample::uniform(pts), 4.0);
  EXPECT_FALSE(rep.member);
  EXPECT_EQ(rep.kind, DomainReport::Kind::locscatter);
  EXPECT_EQ(*rep.worst_subspace_dim, 1);
  EXPECT_NEAR(rep.worst_mass, 0.9, 1e-12);
  EXPECT_NEAR(rep.threshold, 0.75, 1e-15);
}

TEST(LocScatDomain, BalancedTwoPointIsMember) {
  const DomainReport rep = check_locscat_domain(EmpiricalSample::from_values({0.0, 1.0}), 3.0);
  EXPECT_TRUE(rep.member);
}

TEST(LocScatDomain, SinglePointIsNeverMember) {
  for (Eigen::Index d = 1; d <= 3; ++d) {
    Matrix pts = Matrix::Constant(1, d, 0.7);
    const DomainReport rep = check_locscat_domain(EmpiricalSample::uniform(pts), d + 1.5);
    EXPECT_FALSE(rep.member);
    EXPECT_EQ(*rep.worst_subspace_dim, 0);
  }
}

TEST(LocScatDomain, AgreesWithAffineBruteForce) {
  std::mt19937_64 gen(26);
  std::uniform_real_distribution<double> nu(1.05, 4.0);
  for (int rep = 0; rep < 300; ++rep) {
    const Eigen::Index d = 1 + rep % 2;
    const EmpiricalSample s = random_lattice_sample(gen, d, 2 + rep % 8);
    const double a0 = nu(gen) + static_cast<double>(d);
    const double brute = brute_force_margin(lift(s), a0);
    EXPECT_EQ(check_locscat_domain(s, a0).member, brute < -kDomainEqualitySlack) << "rep " << rep;
  }
}

TEST(LocScatDomain, RequiresThresholdAboveDPlusOne) {
  EXPECT_THROW(check_locscat_domain(EmpiricalSample::from_values({0.0, 1.0}), 2.0), ParameterError);
}

TEST(Lift, AppendsUnitCoordinate) {
  const EmpiricalSample one = lift(EmpiricalSample::from_values({0.0}));
  ASSERT_EQ(one.dim(), 2);
  EXPECT_EQ(one.point(0), (Vector(2) << 0.0, 1.0).finished());
  EXPECT_DOUBLE_EQ(one.weight(0), 1.0);

  const EmpiricalSample two = lift(EmpiricalSample::from_values({-1.0, 3.0}, {0.25, 0.75}));
  EXPECT_EQ(two.size(), 2);
  EXPECT_EQ(two.points().col(1), Vector::Ones(2));
  EXPECT_DOUBLE_EQ(two.weight(1), 0.75);
}

TEST(Lift, AffineDependenceBecomesLinearDependence) {
  std::mt19937_64 gen(27);
  std::bernoulli_distribution coin(0.5);
  for (int rep = 0; rep < 200; ++rep) {
    const Eigen::Index d = 1 + rep % 3;
    // d+1 points: affinely dependent when one is an affine combination of others.
    Matrix pts = tnu::testing::gaussian_matrix(gen, d + 1, d);
    const bool dependent = coin(gen);
    if (dependent && d >= 1) pts.row(d) = 0.3 * pts.row(0) + 0.7 * pts.row(d > 1 ? 1 : 0);
    Matrix diffs(d, d);
    for (Eigen::Index i = 0; i < d; ++i) diffs.row(i) = pts.row(i + 1) - pts.row(0);
    const bool affine_dep = std::abs(diffs.determinant()) < 1e-10;
    const Matrix lifted = lift(EmpiricalSample::uniform(pts)).points();
    const bool linear_dep = std::abs(lifted.determinant()) < 1e-10;
    EXPECT_EQ(affine_dep, linear_dep);
    EXPECT_EQ(affine_dep, dependent);
  }
}

TEST(MaxAtom, Examples) {
  const Atom a = max_atom(EmpiricalSample::from_values({0.0, 1.0}, {0.7, 0.3}));
  EXPECT_EQ(a.location(0), 0.0);
  EXPECT_DOUBLE_EQ(a.mass, 0.7);

  std::vector<double> xs;
  for (int i = 0; i < 10; ++i) xs.push_back(5.0 - i);
  const Atom b = max_atom(EmpiricalSample::from_values(xs));
  EXPECT_EQ(b.location(0), -4.0);
  EXPECT_NEAR(b.mass, 0.1, 1e-15);

  const Atom c = max_atom(EmpiricalSample::from_values({2.0, 1.0, 2.0}, {0.4, 0.25, 0.35}));
  EXPECT_EQ(c.location(0), 2.0);
  EXPECT_NEAR(c.mass, 0.75, 1e-15);
}

TEST(Sample, WeightsNormalizeAndValidate) {
  const EmpiricalSample s = EmpiricalSample::from_values({1.0, 2.0, 3.0}, {1.0, 1.0, 2.0});
  EXPECT_NEAR(s.weights().sum(), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(s.weight(2), 0.5);
  EXPECT_THROW(EmpiricalSample::from_values({1.0}, {-1.0}), ParameterError);
  EXPECT_THROW(EmpiricalSample::from_values({1.0, 2.0}, {0.0, 0.0}), ParameterError);
  EXPECT_THROW(EmpiricalSample::from_values({std::nan("")}), ParameterError);
  EXPECT_THROW(EmpiricalSample(Matrix(0, 2), Vector(0)), ParameterError);
}

TEST(Sample, CompressionMergesDuplicates) {
  std::vector<Eigen::Index> origin;
  const EmpiricalSample s = EmpiricalSample::from_values({3.0, 1.0, 3.0, 2.0}, {1.0, 1.0, 1.0, 0.0}).compressed(&origin);
  ASSERT_EQ(s.size(), 2);
  EXPECT_EQ(s.point(0)(0), 1.0);
  EXPECT_NEAR(s.weight(1), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(origin, (std::vector<Eigen::Index>{1, 0}));
}

}  // namespace
