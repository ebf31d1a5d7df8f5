#include "gsde/core.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>
#include <stdexcept>

using namespace gsde;

TEST(VolBounds, Validation) {
  EXPECT_NO_THROW(VolBounds(1.0, 2.0, 1));
  EXPECT_THROW(VolBounds(0.0, 1.0, 2), std::invalid_argument);
  EXPECT_THROW(VolBounds(1.0, 1.0, 2), std::invalid_argument);
  EXPECT_THROW(VolBounds(2.0, 1.0, 1), std::invalid_argument);
  EXPECT_THROW(VolBounds(-1.0, 1.0, 1), std::invalid_argument);
  EXPECT_THROW(VolBounds(1.0, 2.0, 0), std::invalid_argument);
  const VolBounds b(1.0, 2.0, 3);
  EXPECT_EQ(b.var_lo(), 1.0);
  EXPECT_EQ(b.var_hi(), 4.0);
}

TEST(SymMatrix, ConstructionSymmetrizes) {
  Eigen::MatrixXd m(2, 2);
  m << 1.0, 2.0, 4.0, 3.0;
  const SymMatrix s(m);
  EXPECT_EQ(s(0, 1), 3.0);
  EXPECT_EQ(s(1, 0), 3.0);
}

TEST(SymMatrix, DiagonalEigensystemIsExactAndSorted) {
  const double d[] = {3.0, -1.0, 2.0};
  const auto es = SymMatrix::diagonal(d).eigensystem();
  EXPECT_EQ(es.values(0), -1.0);
  EXPECT_EQ(es.values(1), 2.0);
  EXPECT_EQ(es.values(2), 3.0);
}

TEST(SymMatrix, EigenvaluesMatchJacobiOracle) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + trial % 5;
    const auto a = oracle::random_symmetric(n, rng);
    Eigen::MatrixXd m(n, n);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t l = 0; l < n; ++l) m(k, l) = a[k][l];
    const auto ev = SymMatrix(m).eigenvalues();
    const auto ref = oracle::jacobi_eigenvalues(a);
    for (std::size_t k = 0; k < n; ++k) EXPECT_NEAR(ev(k), ref[k], 1e-12);
  }
}

TEST(SymMatrix, EigensystemReconstructs) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = oracle::random_symmetric(4, rng);
    Eigen::MatrixXd m(4, 4);
    for (int k = 0; k < 4; ++k)
      for (int l = 0; l < 4; ++l) m(k, l) = a[k][l];
    const auto es = SymMatrix(m).eigensystem();
    const Eigen::MatrixXd r = es.vectors * es.values.asDiagonal() * es.vectors.transpose();
    EXPECT_LT((r - m).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(SymMatrix, SqrtOfScaledIdentityIsExact) {
  const Eigen::MatrixXd r = symmetric_sqrt(SymMatrix::identity(3, 4.0));
  EXPECT_EQ(r, (2.0 * Eigen::MatrixXd::Identity(3, 3)).eval());
}

TEST(SymMatrix, PairingAndDimensionMismatch) {
  const double a[] = {1.0, 2.0};
  const double b[] = {3.0, 4.0};
  EXPECT_EQ(matrix_pair(SymMatrix::diagonal(a), SymMatrix::diagonal(b)), 11.0);
  EXPECT_THROW(matrix_pair(SymMatrix::identity(2), SymMatrix::identity(3)), std::invalid_argument);
}

TEST(TimeGrid, StepsAndEndpoints) {
  const TimeGrid g(0.0, 1.0, 0.25);
  EXPECT_EQ(g.n_steps(), 4u);
  EXPECT_EQ(g.time(0), 0.0);
  EXPECT_EQ(g.time(4), 1.0);
  EXPECT_EQ(g.lag_steps(0.5), 2u);
  EXPECT_THROW(g.lag_steps(0.3), std::invalid_argument);
  EXPECT_EQ(g.index_of(0.75), 3u);
  EXPECT_THROW(TimeGrid(0.0, 1.0, 0.3), std::invalid_argument);
  EXPECT_THROW(TimeGrid(0.0, 1.0, 0.0), std::invalid_argument);
  EXPECT_EQ(TimeGrid(1.0, 1.0, 0.1).n_steps(), 0u);
}

TEST(Segment, InterpolationAndDomain) {
  // samples at s = -1, -0.5, 0 of f(s) = 2s + 1
  const SegmentPath p(1.0, 1, 0.5, {-1.0, 0.0, 1.0});
  EXPECT_EQ(p.eval(-1.0, 0), -1.0);
  EXPECT_EQ(p.eval(0.0, 0), 1.0);
  EXPECT_DOUBLE_EQ(p.eval(-0.25, 0), 0.5);
  EXPECT_EQ(p.at_zero(0), 1.0);
  EXPECT_THROW(p.eval(0.1, 0), std::invalid_argument);
  EXPECT_THROW(p.eval(-1.1, 0), std::invalid_argument);
  EXPECT_EQ(p.view().sup_norm(), 1.0);
}

TEST(Segment, ZeroDelayHasOneSample) {
  EXPECT_EQ(segment_sample_count(0.0, 0.1), 1u);
  const double v[] = {3.0, -2.0};
  const SegmentPath p = SegmentPath::constant(0.0, 2, 0.0, v);
  EXPECT_EQ(p.size(), 1u);
  EXPECT_EQ(p.eval(0.0, 1), -2.0);
}

TEST(Segment, OrderMinDistance) {
  const SegmentPath a(0.5, 1, 0.25, {0.0, 1.0, 2.0});
  const SegmentPath b(0.5, 1, 0.25, {1.0, 0.5, 2.0});
  EXPECT_FALSE(segment_order_leq(a, b));
  const SegmentPath m = segment_min(a, b);
  EXPECT_EQ(m.samples(), (std::vector<double>{0.0, 0.5, 2.0}));
  EXPECT_TRUE(segment_order_leq(m, a));
  EXPECT_TRUE(segment_order_leq(m, b));
  EXPECT_EQ(segment_distance(a, b), 1.0);
  const SegmentPath c(0.25, 1, 0.25, {0.0, 1.0});
  EXPECT_THROW(segment_order_leq(a, c), std::invalid_argument);
}

TEST(Segment, FromFunctionSamplesExactZero) {
  const SegmentPath p = SegmentPath::from_function(0.3, 1, 0.1, [](double s, std::size_t) { return s; });
  EXPECT_EQ(p.size(), 4u);
  EXPECT_EQ(p.at_zero(0), 0.0);
  EXPECT_DOUBLE_EQ(p.sample(0, 0), -0.3);
}

// Property: min(a, b) is below both and the distance is symmetric.
TEST(Segment, MinDistanceProperties) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> va(6), vb(6);
    for (auto& v : va) v = u(rng);
    for (auto& v : vb) v = u(rng);
    const SegmentPath a(0.4, 2, 0.2, va), b(0.4, 2, 0.2, vb);
    const SegmentPath m = segment_min(a, b);
    ASSERT_TRUE(segment_order_leq(m, a));
    ASSERT_TRUE(segment_order_leq(m, b));
    ASSERT_EQ(segment_distance(a, b), segment_distance(b, a));
    ASSERT_EQ(segment_distance(a, a), 0.0);
  }
}
