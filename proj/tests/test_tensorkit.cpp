#include <gtest/gtest.h>

#include <random>

#include "blockopinf/tensorkit.hpp"

using namespace bopinf;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

VectorXd random_vector(Index n, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = u(gen);
  return v;
}

}  // namespace

TEST(QuadIndexMap, PairsAreLexicographicAndComplete) {
  for (Index d = 1; d <= 9; ++d) {
    QuadIndexMap map(d);
    ASSERT_EQ(map.size(), d * (d + 1) / 2);
    for (Index k = 1; k < map.size(); ++k) EXPECT_LT(map[k - 1], map[k]);
    for (Index i = 0; i < d; ++i)
      for (Index j = i; j < d; ++j) {
        const Index k = map.index_of(i, j);
        EXPECT_EQ(map[k], std::make_pair(i, j));
        EXPECT_EQ(map.index_of(j, i), k);
      }
  }
  EXPECT_THROW(QuadIndexMap(0), InvalidDimensionError);
}

TEST(CompactSelfKron, SmallExamples) {
  EXPECT_EQ(compact_self_kron(vec({1, 2})), vec({1, 2, 4}));
  EXPECT_EQ(compact_self_kron(vec({0, 0, 0})), VectorXd::Zero(6));
  EXPECT_EQ(compact_self_kron(vec({3})), vec({9}));
  EXPECT_THROW(compact_self_kron(VectorXd()), InvalidDimensionError);
}

TEST(CrossKron, SmallExamples) {
  EXPECT_EQ(cross_kron(vec({1, 2}), vec({3, 4})), vec({3, 4, 6, 8}));
  EXPECT_EQ(cross_kron(vec({1}), vec({5, 6, 7})), vec({5, 6, 7}));
  EXPECT_EQ(cross_kron(vec({0, 1}), vec({1, 1})), vec({0, 0, 1, 1}));
  EXPECT_THROW(cross_kron(VectorXd(), vec({1})), InvalidDimensionError);
  EXPECT_THROW(cross_kron(vec({1}), VectorXd()), InvalidDimensionError);
}

TEST(ColumnwiseFeatures, SelfAndCross) {
  MatrixXd q(2, 1);
  q << 1, 2;
  MatrixXd expect(3, 1);
  expect << 1, 2, 4;
  EXPECT_EQ(compact_features(q), expect);

  MatrixXd eye = MatrixXd::Identity(2, 2);
  MatrixXd e2(3, 2);
  e2 << 1, 0, 0, 0, 0, 1;
  EXPECT_EQ(compact_features(eye), e2);

  MatrixXd qs(1, 2), qf(1, 2);
  qs << 1, 0;
  qf << 2, 3;
  MatrixXd c(1, 2);
  c << 2, 0;
  EXPECT_EQ(cross_features(qs, qf), c);
  EXPECT_THROW(cross_features(qs, MatrixXd::Ones(1, 3)), ShapeError);
}

TEST(CompactSelfKron, FullExpansionRoundTrip) {
  std::mt19937_64 gen(7);
  for (Index d = 1; d <= 8; ++d) {
    const VectorXd v = random_vector(d, gen);
    const VectorXd compact = compact_self_kron(v);
    const VectorXd full = full_from_compact(compact, d);
    EXPECT_LE((full - full_self_kron(v)).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LE((compact_from_full(full, d) - compact).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(CompactSelfKron, IsTwoHomogeneous) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 20; ++trial) {
    const VectorXd v = random_vector(5, gen);
    const double c = std::uniform_real_distribution<double>(-3.0, 3.0)(gen);
    const VectorXd lhs = compact_self_kron(c * v);
    const VectorXd rhs = c * c * compact_self_kron(v);
    EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12 * (1.0 + rhs.cwiseAbs().maxCoeff()));
  }
}

TEST(CrossKron, ReshapesToOuterProduct) {
  std::mt19937_64 gen(13);
  const VectorXd a = random_vector(4, gen), b = random_vector(3, gen);
  const VectorXd k = cross_kron(a, b);
  const MatrixXd outer = a * b.transpose();
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(k(i * 3 + j), outer(i, j));
}

TEST(CompactSelfKron, IntoMatchesAllocatingForm) {
  std::mt19937_64 gen(17);
  const VectorXd v = random_vector(6, gen);
  VectorXd out(compact_size(6));
  compact_self_kron_into(v, out);
  EXPECT_EQ(out, compact_self_kron(v));
}
