#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "proximity/vector_core.hpp"

using namespace proximity;

TEST(Embedding, RejectsEmptyAndNonFinite) {
  EXPECT_THROW(Embedding(std::vector<float>{}), ContractViolation);
  EXPECT_THROW((Embedding{1.0f, std::numeric_limits<float>::quiet_NaN()}), ContractViolation);
  EXPECT_THROW((Embedding{std::numeric_limits<float>::infinity()}), ContractViolation);
  const Embedding e{1.0f, 2.0f};
  EXPECT_EQ(e.dimension(), 2u);
}

TEST(Distance, IdentityIsZero) {
  std::mt19937_64 rng(1);
  const auto a = oracle::random_embedding(37, rng);
  EXPECT_EQ(distance(a, a, DistanceMetric::L2), 0.0);
}

TEST(Distance, OrthogonalUnitVectorsAreSqrtTwoApart) {
  std::vector<float> x(10, 0.0f), y(10, 0.0f);
  x[0] = 1.0f;
  y[1] = 1.0f;
  EXPECT_DOUBLE_EQ(distance(Embedding(x), Embedding(y), DistanceMetric::L2), std::sqrt(2.0));
}

TEST(Distance, InnerProductIsNegatedDot) {
  const Embedding a{1.0f, 2.0f, 3.0f};
  const Embedding b{4.0f, -5.0f, 6.0f};
  EXPECT_DOUBLE_EQ(distance(a, b, DistanceMetric::InnerProduct), -(4.0 - 10.0 + 18.0));
}

TEST(Distance, DimensionMismatchIsContractViolation) {
  const Embedding a{1.0f, 2.0f};
  const Embedding b{1.0f, 2.0f, 3.0f};
  EXPECT_THROW(distance(a, b, DistanceMetric::L2), ContractViolation);
  EXPECT_THROW(dot(a, b), ContractViolation);
  const std::vector<Embedding> keys{b};
  EXPECT_THROW(batch_distances(a, keys, DistanceMetric::L2), ContractViolation);
}

TEST(Distance, LaneKernelMatchesScalarLoopAt768) {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 1000; ++i) {
    const auto a = oracle::random_embedding(768, rng);
    const auto b = oracle::random_embedding(768, rng);
    const double l2_lanes = std::sqrt(kernels::squared_l2_lanes(a.data(), b.data(), 768));
    const double l2_scalar = std::sqrt(kernels::squared_l2_scalar(a.data(), b.data(), 768));
    const auto l2_oracle = static_cast<double>(oracle::naive_l2(a, b));
    EXPECT_NEAR(l2_lanes, l2_oracle, 1e-4 * l2_oracle);
    EXPECT_NEAR(l2_lanes, l2_scalar, 1e-4 * l2_oracle);

    const double dot_lanes = kernels::dot_lanes(a.data(), b.data(), 768);
    const double dot_scalar = kernels::dot_scalar(a.data(), b.data(), 768);
    const auto dot_oracle = static_cast<double>(oracle::naive_dot(a, b));
    // Dot products can be near zero; scale the tolerance by the operand norms.
    const double scale = std::sqrt(kernels::dot_scalar(a.data(), a.data(), 768) *
                                   kernels::dot_scalar(b.data(), b.data(), 768));
    EXPECT_NEAR(dot_lanes, dot_oracle, 1e-4 * scale);
    EXPECT_NEAR(dot_lanes, dot_scalar, 1e-4 * scale);
  }
}

TEST(Distance, LaneKernelHandlesTailLengths) {
  std::mt19937_64 rng(5);
  for (std::size_t d = 1; d <= 19; ++d) {
    const auto a = oracle::random_embedding(d, rng);
    const auto b = oracle::random_embedding(d, rng);
    EXPECT_NEAR(kernels::squared_l2_lanes(a.data(), b.data(), d),
                kernels::squared_l2_scalar(a.data(), b.data(), d), 1e-12);
    EXPECT_NEAR(kernels::dot_lanes(a.data(), b.data(), d), kernels::dot_scalar(a.data(), b.data(), d), 1e-12);
  }
}

TEST(Distance, L2SymmetricAndTriangleInequality) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 1000; ++i) {
    const auto a = oracle::random_embedding(32, rng);
    const auto b = oracle::random_embedding(32, rng);
    const auto c = oracle::random_embedding(32, rng);
    const double ab = distance(a, b, DistanceMetric::L2);
    EXPECT_EQ(ab, distance(b, a, DistanceMetric::L2));
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(distance(a, c, DistanceMetric::L2), ab + distance(b, c, DistanceMetric::L2) + 1e-5);
  }
}

TEST(BatchDistances, SingletonAndEmpty) {
  const Embedding q{0.5f, -1.0f, 2.0f};
  const std::vector<Embedding> one{q};
  EXPECT_EQ(batch_distances(q, one, DistanceMetric::L2), std::vector<double>{0.0});
  EXPECT_TRUE(batch_distances(q, std::span<const Embedding>{}, DistanceMetric::L2).empty());
}

TEST(BatchDistances, EqualsPerPairCalls) {
  std::mt19937_64 rng(11);
  const auto q = oracle::random_embedding(24, rng);
  std::vector<Embedding> keys;
  std::vector<float> rows;
  for (int i = 0; i < 50; ++i) {
    keys.push_back(oracle::random_embedding(24, rng));
    rows.insert(rows.end(), keys.back().values().begin(), keys.back().values().end());
  }
  for (auto metric : {DistanceMetric::L2, DistanceMetric::InnerProduct}) {
    const auto batch = batch_distances(q, keys, metric);
    const auto batch_rows = batch_distances(q, std::span<const float>(rows), metric);
    ASSERT_EQ(batch.size(), 50u);
    for (std::size_t i = 0; i < keys.size(); ++i) {
      EXPECT_EQ(batch[i], distance(q, keys[i], metric));
      EXPECT_EQ(batch_rows[i], batch[i]);
    }
  }
}

TEST(Metric, ParseRoundTrip) {
  EXPECT_EQ(parse_metric(to_string(DistanceMetric::L2)), DistanceMetric::L2);
  EXPECT_EQ(parse_metric(to_string(DistanceMetric::InnerProduct)), DistanceMetric::InnerProduct);
  EXPECT_THROW(parse_metric("cosine"), ContractViolation);
}
