#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include <gtest/gtest.h>

#include "hydroscale/random.hpp"
#include "hydroscale/sum_tree.hpp"

using namespace hydroscale;

TEST(Philox, KnownAnswers)
{
  using C = Philox4x32::Counter;
  using K = Philox4x32::Key;
  EXPECT_EQ(Philox4x32::block(C{0, 0, 0, 0}, K{0, 0}), (C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(Philox4x32::block(C{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, K{0xffffffffu, 0xffffffffu}),
            (C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  EXPECT_EQ(Philox4x32::block(C{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, K{0xa4093822u, 0x299f31d0u}),
            (C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(RandomStream, Deterministic)
{
  RandomStream a(42, 3);
  RandomStream b(42, 3);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(a(), b());
}

TEST(RandomStream, StreamsAndSeedsDiffer)
{
  RandomStream a(42, 0);
  RandomStream b(42, 1);
  RandomStream c(43, 0);
  int same_ab = 0;
  int same_ac = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a();
    same_ab += x == b();
    same_ac += x == c();
  }
  EXPECT_LT(same_ab, 3);
  EXPECT_LT(same_ac, 3);
}

TEST(RandomStream, StreamIdsForReplicates)
{
  EXPECT_EQ(initial_state_stream(0), 0u);
  EXPECT_EQ(dynamics_stream(0), 1u);
  EXPECT_EQ(initial_state_stream(5), 10u);
  EXPECT_EQ(dynamics_stream(5), 11u);
}

TEST(RandomStream, UniformMoments)
{
  RandomStream r(7, 0);
  const int n = 200000;
  double s = 0.0;
  double s2 = 0.0;
  double lo = 1.0;
  double hi = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    s += u;
    s2 += u * u;
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  EXPECT_GE(lo, 0.0);
  EXPECT_LT(hi, 1.0);
  EXPECT_NEAR(s / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
  EXPECT_NEAR(s2 / n, 1.0 / 3.0, 0.005);
}

TEST(RandomStream, ExponentialMean)
{
  RandomStream r(8, 0);
  const int n = 100000;
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double e = r.exponential(4.0);
    ASSERT_GE(e, 0.0);
    s += e;
  }
  EXPECT_NEAR(s / n, 0.25, 4.0 * 0.25 / std::sqrt(n));
}

TEST(SumTree, TotalsAndUpdates)
{
  SumTree t(5);
  EXPECT_EQ(t.size(), 5u);
  EXPECT_EQ(t.total(), 0.0);
  t.assign({1.0, 2.0, 0.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(t.total(), 10.0);
  t.set(1, 0.5);
  EXPECT_DOUBLE_EQ(t.total(), 8.5);
  EXPECT_DOUBLE_EQ(t.weight(1), 0.5);
}

TEST(SumTree, FindCumulativeIntervals)
{
  SumTree t(5);
  t.assign({1.0, 2.0, 0.0, 3.0, 4.0});
  EXPECT_EQ(t.find(0.0), 0u);
  EXPECT_EQ(t.find(0.999), 0u);
  EXPECT_EQ(t.find(1.0), 1u);
  EXPECT_EQ(t.find(2.999), 1u);
  EXPECT_EQ(t.find(3.0), 3u);
  EXPECT_EQ(t.find(6.5), 4u);
  EXPECT_EQ(t.find(9.999999), 4u);
}

TEST(SumTree, NeverSelectsZeroWeightLeaf)
{
  SumTree t(7);
  t.assign({0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0});
  for (double u : {0.0, 0.5, 0.9999999, 1.0, 1.5}) EXPECT_EQ(t.find(u), 2u);
}

TEST(SumTree, SamplingFrequencies)
{
  const std::vector<double> w{0.5, 1.5, 3.0, 0.0, 5.0};
  SumTree t(w.size());
  t.assign(w);
  RandomStream r(9, 0);
  std::vector<int> counts(w.size(), 0);
  const int n = 200000;
  for (int i = 0; i < n; ++i) ++counts[t.find(r.uniform() * t.total())];
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double p = w[i] / 10.0;
    EXPECT_NEAR(static_cast<double>(counts[i]) / n, p, 4.0 * std::sqrt(p * (1 - p) / n) + 1e-12);
  }
}
