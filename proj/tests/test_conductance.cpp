#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "hydroscale/conductance.hpp"

using namespace hydroscale;

namespace
{

ConductanceFunction membrane() { return ConductanceFunction(1.0, {{0.5, 1.0}}); }

ConductanceFunction random_w(std::mt19937_64& rng)
{
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int atoms = static_cast<int>(rng() % 4);
  std::vector<double> locs;
  for (int i = 0; i < atoms; ++i) locs.push_back(u(rng));
  std::sort(locs.begin(), locs.end());
  locs.erase(std::unique(locs.begin(), locs.end()), locs.end());
  std::vector<Atom> list;
  for (double l : locs) list.push_back({l, 0.05 + 2.0 * u(rng)});
  return ConductanceFunction(0.1 + 3.0 * u(rng), list);
}

}  // namespace

TEST(EvalW, IdentityAtQuarter) { EXPECT_DOUBLE_EQ(eval_w(ConductanceFunction::identity(), 0.25), 0.25); }

TEST(EvalW, AtomIncludedAtItsLocation) { EXPECT_DOUBLE_EQ(eval_w(membrane(), 0.5), 1.5); }

TEST(EvalW, PeriodicExtensionPastOne) { EXPECT_DOUBLE_EQ(eval_w(membrane(), 1.25), 2.25); }

TEST(EvalW, VanishesAtOrigin)
{
  EXPECT_EQ(eval_w(membrane(), 0.0), 0.0);
  const ConductanceFunction at_zero(1.0, {{0.0, 2.0}});
  EXPECT_EQ(eval_w(at_zero, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(eval_w(at_zero, 1.0), 3.0);
  EXPECT_DOUBLE_EQ(eval_w(at_zero, 0.999), 0.999);
}

TEST(EvalW, RightContinuousAtAtom)
{
  const ConductanceFunction w = membrane();
  EXPECT_NEAR(eval_w(w, 0.5 - 1e-12), 0.5, 1e-11);
  EXPECT_DOUBLE_EQ(eval_w(w, 0.5), 1.5);
  EXPECT_NEAR(eval_w(w, 0.5 + 1e-12), 1.5, 1e-11);
}

TEST(EvalW, NegativeArgumentsUsePeriodicIncrements)
{
  const ConductanceFunction w = membrane();
  EXPECT_DOUBLE_EQ(eval_w(w, -0.25), -0.25);
  EXPECT_DOUBLE_EQ(eval_w(w, -0.5), -0.5);
  EXPECT_NEAR(eval_w(w, -0.5 - 1e-12), -1.5, 1e-11);
  EXPECT_DOUBLE_EQ(eval_w(w, -1.0), -2.0);
}

TEST(Increment, IdentityHalf) { EXPECT_DOUBLE_EQ(increment(ConductanceFunction::identity(), 0.0, 0.5), 0.5); }

TEST(Increment, AtomInsideHalfOpenCell) { EXPECT_DOUBLE_EQ(increment(membrane(), 3.0 / 8, 4.0 / 8), 1.125); }

TEST(Increment, AtomOutsideWhenAtLeftEndpoint) { EXPECT_DOUBLE_EQ(increment(membrane(), 4.0 / 8, 5.0 / 8), 0.125); }

TEST(Increment, PeriodicOverUnitIntervals)
{
  const ConductanceFunction w = membrane();
  for (double x : {0.0, 0.3, 0.7}) EXPECT_DOUBLE_EQ(increment(w, x, x + 1.0), 2.0);
}

TEST(Increment, RejectsReversedInterval) { EXPECT_THROW(increment(membrane(), 0.6, 0.5), std::invalid_argument); }

TEST(Conductance, IdentityIsOne)
{
  for (int x = 0; x < 8; ++x) EXPECT_DOUBLE_EQ(conductance(ConductanceFunction::identity(), 8, x), 1.0);
}

TEST(Conductance, MembraneBond)
{
  EXPECT_DOUBLE_EQ(conductance(membrane(), 8, 3), 1.0 / 9.0);
  EXPECT_DOUBLE_EQ(conductance(membrane(), 8, 0), 1.0);
  EXPECT_DOUBLE_EQ(conductance(membrane(), 8, 4), 1.0);
}

TEST(Conductance, RejectsBadArguments)
{
  EXPECT_THROW(conductance(membrane(), 1, 0), std::invalid_argument);
  EXPECT_THROW(conductance(membrane(), 8, 8), std::out_of_range);
  EXPECT_THROW(conductance(membrane(), 8, -1), std::out_of_range);
}

TEST(WWeights, Identity)
{
  const auto w = w_weights(ConductanceFunction::identity(), 4);
  for (double v : w) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(WWeights, MembraneCell)
{
  const auto w = w_weights(membrane(), 4);
  const std::vector<double> expected{0.25, 1.25, 0.25, 0.25};
  ASSERT_EQ(w.size(), expected.size());
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_DOUBLE_EQ(w[i], expected[i]);
}

TEST(WWeights, SumToTotalMass)
{
  for (const auto& w : {ConductanceFunction::identity(), membrane()}) {
    double s = 0.0;
    for (double v : w_weights(w, 4)) s += v;
    EXPECT_NEAR(s, w(1.0), 1e-15);
  }
}

TEST(ConductanceFunctionValidation, RejectsInvalidSpecifications)
{
  EXPECT_THROW(ConductanceFunction(0.0), std::invalid_argument);
  EXPECT_THROW(ConductanceFunction(-1.0), std::invalid_argument);
  EXPECT_THROW(ConductanceFunction(1.0, {{1.0, 1.0}}), std::invalid_argument);
  EXPECT_THROW(ConductanceFunction(1.0, {{-0.1, 1.0}}), std::invalid_argument);
  EXPECT_THROW(ConductanceFunction(1.0, {{0.5, 0.0}}), std::invalid_argument);
  EXPECT_THROW(ConductanceFunction(1.0, {{0.6, 1.0}, {0.2, 1.0}}), std::invalid_argument);
  EXPECT_THROW(ConductanceFunction(1.0, {{0.2, 1.0}, {0.2, 1.0}}), std::invalid_argument);
}

TEST(ConductanceProfile, UniformAndDefault)
{
  const ConductanceProfile def;
  EXPECT_EQ(def.dim, 1);
  EXPECT_DOUBLE_EQ(def.axis(0).slope(), 1.0);
  const auto p = ConductanceProfile::uniform(3, membrane());
  EXPECT_EQ(p.dim, 3);
  EXPECT_EQ(p.per_axis.size(), 3u);
  EXPECT_THROW(ConductanceProfile(std::vector<ConductanceFunction>{}), std::invalid_argument);
}

TEST(ConductanceProperties, RandomFunctions)
{
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    const ConductanceFunction w = random_w(rng);
    double a = u(rng), b = u(rng), c = u(rng);
    if (a > b) std::swap(a, b);
    if (b > c) std::swap(b, c);
    if (a > b) std::swap(a, b);
    if (a < b) EXPECT_GT(w.increment(a, b), 0.0);
    const double ac = w.increment(a, c);
    EXPECT_NEAR(w.increment(a, b) + w.increment(b, c), ac, 1e-12 * std::max(1.0, ac));
    const double period = w.increment(0.0, 1.0);
    EXPECT_NEAR(w.increment(a, a + 1.0), period, 1e-12 * period);
    EXPECT_NEAR(w.total_mass(), period, 1e-12 * period);
    const int n = 2 + static_cast<int>(rng() % 63);
    const auto weights = w_weights(w, n);
    double total = 0.0;
    for (int x = 0; x < n; ++x) {
      const double dual = conductance(w, n, x) * n * weights[static_cast<std::size_t>(x)];
      EXPECT_NEAR(dual, 1.0, 1e-12);
      total += weights[static_cast<std::size_t>(x)];
    }
    EXPECT_NEAR(total, period, 1e-12 * period);
  }
}
