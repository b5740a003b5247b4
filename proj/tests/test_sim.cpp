#include <cmath>

#include <gtest/gtest.h>

#include "nmar/model.hpp"
#include "nmar/rng.hpp"
#include "nmar/sim.hpp"

using namespace nmar;

TEST(CounterRng, KnownStreamAndUniformRange) {
  auto a = CounterRng::stream(1, 0);
  auto b = CounterRng::stream(1, 0);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  EXPECT_EQ(a.counter(), 100U);
  EXPECT_NE(CounterRng::stream(1, 0).next_u64(), CounterRng::stream(1, 1).next_u64());
  EXPECT_NE(CounterRng::stream(1, 0).next_u64(), CounterRng::stream(2, 0).next_u64());
  EXPECT_EQ(CounterRng::mix(0), 0U);
  auto r = CounterRng::stream(42, 3);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000, 0.5, 0.005);
}

TEST(Simulate, DeterministicUnderSeed) {
  const ModelSpec spec(4, 2, true);
  const auto p = ParamSet::zeros(spec);
  const auto a = sim::simulate(spec, p, {5000, 9});
  const auto b = sim::simulate(spec, p, {5000, 9});
  EXPECT_EQ(a, b);
  EXPECT_NE(a, sim::simulate(spec, p, {5000, 10}));
  EXPECT_EQ(a.total_count(), 5000);
  EXPECT_EQ(sim::simulate_subject(spec, p, 9, 123, 0.5).y, sim::simulate_subject(spec, p, 9, 123, 0.5).y);
}

TEST(Simulate, ZeroParametersFrequencies) {
  const ModelSpec spec(2, 1);
  const auto d = sim::simulate(spec, ParamSet::zeros(spec), {200000, 1});
  for (const auto& r : d.records()) {
    const double expect = r.t() == 2 ? 0.125 : 0.25;
    EXPECT_NEAR(static_cast<double>(r.count) / 200000.0, expect, 0.002) << r.t();
  }
  EXPECT_EQ(d.records().size(), 6U);
}

TEST(Simulate, FrequenciesMatchPatternProbabilities) {
  const ModelSpec spec(3, 2, true);
  auto p = ParamSet::zeros(spec);
  p.theta1 = -0.4;
  p.beta1 = 0.6;
  p.lag(spec, 3, 2) = 1.1;
  p.mech_at(2).current = 1.3;
  p.mech_at(3).prev = -0.7;
  const std::int64_t n = 100000;
  const auto d = sim::simulate(spec, p, {n, 77, 0.5});
  std::map<std::pair<int, Bits>, std::int64_t> seen;
  for (const auto& r : d.records()) seen[{*r.x, r.y}] = r.count;
  for (const auto& r : all_patterns(spec)) {
    const double g = 0.5 * pattern_prob(spec, p, r);
    const double freq = static_cast<double>(seen[{*r.x, r.y}]) / static_cast<double>(n);
    EXPECT_NEAR(freq, g, 5.0 * std::sqrt(g * (1.0 - g) / static_cast<double>(n)) + 1e-9);
  }
}

TEST(Simulate, RecordsAreMonotonePrefixes) {
  const ModelSpec spec(5, 1);
  auto p = ParamSet::zeros(spec);
  for (int t = 2; t <= 5; ++t) p.mech_at(t).intercept = -1.0;
  const auto d = sim::simulate(spec, p, {2000, 3});
  for (const auto& r : d.records()) {
    EXPECT_GE(r.t(), 1);
    EXPECT_LE(r.t(), 5);
    EXPECT_FALSE(r.x.has_value());
  }
  EXPECT_THROW(sim::simulate(spec, p, {0, 3}), std::invalid_argument);
  EXPECT_THROW(sim::simulate(spec, p, {10, 3, 1.5}), std::invalid_argument);
}
