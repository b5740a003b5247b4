#include <cmath>

#include <gtest/gtest.h>

#include "nmar/identifiability.hpp"
#include "nmar/model.hpp"
#include "nmar/oracle.hpp"
#include "nmar/rng.hpp"

using namespace nmar;

namespace {

ParamSet draw(const ModelSpec& spec, CounterRng& rng, double half = 2.0) {
  std::vector<double> x(n_free(spec));
  for (auto& v : x) v = rng.uniform(-half, half);
  return unpack_free(spec, x);
}

}  // namespace

TEST(PairwiseSum, MatchesNaiveOnSmallInputs) {
  std::vector<double> v{1.0, 2.0, 3.0};
  EXPECT_EQ(oracle::pairwise_sum(v), 6.0);
  std::vector<double> ones(1000, 0.1);
  EXPECT_NEAR(oracle::pairwise_sum(ones), 100.0, 1e-12);
  EXPECT_EQ(oracle::pairwise_sum(std::vector<double>{}), 0.0);
}

TEST(CompleteJoint, ZeroParametersT2) {
  const ModelSpec spec(2, 1);
  const auto p = ParamSet::zeros(spec);
  // y fully drawn at 1/4, then dropout (t = 1) or retention (t = 2) at 1/2
  EXPECT_EQ(oracle::complete_joint(spec, p, {1, Bits{0, 1}, {}}), 0.125);
  EXPECT_EQ(oracle::complete_joint(spec, p, {2, Bits{1, 1}, {}}), 0.125);
  EXPECT_THROW(oracle::complete_joint(spec, p, {3, Bits{1, 1}, {}}), std::invalid_argument);
  EXPECT_THROW(oracle::complete_joint(spec, p, {1, Bits{1}, {}}), std::invalid_argument);
}

TEST(CompleteJoint, HandValueWithMechanism) {
  const ModelSpec spec(2, 1);
  auto p = ParamSet::zeros(spec);
  p.theta1 = std::log(3.0);             // P(y1 = 1) = 3/4
  p.mech_at(2).current = std::log(3.0);  // hazard 3/4 when y2 = 1 and y1 = 0
  EXPECT_NEAR(oracle::complete_joint(spec, p, {1, Bits{0, 1}, {}}), 0.25 * 0.5 * 0.75, 1e-16);
  EXPECT_NEAR(oracle::complete_joint(spec, p, {2, Bits{0, 1}, {}}), 0.25 * 0.5 * 0.25, 1e-16);
  EXPECT_NEAR(oracle::marginalize(spec, p, {{}, Bits{0}, 1}), 0.25 * (0.5 * 0.5 + 0.5 * 0.75), 1e-16);
}

TEST(TotalMass, OnePerCovariateLevel) {
  auto rng = CounterRng::stream(7, 0);
  for (int T = 2; T <= 6; ++T) {
    for (bool cov : {false, true}) {
      const ModelSpec spec(T, 2, cov);
      for (int d = 0; d < 5; ++d) EXPECT_NEAR(oracle::total_mass(spec, draw(spec, rng)), cov ? 2.0 : 1.0, 1e-12);
    }
  }
}

TEST(Oracle, HorizonGuard) {
  const ModelSpec spec(21, 1);
  const auto p = ParamSet::zeros(spec);
  EXPECT_THROW(oracle::marginalize(spec, p, {{}, Bits{1}, 1}), std::invalid_argument);
  EXPECT_THROW(oracle::total_mass(spec, p), std::invalid_argument);
}

TEST(PopulationLogLik, MaximizedAtTruth) {
  const ModelSpec spec(3, 2, true);
  auto rng = CounterRng::stream(11, 0);
  const auto truth = draw(spec, rng, 1.0);
  const auto at_truth = oracle::population_loglik(spec, truth, truth);
  ASSERT_FALSE(at_truth.neg_inf);
  for (int d = 0; d < 20; ++d) {
    const auto other = draw(spec, rng);
    const auto l = oracle::population_loglik(spec, other, truth);
    EXPECT_LE(l.value, at_truth.value + 1e-12);
    EXPECT_NEAR(at_truth.value - l.value, oracle::kl_gap(spec, other, truth), 1e-10);
  }
}

TEST(PopulationLogLik, ZeroModelMassIsNegInf) {
  const ModelSpec spec(2, 1);
  const auto truth = ParamSet::zeros(spec);
  auto p = truth;
  p.mech_at(2).intercept = -1e6;  // no dropout at all
  const auto l = oracle::population_loglik(spec, p, truth);
  EXPECT_TRUE(l.neg_inf);
  EXPECT_TRUE(std::isinf(l.value) && l.value < 0);
  EXPECT_TRUE(std::isinf(oracle::kl_gap(spec, p, truth)));
}

TEST(KlGap, NonnegativeOnRandomPairs) {
  const ModelSpec spec(3, 1);
  auto rng = CounterRng::stream(3, 0);
  for (int d = 0; d < 300; ++d) EXPECT_GE(oracle::kl_gap(spec, draw(spec, rng), draw(spec, rng)), -1e-12);
}

TEST(KlGap, ZeroOnWitnessPairs) {
  const ModelSpec spec(3, 1);
  auto rng = CounterRng::stream(5, 0);
  for (int d = 0; d < 25; ++d) {
    const auto truth = draw(spec, rng, 1.0);
    const auto rep = ident::audit(spec, truth, {.witness = true});
    ASSERT_TRUE(rep.witness);
    EXPECT_NEAR(oracle::kl_gap(spec, *rep.witness, truth), 0.0, 1e-12);
    EXPECT_NE(*rep.witness, truth);
  }
}
