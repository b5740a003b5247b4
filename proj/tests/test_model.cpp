#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "nmar/model.hpp"
#include "nmar/oracle.hpp"
#include "nmar/rng.hpp"

using namespace nmar;

namespace {

ParamSet random_params(const ModelSpec& spec, std::uint64_t seed, double half = 2.0) {
  auto rng = CounterRng::stream(seed, 99);
  std::vector<double> x(n_free(spec));
  for (auto& v : x) v = rng.uniform(-half, half);
  return unpack_free(spec, x);
}

}  // namespace

TEST(Expit, KnownValues) {
  EXPECT_EQ(expit(0.0), 0.5);
  EXPECT_NEAR(expit(1.851), 0.8642444716968656, 1e-15);
  EXPECT_NEAR(expit(1.851), 0.8643, 1e-4);
  EXPECT_NEAR(expit(40.0), 1.0, 1e-15);
  EXPECT_GT(expit(-800.0), -1e-300);
  EXPECT_LE(expit(800.0), 1.0);
}

TEST(Expit, SymmetryAndMonotone) {
  double prev = 0.0;
  for (double x = -30.0; x <= 30.0; x += 0.37) {
    EXPECT_NEAR(expit(x) + expit(-x), 1.0, 1e-15);
    EXPECT_GT(expit(x), prev);
    prev = expit(x);
  }
}

TEST(HistoryWindow, Slices) {
  const Bits y{1, 0, 1, 1};
  EXPECT_EQ(history_window(y, 3, 2).values, (Bits{1, 0, 1}));
  EXPECT_EQ(history_window(Bits{1, 0}, 2, 5).values, (Bits{1, 0}));
  EXPECT_EQ(history_window(Bits{0, 1, 1, 0}, 4, 1).values, (Bits{1, 0}));
  EXPECT_THROW(history_window(y, 5, 1), std::out_of_range);
  EXPECT_THROW(history_window(y, 0, 1), std::out_of_range);
}

TEST(OutcomeProb, HandValues) {
  ModelSpec spec(3, 1);
  auto p = ParamSet::zeros(spec);
  EXPECT_EQ(outcome_prob(spec, p, 2, Bits{1}, 1), 0.5);
  EXPECT_EQ(outcome_prob(spec, p, 1, {}, 0), 0.5);

  p.outcome_at(2).lag_coef[0] = std::log(2.0);
  EXPECT_NEAR(outcome_prob(spec, p, 2, Bits{1}, 1), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(outcome_prob(spec, p, 2, Bits{0}, 1), 0.5, 1e-15);

  ModelSpec cov(2, 1, true);
  auto q = ParamSet::zeros(cov);
  q.beta1 = std::log(3.0);
  EXPECT_NEAR(outcome_prob(cov, q, 1, {}, 0, 1), 0.25, 1e-15);
  EXPECT_NEAR(outcome_prob(cov, q, 1, {}, 0, 0), 0.5, 1e-15);
  EXPECT_THROW(outcome_prob(cov, q, 1, {}, 0), std::invalid_argument);
}

TEST(OutcomeProb, Ar2UsesBothLags) {
  ModelSpec spec(3, 2);
  auto p = ParamSet::zeros(spec);
  p.lag(spec, 3, 1) = 1.0;
  p.lag(spec, 3, 2) = -0.5;
  EXPECT_NEAR(outcome_prob(spec, p, 3, Bits{1, 1}, 1), expit(0.5), 1e-15);
  EXPECT_NEAR(outcome_prob(spec, p, 3, Bits{1, 0}, 1), expit(-0.5), 1e-15);
  EXPECT_NEAR(outcome_prob(spec, p, 3, Bits{0, 1}, 0), 1.0 - expit(1.0), 1e-15);
}

TEST(DropoutHazard, HandValues) {
  ModelSpec spec(3, 1);
  auto p = ParamSet::zeros(spec);
  EXPECT_EQ(dropout_hazard(spec, p, 2, 0, 1), 0.5);
  p.mech_at(2).intercept = std::log(3.0);
  EXPECT_NEAR(dropout_hazard(spec, p, 2, 1, 1), 0.75, 1e-15);
  p.mech_at(3).current = -std::log(5.0);
  EXPECT_NEAR(dropout_hazard(spec, p, 3, 0, 1), 1.0 / 6.0, 1e-15);
  EXPECT_THROW(dropout_hazard(spec, p, 1, 0, 0), std::out_of_range);
  EXPECT_THROW(dropout_hazard(spec, p, 4, 0, 0), std::out_of_range);
}

TEST(FSlice, HandValues) {
  ModelSpec spec(2, 1);
  auto p = ParamSet::zeros(spec);
  EXPECT_EQ(f_slice(spec, p, 2, Bits{0, 1}), 0.25);
  p.outcome_at(2).lag_coef[0] = std::log(2.0);
  EXPECT_NEAR(f_slice(spec, p, 2, Bits{1, 1}), 1.0 / 3.0, 1e-15);
  p.mech_at(2).intercept = 40.0;
  EXPECT_LT(f_slice(spec, p, 2, Bits{1, 1}), 1e-15);
}

TEST(PatternProb, SymmetricT2) {
  ModelSpec spec(2, 1);
  const auto p = ParamSet::zeros(spec);
  double total = 0.0;
  for (const auto& r : all_patterns(spec)) {
    const double g = pattern_prob(spec, p, r);
    EXPECT_EQ(g, r.t() == 2 ? 0.125 : 0.25);
    total += g;
  }
  EXPECT_EQ(all_patterns(spec).size(), 6U);
  EXPECT_EQ(total, 1.0);
}

TEST(PatternProb, RejectsBadRecords) {
  ModelSpec spec(2, 1);
  const auto p = ParamSet::zeros(spec);
  EXPECT_THROW(pattern_prob(spec, p, ObservedRecord{{}, Bits{0, 1, 1}, 1}), std::invalid_argument);
  EXPECT_THROW(pattern_prob(spec, p, ObservedRecord{{}, Bits{}, 1}), std::invalid_argument);
  EXPECT_THROW(pattern_prob(spec, p, ObservedRecord{{}, Bits{2}, 1}), std::invalid_argument);
}

// Sum over patterns is 1 per covariate level and matches exhaustive
// marginalization of the complete-data joint.
TEST(PatternProb, NormalizationAndOracleAgreement) {
  for (int T = 2; T <= 5; ++T) {
    for (int order = 1; order <= 3; ++order) {
      for (bool cov : {false, true}) {
        const ModelSpec spec(T, order, cov);
        for (std::uint64_t d = 0; d < 20; ++d) {
          const auto p = random_params(spec, 1000 * T + 100 * order + 10 * cov + d);
          double mass[2] = {0.0, 0.0};
          for (const auto& r : all_patterns(spec)) {
            const double g = pattern_prob(spec, p, r);
            ASSERT_GE(g, 0.0);
            ASSERT_LE(g, 1.0);
            EXPECT_NEAR(g, oracle::marginalize(spec, p, r), 1e-12);
            mass[r.x.value_or(0)] += g;
          }
          EXPECT_NEAR(mass[0], 1.0, 1e-12);
          if (cov) EXPECT_NEAR(mass[1], 1.0, 1e-12);
        }
      }
    }
  }
}

TEST(ParamBudget, Counts) {
  EXPECT_EQ(param_budget(4), 29);
  EXPECT_EQ(param_budget(2), 5);
  EXPECT_EQ(ar1_param_count(2), 6);
  EXPECT_LT(param_budget(2), ar1_param_count(2));
  EXPECT_EQ(param_budget(3), 13);
  EXPECT_EQ(ar1_param_count(3), 11);
  for (int T = 3; T <= 12; ++T) EXPECT_GT(param_budget(T), ar1_param_count(T));
  EXPECT_THROW(param_budget(0), std::invalid_argument);
}

TEST(ModelSpec, Validation) {
  EXPECT_THROW(ModelSpec(1, 1), std::invalid_argument);
  EXPECT_THROW(ModelSpec(3, 0), std::invalid_argument);
  ModelSpec spec(4, 2);
  EXPECT_EQ(spec.lags(2), std::vector<int>{1});
  EXPECT_EQ(spec.lags(4), (std::vector<int>{1, 2}));
  EXPECT_THROW(spec.with_lags(3, {3}), std::invalid_argument);
  EXPECT_THROW(spec.with_free_slopes({SlopeId{5, 0}}), std::invalid_argument);
  EXPECT_EQ(spec.free_slopes().size(), 6U);
  EXPECT_TRUE(spec.mcar().free_slopes().empty());
  EXPECT_EQ(spec.mar().free_slopes().size(), 3U);
  EXPECT_EQ(SlopeId({3, 1}).name(), "tau[3,2]");
}

TEST(Flatten, BijectionKeepsFixedZeros) {
  const ModelSpec full(4, 2, true);
  const auto spec = full.with_fixed_slopes({SlopeId{2, 0}, SlopeId{4, 1}});
  const auto coords = coordinates(spec);
  EXPECT_EQ(coords.size(), flatten(spec, ParamSet::zeros(spec)).size());
  EXPECT_EQ(n_free(spec), coords.size() - 2);
  for (std::uint64_t d = 0; d < 50; ++d) {
    const auto p = random_params(spec, d);
    EXPECT_TRUE(conforms(spec, p));
    EXPECT_EQ(p.slope({2, 0}), 0.0);
    EXPECT_EQ(p.slope({4, 1}), 0.0);
    EXPECT_EQ(unflatten(spec, flatten(spec, p)), p);
    const auto packed = pack_free(spec, p);
    EXPECT_EQ(unpack_free(spec, packed), p);
    EXPECT_EQ(pack_free(spec, unpack_free(spec, packed)), packed);
  }
  EXPECT_THROW(unflatten(spec, std::vector<double>(3)), std::invalid_argument);
}

TEST(Flatten, NamesFollowLayout) {
  const ModelSpec spec(3, 2, true);
  const auto names = free_names(spec);
  const std::vector<std::string> expect{"theta[1,0]", "beta[1]",   "theta[2,0]", "theta[2,1]", "beta[2]",
                                        "tau[2,0]",   "tau[2,1]",  "tau[2,2]",   "theta[3,0]", "theta[3,2]",
                                        "theta[3,1]", "beta[3]",   "tau[3,0]",   "tau[3,2]",   "tau[3,3]"};
  EXPECT_EQ(names, expect);
}
