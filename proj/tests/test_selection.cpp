#include <cmath>

#include <gtest/gtest.h>

#include "nmar/distributions.hpp"
#include "nmar/selection.hpp"
#include "nmar/sim.hpp"

using namespace nmar;

TEST(Distributions, ChiSquareQuantiles) {
  EXPECT_NEAR(dist::chisq_quantile(0.95, 6), 12.591587243743977, 1e-9);
  EXPECT_NEAR(dist::chisq_quantile(0.95, 3), 7.814727903251178, 1e-9);
  EXPECT_NEAR(dist::chisq_quantile(0.95, 2), 5.991464547107979, 1e-9);
  EXPECT_NEAR(dist::chisq_quantile(0.95, 1), 3.841458820694124, 1e-9);
}

TEST(Distributions, CdfInvertsQuantile) {
  for (double df : {1.0, 2.0, 3.5, 6.0, 20.0, 41.0}) {
    for (double p : {0.01, 0.3, 0.5, 0.9, 0.999}) EXPECT_NEAR(dist::chisq_cdf(dist::chisq_quantile(p, df), df), p, 1e-10);
  }
  EXPECT_EQ(dist::chisq_cdf(0.0, 3), 0.0);
  EXPECT_NEAR(dist::chisq_cdf(2.0, 2), 1.0 - std::exp(-1.0), 1e-14);
}

TEST(Distributions, NormalAndWald) {
  EXPECT_EQ(dist::normal_cdf(0.0), 0.5);
  EXPECT_NEAR(dist::normal_cdf(1.959963984540054), 0.975, 1e-12);
  EXPECT_NEAR(dist::wald_pvalue(0.124, 0.149), 0.406, 0.002);
  EXPECT_NEAR(dist::wald_pvalue(-0.124, 0.149), dist::wald_pvalue(0.124, 0.149), 1e-15);
}

TEST(Submodels, CountsAndOrder) {
  const ModelSpec base(4, 2, true);
  const auto subs = select::enumerate_submodels(base, 3);
  ASSERT_EQ(subs.size(), 41U);
  EXPECT_EQ(subs[0].label(), "tau[2,1]");
  EXPECT_EQ(subs[5].label(), "tau[4,4]");
  EXPECT_EQ(subs[6].label(), "tau[2,1],tau[2,2]");
  EXPECT_EQ(subs[26].label(), "tau[2,1],tau[3,2],tau[4,3]");
  EXPECT_EQ(subs[40].label(), "tau[3,3],tau[4,3],tau[4,4]");
  EXPECT_EQ(subs[26].spec.free_slopes().size(), 3U);
  EXPECT_EQ(select::enumerate_submodels(base, 1).size(), 6U);
  EXPECT_EQ(select::enumerate_submodels(base, 6).size(), 63U);
}

class SmallSelection : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    const ModelSpec spec(3, 1);
    auto truth = ParamSet::zeros(spec);
    truth.theta1 = 0.3;
    truth.outcome_at(2).lag_coef[0] = 1.0;
    truth.outcome_at(3).lag_coef[0] = 1.2;
    truth.mech_at(2).intercept = -1.5;
    truth.mech_at(3).intercept = -1.5;
    truth.mech_at(3).current = 0.8;
    data_ = new Dataset(sim::simulate(spec, truth, {4000, 31}));
  }
  static void TearDownTestSuite() { delete data_; }
  static Dataset* data_;
};
Dataset* SmallSelection::data_ = nullptr;

TEST_F(SmallSelection, DevianceAndLrt) {
  const ModelSpec full(3, 1);
  FitOptions fo;
  fo.n_starts = 3;
  const auto f = fit(*data_, full, fo);
  EXPECT_EQ(select::deviance(f, f), 0.0);
  EXPECT_THROW(select::lrt(f, f), std::invalid_argument);
  const auto mar = fit(*data_, full.mar(), fo);
  const auto r = select::lrt(mar, f);
  EXPECT_EQ(r.df, 2);
  EXPECT_GE(r.stat, -1e-6);
  EXPECT_NEAR(r.critical, 5.991464547107979, 1e-9);
  EXPECT_THROW(select::lrt(f, mar), std::invalid_argument);
}

TEST_F(SmallSelection, TableRowsAreNestedInFull) {
  const ModelSpec full(3, 1);
  select::SelectionOptions opt;
  opt.max_size = 2;
  opt.fit.n_starts = 2;
  const auto table = select::selection_table(*data_, full, opt);
  ASSERT_EQ(table.rows.size(), 10U);
  for (const auto& row : table.rows) {
    EXPECT_TRUE(row.error.empty()) << row.error;
    EXPECT_GE(row.deviance, -1e-4) << row.label;
    EXPECT_EQ(row.df, 4 - static_cast<int>(row.estimated.size()));
  }
  EXPECT_EQ(table.rows[4].index, 5);
}
