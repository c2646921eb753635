#include "conformal/sim.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace conformal;
using namespace conformal::sim;

namespace {

double three_se(double eps, std::size_t trials) { return 3.0 * std::sqrt(eps * (1.0 - eps) / static_cast<double>(trials)); }

}  // namespace

TEST(Unconditional, ContinuousScoresNearEpsilon) {
    const auto r = run_unconditional_validity_trial(SyntheticSpec::two_gaussian(1), 99, 0.1, 4000);
    EXPECT_EQ(r.coverage.size(), 4000U);
    EXPECT_NEAR(r.empirical_error_rate, 0.1, three_se(0.1, 4000));
    EXPECT_LE(r.error_interval.lower, r.empirical_error_rate);
    EXPECT_GE(r.error_interval.upper, r.empirical_error_rate);
}

TEST(Unconditional, UniformRealNearEpsilon) {
    const auto r = run_unconditional_validity_trial(SyntheticSpec::uniform_real(2), 19, 0.1, 20000);
    EXPECT_NEAR(r.empirical_error_rate, 0.1, three_se(0.1, 20000));
}

TEST(Unconditional, EpsilonZeroNeverErrs) {
    const auto r = run_unconditional_validity_trial(SyntheticSpec::two_gaussian(3), 49, 0.0, 500);
    EXPECT_EQ(r.errors, 0U);
}

TEST(Unconditional, TiedScoresNeverErr) {
    auto spec = SyntheticSpec::two_gaussian(4);
    spec.scorer = ScorerKind::constant;
    for (const double eps : { 0.05, 0.5, 0.99 }) {
        EXPECT_EQ(run_unconditional_validity_trial(spec, 49, eps, 300).errors, 0U);
    }
}

TEST(Unconditional, Reproducible) {
    const auto spec = SyntheticSpec::two_gaussian(5);
    const auto a = run_unconditional_validity_trial(spec, 49, 0.1, 300, 1);
    const auto b = run_unconditional_validity_trial(spec, 49, 0.1, 300, 4);
    EXPECT_EQ(a.coverage, b.coverage);
    EXPECT_EQ(a.per_category.at("1").errors, b.per_category.at("1").errors);
}

TEST(Unconditional, Preconditions) {
    EXPECT_THROW((void)run_unconditional_validity_trial(SyntheticSpec::two_gaussian(), 49, 0.1, 0), configuration_error);
    auto bad = SyntheticSpec::two_gaussian();
    bad.positive_prior = 1.0;
    EXPECT_THROW((void)run_unconditional_validity_trial(bad, 49, 0.1, 10), configuration_error);
}

TEST(TrainingConditional, BetaLaw) {
    const auto r = run_training_conditional_trial(SyntheticSpec::uniform_real(6), 99, 0.05, 2000, true, 0.1);
    ASSERT_TRUE(r.ks_statistic_vs_beta.has_value());
    EXPECT_LT(*r.ks_statistic_vs_beta, *r.ks_critical_value);
    EXPECT_EQ(r.test_batch, 0U);
    // Beta(95, 5) has mean 0.95
    double mean = 0.0;
    for (const double c : r.coverage) {
        mean += c / 2000.0;
    }
    EXPECT_NEAR(mean, 0.95, 0.003);
}

TEST(TrainingConditional, FractionBelowExactEIsDelta) {
    const auto r = run_training_conditional_trial(SyntheticSpec::uniform_real(7), 99, 0.05, 4000, true, 0.1);
    ASSERT_TRUE(r.fraction_below_exact.has_value());
    EXPECT_NEAR(*r.fraction_below_exact, 0.1, 3.0 * std::sqrt(0.1 * 0.9 / 4000.0));
    EXPECT_LE(*r.fraction_below_exact, 0.1 + 3.0 * std::sqrt(0.1 * 0.9 / 4000.0));
}

TEST(TrainingConditional, EstimatedCoverageFollowsBeta) {
    auto spec = SyntheticSpec::two_gaussian(8);
    spec.test_batch = 4000;
    const auto r = run_training_conditional_trial(spec, 39, 0.05, 300, true);
    ASSERT_TRUE(r.ks_statistic_vs_beta.has_value());
    // batch noise (sd ~ 0.0035) is small next to the Beta(38, 2) spread (sd ~ 0.034)
    EXPECT_LT(*r.ks_statistic_vs_beta, 1.63 / std::sqrt(300.0) + 0.03);
    EXPECT_EQ(r.test_batch, 4000U);
}

TEST(TrainingConditional, EpsilonZeroFullCoverage) {
    const auto r = run_training_conditional_trial(SyntheticSpec::uniform_real(9), 99, 0.0, 100, true);
    for (const double c : r.coverage) {
        EXPECT_EQ(c, 1.0);
    }
    EXPECT_FALSE(r.ks_statistic_vs_beta.has_value());
}

TEST(TrainingConditional, NonIntegerBlocksRejected) {
    EXPECT_THROW((void)run_training_conditional_trial(SyntheticSpec::uniform_real(), 100, 0.05, 10, true), configuration_error);
    EXPECT_NO_THROW((void)run_training_conditional_trial(SyntheticSpec::uniform_real(), 100, 0.05, 10, false));
}

TEST(LabelConditional, BalancedClassesBothNearEpsilon) {
    const auto r = run_label_conditional_trial(SyntheticSpec::two_gaussian(10), 199, 0.1, 4000);
    for (const auto &[name, c] : r.per_category) {
        EXPECT_NEAR(c.rate(), 0.1, 3.0 * c.standard_error(0.1)) << name;
    }
}

TEST(LabelConditional, SkewedDesignShowsImbalance) {
    const auto r = run_label_conditional_trial(SyntheticSpec::label_skewed(11), 199, 0.05, 3000);
    for (const auto &[name, c] : r.per_category) {
        EXPECT_LE(c.rate(), 0.05 + 3.0 * c.standard_error(0.05)) << name;
    }
    const double u0 = r.unconditional_per_category.at("0").rate();
    const double u1 = r.unconditional_per_category.at("1").rate();
    EXPECT_GT(u1, 2.0 * u0);
    EXPECT_GT(u1, 0.05);
    EXPECT_LT(u0, 0.05);
}

TEST(LabelConditional, EpsilonZero) {
    const auto r = run_label_conditional_trial(SyntheticSpec::label_skewed(12), 99, 0.0, 300);
    for (const auto &[name, c] : r.per_category) {
        EXPECT_EQ(c.errors, 0U) << name;
    }
    EXPECT_THROW((void)run_label_conditional_trial(SyntheticSpec::uniform_real(), 99, 0.1, 10), configuration_error);
}

TEST(OneSided, ControlsNegativeErrorAndFormulationsAgree) {
    auto spec = SyntheticSpec::two_gaussian(13);
    spec.scorer = ScorerKind::oracle;
    const auto r = run_one_sided_trial(spec, 199, 0.05, 3000);
    const auto &c0 = r.per_category.at("0");
    EXPECT_LE(c0.rate(), 0.05 + 3.0 * c0.standard_error(0.05));
    EXPECT_EQ(*r.formulation_disagreements, 0U);
}

TEST(Ks, AgainstUniform) {
    const std::vector<double> s{ 0.1, 0.3, 0.5, 0.7, 0.9 };
    EXPECT_NEAR(ks_statistic(s, [](double x) { return x; }), 0.1, 1e-15);
    EXPECT_THROW((void)ks_statistic(std::vector<double>{}, [](double x) { return x; }), configuration_error);
}

TEST(Generator, OracleLogOdds) {
    const auto spec = SyntheticSpec::two_gaussian();
    // equal priors and spreads: log-odds = sum_j 2 x_j
    const std::vector<double> x{ 0.3, -0.1 };
    EXPECT_NEAR(true_log_odds(spec, x), 2.0 * (0.3 - 0.1), 1e-12);
}

TEST(Generator, ParseNames) {
    EXPECT_EQ(parse_generator("uniform-real"), GeneratorKind::uniform_real);
    EXPECT_EQ(parse_generator("label-skewed"), GeneratorKind::label_skewed_binary);
    EXPECT_THROW((void)parse_generator("poisson"), configuration_error);
    EXPECT_EQ(parse_scorer_kind("oracle"), ScorerKind::oracle);
    EXPECT_THROW((void)parse_scorer_kind("mart"), configuration_error);
}
