#include "conformal/conditional.hpp"
#include "conformal/icp.hpp"
#include "conformal/scorer.hpp"

#include <gtest/gtest.h>

#include <memory>
#include <random>
#include <vector>

using namespace conformal;

namespace {

LabelAlphabet binary() { return LabelAlphabet{ { "0", "1" } }; }

std::shared_ptr<const BinaryScoreMeasure> identity_measure() {
    return std::make_shared<BinaryScoreMeasure>(std::make_shared<FunctionScorer>([](const Example &z) { return z.object.at(0); }), Label{ 1 });
}

constexpr Category A{ 0 };
constexpr Category B{ 1 };
constexpr Category C{ 2 };

/// The six-example toy set: f values and labels chosen by hand.
std::vector<Example> toy_calibration() {
    return { { 0, { 1.5 }, Label{ 1 } }, { 1, { -0.5 }, Label{ 0 } }, { 2, { 0.3 }, Label{ 0 } },
             { 3, { 2.0 }, Label{ 1 } }, { 4, { -2.0 }, Label{ 0 } }, { 5, { -0.1 }, Label{ 1 } } };
}

/// Per-category count written out directly from the definition.
std::pair<std::size_t, std::size_t> brute_force(const std::vector<Example> &cal, double test_f, Label y) {
    std::size_t in_cat = 0;
    std::size_t le = 0;
    const double test_alpha = y.index == 1 ? test_f : -test_f;
    for (const auto &z : cal) {
        if (*z.label != y) {
            continue;
        }
        ++in_cat;
        const double alpha = z.label->index == 1 ? z.object[0] : -z.object[0];
        le += alpha <= test_alpha ? 1 : 0;
    }
    return { le + 1, in_cat + 1 };
}

}  // namespace

TEST(ConditionalPValue, WithinCategory) {
    const std::vector<CalibrationRecord> r{ { 1.0, A }, { 2.0, A }, { 9.0, B } };
    const auto p = conditional_p_value(r, 1.5, A);
    EXPECT_EQ(p.numerator, 2U);
    EXPECT_EQ(p.denominator, 3U);
}

TEST(ConditionalPValue, UnseenCategoryIsOne) {
    const std::vector<CalibrationRecord> r{ { 1.0, A }, { 2.0, A }, { 9.0, B } };
    const auto p = conditional_p_value(r, 1.5, C);
    EXPECT_EQ(p.numerator, 1U);
    EXPECT_EQ(p.denominator, 1U);
}

TEST(ConditionalPValue, ToySetMatchesBruteForce) {
    const auto cal = toy_calibration();
    const auto taxonomy = std::make_shared<const LabelTaxonomy>();
    const auto cp = ConditionalConformalPredictor::calibrated(identity_measure(), taxonomy, binary(), cal);
    const auto records = calibrate(*identity_measure(), cal, *taxonomy);
    for (double x = -3.0; x <= 3.0; x += 0.1) {
        for (const Label y : { Label{ 0 }, Label{ 1 } }) {
            const auto [num, den] = brute_force(cal, x, y);
            const auto p = cp.p_value({ 9, { x }, std::nullopt }, y);
            EXPECT_EQ(p.numerator, num);
            EXPECT_EQ(p.denominator, den);
            const auto q = conditional_p_value(records, y.index == 1 ? x : -x, Category{ y.index });
            EXPECT_EQ(q.numerator, num);
        }
    }
}

TEST(ConditionalPredictSet, ToySetMatchesBruteForce) {
    const auto cal = toy_calibration();
    const auto cp = ConditionalConformalPredictor::calibrated(identity_measure(), std::make_shared<const LabelTaxonomy>(), binary(), cal);
    for (double x = -3.0; x <= 3.0; x += 0.25) {
        for (const double eps : { 0.0, 0.25, 0.3, 0.5, 0.75, 1.0 }) {
            const auto set = cp.predict_set({ 9, { x }, std::nullopt }, eps);
            for (const Label y : { Label{ 0 }, Label{ 1 } }) {
                const auto [num, den] = brute_force(cal, x, y);
                EXPECT_EQ(set.contains(y), static_cast<double>(num) / static_cast<double>(den) > eps + 1e-12);
            }
        }
    }
}

TEST(ConditionalPredictSet, EpsilonOneEmpty) {
    const auto cp = ConditionalConformalPredictor::calibrated(identity_measure(), std::make_shared<const LabelTaxonomy>(), binary(), toy_calibration());
    EXPECT_TRUE(cp.predict_set({ 9, { 0.0 }, std::nullopt }, 1.0).empty());
}

TEST(ConditionalPredictSet, ConstantTaxonomyReducesToIcp) {
    std::mt19937_64 gen{ 23 };
    std::normal_distribution<double> normal;
    std::vector<Example> cal;
    for (std::size_t i = 0; i < 40; ++i) {
        cal.push_back({ i, { std::round(4.0 * normal(gen)) / 4.0 }, Label{ static_cast<std::uint32_t>(gen() % 2) } });
    }
    const auto m = identity_measure();
    const auto cp = ConditionalConformalPredictor::calibrated(m, std::make_shared<const ConstantTaxonomy>(), binary(), cal);
    const auto icp = InductiveConformalPredictor::calibrated(m, binary(), cal);
    for (int rep = 0; rep < 200; ++rep) {
        const Example z{ 99, { std::round(4.0 * normal(gen)) / 4.0 }, std::nullopt };
        const auto a = cp.p_values(z);
        const auto b = icp.p_values(z);
        ASSERT_EQ(a.size(), b.size());
        for (std::size_t y = 0; y < a.size(); ++y) {
            EXPECT_EQ(a[y].numerator, b[y].numerator);
            EXPECT_EQ(a[y].denominator, b[y].denominator);
        }
        for (const double eps : { 0.05, 0.1, 0.5 }) {
            EXPECT_EQ(cp.predict_set(z, eps).labels, icp.predict_set(z, eps).labels);
        }
    }
}

TEST(ConditionalPValue, InvariantToOtherCategories) {
    std::vector<CalibrationRecord> r{ { 1.0, A }, { 5.0, B }, { 2.0, A }, { -1.0, B }, { 0.5, A } };
    const auto before = conditional_p_value(r, 1.5, A);
    std::swap(r[1], r[3]);
    r[1].score = 100.0;
    const auto after = conditional_p_value(r, 1.5, A);
    EXPECT_EQ(before, after);
}

TEST(FeatureTaxonomy, StrictLessThan) {
    const FeatureThresholdTaxonomy t{ 1, 0.5 };
    EXPECT_EQ(t.category({ 0, { 9.0, 0.4 }, std::nullopt }, Label{ 0 }), FeatureThresholdTaxonomy::below);
    EXPECT_EQ(t.category({ 0, { 9.0, 0.5 }, std::nullopt }, Label{ 0 }), FeatureThresholdTaxonomy::at_or_above);
    EXPECT_THROW((void)t.category({ 0, { 9.0 }, std::nullopt }, Label{ 0 }), dimension_error);
}

TEST(ParseTaxonomy, Grammar) {
    EXPECT_EQ(parse_taxonomy("none")->describe(), "none");
    EXPECT_EQ(parse_taxonomy("label")->describe(), "label");
    const auto f = parse_taxonomy("feature:52:0.0555");
    EXPECT_EQ(f->describe(), "feature:52:0.0555");
    const auto *ft = dynamic_cast<const FeatureThresholdTaxonomy *>(f.get());
    ASSERT_NE(ft, nullptr);
    EXPECT_EQ(ft->feature(), 52U);
    EXPECT_DOUBLE_EQ(ft->threshold(), 0.0555);
    for (const char *bad : { "", "labels", "feature:", "feature:x:1", "feature:1", "feature:1:abc", "feature:-1:2", "feature:1:inf" }) {
        EXPECT_THROW((void)parse_taxonomy(bad), configuration_error) << bad;
    }
}

TEST(OneSided, KZeroAlwaysNegative) {
    std::vector<CalibrationRecord> r;
    for (int i = 1; i <= 9; ++i) {
        r.push_back({ -static_cast<double>(i), Category{ 0 } });
    }
    // epsilon < 1/10
    const OneSidedClassifier c{ r, 0.09, Label{ 0 } };
    EXPECT_EQ(c.rank(), 0U);
    for (const double f : { -100.0, 0.0, 9.5, 1e300 }) {
        EXPECT_FALSE(c.is_positive(f));
        EXPECT_FALSE(one_sided_is_positive(r, f, 0.09, Label{ 0 }));
    }
}

TEST(OneSided, SecondLargestThreshold) {
    // negative f values 1..9 stored as scores -f
    std::vector<CalibrationRecord> r;
    for (int i = 1; i <= 9; ++i) {
        r.push_back({ -static_cast<double>(i), Category{ 0 } });
    }
    r.push_back({ 3.0, Category{ 1 } });
    const OneSidedClassifier c{ r, 0.2, Label{ 0 } };
    EXPECT_EQ(c.rank(), 2U);
    EXPECT_DOUBLE_EQ(c.threshold(), 8.0);
    EXPECT_FALSE(c.is_positive(8.0));
    EXPECT_TRUE(c.is_positive(8.0001));
    EXPECT_EQ(one_sided_classify(r, 8.0, 0.2, Label{ 0 }, Label{ 1 }), Label{ 0 });
    EXPECT_EQ(one_sided_classify(r, 8.5, 0.2, Label{ 0 }, Label{ 1 }), Label{ 1 });
}

TEST(OneSided, FormulationsAgree) {
    std::mt19937_64 gen{ 99 };
    std::uniform_int_distribution<int> size{ 0, 40 };
    std::uniform_int_distribution<int> grid{ -10, 10 };
    std::uniform_real_distribution<double> eps_dist{ 0.0, 1.0 };
    for (int rep = 0; rep < 1000; ++rep) {
        std::vector<CalibrationRecord> r;
        const int n0 = size(gen);
        const int n1 = size(gen);
        // integer-grid f values so ties are common
        for (int i = 0; i < n0; ++i) {
            r.push_back({ -static_cast<double>(grid(gen)), Category{ 0 } });
        }
        for (int i = 0; i < n1; ++i) {
            r.push_back({ static_cast<double>(grid(gen)), Category{ 1 } });
        }
        const double eps = rep % 10 == 0 ? static_cast<double>(rep % 7) / static_cast<double>(n0 + 1) : eps_dist(gen);
        const OneSidedClassifier c{ r, std::min(eps, 1.0), Label{ 0 } };
        for (int j = 0; j < 5; ++j) {
            const double f = grid(gen) + (j % 2 ? 0.5 : 0.0);
            ASSERT_EQ(c.is_positive(f), one_sided_is_positive(r, f, std::min(eps, 1.0), Label{ 0 })) << "rep " << rep;
        }
    }
}
