#ifndef CONFORMAL_CONDITIONAL_HPP_
#define CONFORMAL_CONDITIONAL_HPP_
#pragma once

#include "conformal/core.hpp"
#include "conformal/error.hpp"
#include "conformal/icp.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace conformal {

/// Every example in one category; reduces the conditional predictor to the plain ICP.
class ConstantTaxonomy final : public Taxonomy {
  public:
    [[nodiscard]] Category category(const Example &, Label) const override { return unconditional_category; }
    [[nodiscard]] std::string describe() const override { return "none"; }
};

/// Category = label.
class LabelTaxonomy final : public Taxonomy {
  public:
    [[nodiscard]] Category category(const Example &, Label label) const override { return Category{ label.index }; }
    [[nodiscard]] std::string describe() const override { return "label"; }
};

/// Category 0 when object[feature] < threshold, 1 otherwise.
class FeatureThresholdTaxonomy final : public Taxonomy {
  public:
    static constexpr Category below{ 0 };
    static constexpr Category at_or_above{ 1 };

    FeatureThresholdTaxonomy(std::size_t feature, double threshold) :
        feature_{ feature },
        threshold_{ threshold } {
        if (!std::isfinite(threshold)) {
            throw configuration_error{ "feature threshold must be finite" };
        }
    }

    [[nodiscard]] Category category(const Example &example, Label) const override {
        if (feature_ >= example.object.size()) {
            throw dimension_error{ "feature index " + std::to_string(feature_) + " outside object of dimension " + std::to_string(example.object.size()) };
        }
        return example.object[feature_] < threshold_ ? below : at_or_above;
    }

    [[nodiscard]] std::string describe() const override;

    [[nodiscard]] std::size_t feature() const noexcept { return feature_; }
    [[nodiscard]] double threshold() const noexcept { return threshold_; }

  private:
    std::size_t feature_;
    double threshold_;
};

namespace detail {

inline std::string format_number(double value) {
    char buffer[64];
    const auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return { buffer, end };
}

inline double parse_double(std::string_view text, const char *what) {
    double value{};
    const auto *first = text.data();
    const auto *last = text.data() + text.size();
    if (!text.empty() && *first == '+') {
        ++first;
    }
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || text.empty()) {
        throw configuration_error{ std::string{ "invalid " } + what + ": '" + std::string{ text } + "'" };
    }
    return value;
}

inline std::size_t parse_index(std::string_view text, const char *what) {
    std::size_t value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
        throw configuration_error{ std::string{ "invalid " } + what + ": '" + std::string{ text } + "'" };
    }
    return value;
}

}  // namespace detail

inline std::string FeatureThresholdTaxonomy::describe() const {
    return "feature:" + std::to_string(feature_) + ":" + detail::format_number(threshold_);
}

/// Parses `none` | `label` | `feature:<index>:<threshold>`.
[[nodiscard]] inline std::unique_ptr<Taxonomy> parse_taxonomy(std::string_view text) {
    if (text == "none") {
        return std::make_unique<ConstantTaxonomy>();
    }
    if (text == "label") {
        return std::make_unique<LabelTaxonomy>();
    }
    constexpr std::string_view prefix = "feature:";
    if (text.starts_with(prefix)) {
        const auto rest = text.substr(prefix.size());
        const auto colon = rest.find(':');
        if (colon == std::string_view::npos) {
            throw configuration_error{ "feature taxonomy must be feature:<index>:<threshold>, got '" + std::string{ text } + "'" };
        }
        return std::make_unique<FeatureThresholdTaxonomy>(detail::parse_index(rest.substr(0, colon), "feature index"),
                                                          detail::parse_double(rest.substr(colon + 1), "feature threshold"));
    }
    throw configuration_error{ "unknown taxonomy '" + std::string{ text } + "' (expected none, label or feature:<index>:<threshold>)" };
}

/**
 * (|{i : kappa_i = category, alpha_i <= test_score}| + 1) / (|{i : kappa_i = category}| + 1).
 * An unseen category yields 1/1.
 */
[[nodiscard]] inline PValue conditional_p_value(std::span<const CalibrationRecord> records, double test_score, Category category) noexcept {
    std::size_t in_category = 0;
    std::size_t conforming = 0;
    for (const auto &r : records) {
        if (r.category == category) {
            ++in_category;
            if (r.score <= test_score) {
                ++conforming;
            }
        }
    }
    return { conforming + 1, in_category + 1 };
}

/**
 * Conditional ICP over an inductive taxonomy. For each candidate label y the test
 * category is K(x, y), so p^y is computed against the calibration scores of that category.
 */
class ConditionalConformalPredictor {
  public:
    ConditionalConformalPredictor(std::shared_ptr<const ConformityMeasure> measure, std::shared_ptr<const Taxonomy> taxonomy, LabelAlphabet alphabet,
                                  std::span<const CalibrationRecord> records) :
        measure_{ std::move(measure) },
        taxonomy_{ std::move(taxonomy) },
        alphabet_{ std::move(alphabet) },
        calibration_size_{ records.size() } {
        if (!measure_ || !taxonomy_) {
            throw configuration_error{ "conditional predictor requires a conformity measure and a taxonomy" };
        }
        if (alphabet_.empty()) {
            throw configuration_error{ "predictor requires a non-empty label alphabet" };
        }
        if (records.empty()) {
            throw configuration_error{ "calibration set is empty" };
        }
        for (const auto &r : records) {
            by_category_[r.category].push_back(r.score);
        }
        for (auto &[category, scores] : by_category_) {
            std::sort(scores.begin(), scores.end());
        }
    }

    [[nodiscard]] static ConditionalConformalPredictor calibrated(std::shared_ptr<const ConformityMeasure> measure, std::shared_ptr<const Taxonomy> taxonomy,
                                                                  LabelAlphabet alphabet, std::span<const Example> calibration) {
        const auto records = calibrate(*measure, calibration, *taxonomy);
        return { std::move(measure), std::move(taxonomy), std::move(alphabet), records };
    }

    [[nodiscard]] PValue p_value(const Example &object, Label label) const {
        const double alpha = measure_->score(object, label);
        const Category kappa = taxonomy_->category(object, label);
        const auto it = by_category_.find(kappa);
        if (it == by_category_.end()) {
            return { 1, 1 };
        }
        return sorted_p_value(it->second, alpha);
    }

    [[nodiscard]] std::vector<PValue> p_values(const Example &object) const {
        std::vector<PValue> out;
        out.reserve(alphabet_.size());
        for (const Label y : alphabet_.labels()) {
            out.push_back(p_value(object, y));
        }
        return out;
    }

    [[nodiscard]] PredictionSet predict_set(const Example &object, double epsilon) const {
        require_significance(epsilon);
        return make_prediction_set(p_values(object), epsilon);
    }

    /// Number of calibration records in `category`.
    [[nodiscard]] std::size_t category_size(Category category) const noexcept {
        const auto it = by_category_.find(category);
        return it == by_category_.end() ? 0 : it->second.size();
    }

    [[nodiscard]] std::size_t calibration_size() const noexcept { return calibration_size_; }
    [[nodiscard]] const LabelAlphabet &alphabet() const noexcept { return alphabet_; }
    [[nodiscard]] const Taxonomy &taxonomy() const noexcept { return *taxonomy_; }

  private:
    std::shared_ptr<const ConformityMeasure> measure_;
    std::shared_ptr<const Taxonomy> taxonomy_;
    LabelAlphabet alphabet_;
    std::size_t calibration_size_;
    std::map<Category, std::vector<double>> by_category_;
};

/**
 * One-sided label conditional classifier: positive iff p^negative <= epsilon.
 *
 * `records` must come from the binary measure under the label taxonomy, so a negative
 * record's score is -f(x_i) and the test score for the negative label is -f_value.
 */
[[nodiscard]] inline bool one_sided_is_positive(std::span<const CalibrationRecord> records, double f_value, double epsilon, Label negative) {
    require_significance(epsilon);
    const PValue p0 = conditional_p_value(records, -f_value, Category{ negative.index });
    return !exceeds(p0, epsilon);
}

[[nodiscard]] inline Label one_sided_classify(std::span<const CalibrationRecord> records, double f_value, double epsilon, Label negative, Label positive) {
    return one_sided_is_positive(records, f_value, epsilon, negative) ? positive : negative;
}

/**
 * The same classifier in order-statistic form: positive iff f(x) exceeds the k-th largest
 * f among negative calibration examples, k = floor(epsilon (n0 + 1)). k = 0 means the
 * threshold is +inf (never positive); k > n0 means -inf.
 */
class OneSidedClassifier {
  public:
    OneSidedClassifier(std::span<const CalibrationRecord> records, double epsilon, Label negative) {
        require_significance(epsilon);
        std::vector<double> negative_f;
        for (const auto &r : records) {
            if (r.category == Category{ negative.index }) {
                negative_f.push_back(-r.score);
            }
        }
        negative_count_ = negative_f.size();
        rank_ = static_cast<std::size_t>(significance_floor(epsilon, negative_count_ + 1));
        if (rank_ == 0) {
            threshold_ = std::numeric_limits<double>::infinity();
        } else if (rank_ > negative_count_) {
            threshold_ = -std::numeric_limits<double>::infinity();
        } else {
            std::sort(negative_f.begin(), negative_f.end(), std::greater<>{});
            threshold_ = negative_f[rank_ - 1];
        }
    }

    [[nodiscard]] bool is_positive(double f_value) const noexcept { return f_value > threshold_; }

    [[nodiscard]] double threshold() const noexcept { return threshold_; }
    [[nodiscard]] std::size_t rank() const noexcept { return rank_; }
    [[nodiscard]] std::size_t negative_count() const noexcept { return negative_count_; }

  private:
    double threshold_{ 0.0 };
    std::size_t rank_{ 0 };
    std::size_t negative_count_{ 0 };
};

}  // namespace conformal

#endif  // CONFORMAL_CONDITIONAL_HPP_
