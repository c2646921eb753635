#ifndef CONFORMAL_ICP_HPP_
#define CONFORMAL_ICP_HPP_
#pragma once

#include "conformal/core.hpp"
#include "conformal/error.hpp"

#include <algorithm>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace conformal {

/// A p-value kept as an exact fraction count / (calibration count + 1).
struct PValue {
    std::size_t numerator{ 1 };
    std::size_t denominator{ 1 };

    [[nodiscard]] double value() const noexcept { return static_cast<double>(numerator) / static_cast<double>(denominator); }

    friend bool operator==(const PValue &a, const PValue &b) noexcept {
        return a.numerator * b.denominator == b.numerator * a.denominator;
    }

    friend auto operator<=>(const PValue &a, const PValue &b) noexcept {
        return a.numerator * b.denominator <=> b.numerator * a.denominator;
    }
};

/// p > epsilon, decided on the integer numerator.
[[nodiscard]] inline bool exceeds(PValue p, double epsilon) {
    return static_cast<std::int64_t>(p.numerator) > significance_floor(epsilon, p.denominator);
}

/**
 * (|{i : alpha_i <= test_score}| + 1) / (n + 1).
 *
 * Linear scan; predictors keep a sorted copy and use sorted_p_value instead.
 */
[[nodiscard]] inline PValue p_value(std::span<const double> calibration_scores, double test_score) {
    if (calibration_scores.empty()) {
        throw configuration_error{ "p_value needs at least one calibration score" };
    }
    const auto count = static_cast<std::size_t>(std::count_if(calibration_scores.begin(), calibration_scores.end(),
                                                              [test_score](double alpha) { return alpha <= test_score; }));
    return { count + 1, calibration_scores.size() + 1 };
}

/// p_value over an ascending-sorted score list, O(log n). An empty list gives 1/1.
[[nodiscard]] inline PValue sorted_p_value(std::span<const double> sorted_scores, double test_score) noexcept {
    const auto count = static_cast<std::size_t>(std::upper_bound(sorted_scores.begin(), sorted_scores.end(), test_score) - sorted_scores.begin());
    return { count + 1, sorted_scores.size() + 1 };
}

/// Labels whose p-value exceeds epsilon, plus every candidate's p-value (indexed by label).
struct PredictionSet {
    std::vector<Label> labels;
    double epsilon{ 0.0 };
    std::vector<PValue> p_values;

    [[nodiscard]] bool contains(Label label) const noexcept {
        return std::find(labels.begin(), labels.end(), label) != labels.end();
    }

    [[nodiscard]] std::size_t size() const noexcept { return labels.size(); }
    [[nodiscard]] bool empty() const noexcept { return labels.empty(); }
};

/// Builds the set {y : p^y > epsilon} from per-label p-values.
[[nodiscard]] inline PredictionSet make_prediction_set(std::vector<PValue> p_values, double epsilon) {
    require_significance(epsilon);
    PredictionSet set;
    set.epsilon = epsilon;
    for (std::size_t y = 0; y < p_values.size(); ++y) {
        if (exceeds(p_values[y], epsilon)) {
            set.labels.push_back(Label{ static_cast<std::uint32_t>(y) });
        }
    }
    set.p_values = std::move(p_values);
    return set;
}

/**
 * Outcome flags for one prediction. An empty set is always also an error; multiple and
 * error can both hold only when the set has several labels but misses the truth, which
 * cannot happen in binary problems.
 */
struct PredictionOutcome {
    bool error{ false };
    bool multiple{ false };
    bool empty{ false };

    [[nodiscard]] bool correct_singleton() const noexcept { return !error && !multiple; }
};

[[nodiscard]] inline PredictionOutcome classify_prediction(const PredictionSet &set, Label true_label) noexcept {
    return { !set.contains(true_label), set.size() > 1, set.empty() };
}

/// Unconditional inductive conformal predictor. Immutable after construction.
class InductiveConformalPredictor {
  public:
    InductiveConformalPredictor(std::shared_ptr<const ConformityMeasure> measure, LabelAlphabet alphabet, std::span<const CalibrationRecord> records) :
        measure_{ std::move(measure) },
        alphabet_{ std::move(alphabet) } {
        if (!measure_) {
            throw configuration_error{ "predictor requires a conformity measure" };
        }
        if (alphabet_.empty()) {
            throw configuration_error{ "predictor requires a non-empty label alphabet" };
        }
        if (records.empty()) {
            throw configuration_error{ "calibration set is empty" };
        }
        sorted_scores_.reserve(records.size());
        for (const auto &r : records) {
            sorted_scores_.push_back(r.score);
        }
        std::sort(sorted_scores_.begin(), sorted_scores_.end());
    }

    /// Scores the calibration examples with `measure` and builds the predictor.
    [[nodiscard]] static InductiveConformalPredictor calibrated(std::shared_ptr<const ConformityMeasure> measure, LabelAlphabet alphabet, std::span<const Example> calibration) {
        const auto records = calibrate(*measure, calibration);
        return { std::move(measure), std::move(alphabet), records };
    }

    [[nodiscard]] PValue p_value(const Example &object, Label label) const {
        return sorted_p_value(sorted_scores_, measure_->score(object, label));
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

    [[nodiscard]] std::size_t calibration_size() const noexcept { return sorted_scores_.size(); }
    [[nodiscard]] const LabelAlphabet &alphabet() const noexcept { return alphabet_; }
    [[nodiscard]] const ConformityMeasure &measure() const noexcept { return *measure_; }

  private:
    std::shared_ptr<const ConformityMeasure> measure_;
    LabelAlphabet alphabet_;
    std::vector<double> sorted_scores_;
};

}  // namespace conformal

#endif  // CONFORMAL_ICP_HPP_
