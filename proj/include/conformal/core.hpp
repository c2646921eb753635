#ifndef CONFORMAL_CORE_HPP_
#define CONFORMAL_CORE_HPP_
#pragma once

#include "conformal/error.hpp"

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace conformal {

/// Index into a LabelAlphabet.
struct Label {
    std::uint32_t index{ 0 };

    friend constexpr auto operator<=>(const Label &, const Label &) = default;
};

/// Category identifier produced by a taxonomy. Only meaningful relative to its taxonomy.
struct Category {
    std::uint32_t value{ 0 };

    friend constexpr auto operator<=>(const Category &, const Category &) = default;
};

/// The single category used when no taxonomy is given.
inline constexpr Category unconditional_category{ 0 };

/// Finite set of label names; a Label is a position in it.
class LabelAlphabet {
  public:
    LabelAlphabet() = default;

    explicit LabelAlphabet(std::vector<std::string> names) :
        names_{ std::move(names) } {
        auto sorted = names_;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
            throw configuration_error{ "label alphabet contains duplicate names" };
        }
    }

    [[nodiscard]] std::size_t size() const noexcept { return names_.size(); }
    [[nodiscard]] bool empty() const noexcept { return names_.empty(); }

    [[nodiscard]] const std::string &name(Label label) const {
        if (label.index >= names_.size()) {
            throw configuration_error{ "label index " + std::to_string(label.index) + " outside the alphabet" };
        }
        return names_[label.index];
    }

    [[nodiscard]] std::optional<Label> find(std::string_view name) const noexcept {
        const auto it = std::find(names_.begin(), names_.end(), name);
        if (it == names_.end()) {
            return std::nullopt;
        }
        return Label{ static_cast<std::uint32_t>(it - names_.begin()) };
    }

    [[nodiscard]] bool contains(Label label) const noexcept { return label.index < names_.size(); }

    [[nodiscard]] std::vector<Label> labels() const {
        std::vector<Label> out(names_.size());
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = Label{ static_cast<std::uint32_t>(i) };
        }
        return out;
    }

    [[nodiscard]] const std::vector<std::string> &names() const noexcept { return names_; }

  private:
    std::vector<std::string> names_;
};

/// An object with an optional label. `id` is the row index in the source dataset.
struct Example {
    std::size_t id{ 0 };
    std::vector<double> object;
    std::optional<Label> label;
};

/// Disjoint proper training / calibration / test partition of a dataset.
struct SplitDataset {
    std::vector<Example> proper_training;
    std::vector<Example> calibration;
    std::vector<Example> test;
};

/// Underlying prediction rule f: object -> real, found from the proper training set.
class Scorer {
  public:
    virtual ~Scorer() = default;

    [[nodiscard]] virtual double operator()(const Example &example) const = 0;

    /// Required feature dimension, if the scorer has one.
    [[nodiscard]] virtual std::optional<std::size_t> dimension() const { return std::nullopt; }
};

/// Inductive conformity measure with the proper training set already bound in.
/// Larger scores mean the example conforms better.
class ConformityMeasure {
  public:
    virtual ~ConformityMeasure() = default;

    [[nodiscard]] virtual double score(const Example &example, Label label) const = 0;
};

/**
 * The binary similarity form: score(x, y) = f(x) if y is the positive label, -f(x) otherwise.
 * With f on the log-odds scale this is the "probability-type" measure that links the label
 * conditional predictor to ROC curves.
 */
class BinaryScoreMeasure : public ConformityMeasure {
  public:
    BinaryScoreMeasure(std::shared_ptr<const Scorer> scorer, Label positive) :
        scorer_{ std::move(scorer) },
        positive_{ positive } {
        if (!scorer_) {
            throw configuration_error{ "BinaryScoreMeasure requires a scorer" };
        }
    }

    /// f(x), with the dimension check.
    [[nodiscard]] double predict(const Example &example) const {
        if (const auto dim = scorer_->dimension(); dim && *dim != example.object.size()) {
            throw dimension_error{ "example " + std::to_string(example.id) + " has " + std::to_string(example.object.size())
                                   + " features, scorer expects " + std::to_string(*dim) };
        }
        return (*scorer_)(example);
    }

    [[nodiscard]] double score(const Example &example, Label label) const override {
        const double f = predict(example);
        return label == positive_ ? f : -f;
    }

    [[nodiscard]] Label positive_label() const noexcept { return positive_; }
    [[nodiscard]] const Scorer &scorer() const noexcept { return *scorer_; }

  private:
    std::shared_ptr<const Scorer> scorer_;
    Label positive_;
};

/// Inductive taxonomy: assigns a category to a labelled example. Variants live in conditional.hpp.
class Taxonomy {
  public:
    virtual ~Taxonomy() = default;

    [[nodiscard]] virtual Category category(const Example &example, Label label) const = 0;

    /// Text form accepted by parse_taxonomy.
    [[nodiscard]] virtual std::string describe() const = 0;
};

/// Conformity score and category of one calibration example.
struct CalibrationRecord {
    double score{ 0.0 };
    Category category{ unconditional_category };
};

/// A(proper training set, (x, y)) for a labelled example.
[[nodiscard]] inline double score_example(const ConformityMeasure &measure, const Example &example) {
    if (!example.label) {
        throw configuration_error{ "example " + std::to_string(example.id) + " has no label; conformity score is undefined" };
    }
    return measure.score(example, *example.label);
}

namespace detail {

inline std::vector<CalibrationRecord> calibrate_impl(const ConformityMeasure &measure, std::span<const Example> calibration, const Taxonomy *taxonomy) {
    if (calibration.empty()) {
        throw configuration_error{ "calibration set is empty" };
    }
    std::vector<CalibrationRecord> records;
    records.reserve(calibration.size());
    for (const Example &z : calibration) {
        const double alpha = score_example(measure, z);
        const Category kappa = taxonomy ? taxonomy->category(z, *z.label) : unconditional_category;
        records.push_back({ alpha, kappa });
    }
    return records;
}

}  // namespace detail

/// One record per calibration example, in calibration order, all in the unconditional category.
[[nodiscard]] inline std::vector<CalibrationRecord> calibrate(const ConformityMeasure &measure, std::span<const Example> calibration) {
    return detail::calibrate_impl(measure, calibration, nullptr);
}

/// As above, with categories assigned by `taxonomy`.
[[nodiscard]] inline std::vector<CalibrationRecord> calibrate(const ConformityMeasure &measure, std::span<const Example> calibration, const Taxonomy &taxonomy) {
    return detail::calibrate_impl(measure, calibration, &taxonomy);
}

[[nodiscard]] inline std::vector<CalibrationRecord> calibrate(const ConformityMeasure &measure, const SplitDataset &dataset) {
    return calibrate(measure, dataset.calibration);
}

[[nodiscard]] inline std::vector<CalibrationRecord> calibrate(const ConformityMeasure &measure, const SplitDataset &dataset, const Taxonomy &taxonomy) {
    return calibrate(measure, dataset.calibration, taxonomy);
}

/**
 * floor(epsilon * denominator), treating products within 1e-9 of an integer as that integer.
 *
 * Significance levels arrive as decimal strings ("0.29"), whose binary value can sit a few
 * ulps below the intended product (0.29 * 100 = 28.999999999999996). Every threshold in the
 * library (set membership, the discard count floor(eps(n+1)) - 1, the one-sided order
 * statistic) goes through this function so they agree with each other.
 */
[[nodiscard]] inline std::int64_t significance_floor(double epsilon, std::size_t denominator) {
    const double product = epsilon * static_cast<double>(denominator);
    const double nearest = std::nearbyint(product);
    if (std::abs(product - nearest) <= 1e-9) {
        return static_cast<std::int64_t>(nearest);
    }
    return static_cast<std::int64_t>(std::floor(product));
}

inline void require_significance(double epsilon) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
        throw configuration_error{ "significance level must lie in [0, 1], got " + std::to_string(epsilon) };
    }
}

}  // namespace conformal

#endif  // CONFORMAL_CORE_HPP_
