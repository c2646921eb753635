#ifndef CONFORMAL_SCORER_HPP_
#define CONFORMAL_SCORER_HPP_
#pragma once

#include "conformal/core.hpp"
#include "conformal/error.hpp"

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace conformal {

/// Per-feature affine map to mean 0 / variance 1, using statistics of the data it was fitted on.
class Standardizer {
  public:
    Standardizer() = default;

    [[nodiscard]] static Standardizer fit(std::span<const Example> examples) {
        if (examples.empty()) {
            throw configuration_error{ "cannot standardize an empty training set" };
        }
        const std::size_t d = examples.front().object.size();
        Standardizer s;
        s.mean_.assign(d, 0.0);
        s.scale_.assign(d, 0.0);
        for (const auto &z : examples) {
            if (z.object.size() != d) {
                throw dimension_error{ "inconsistent feature dimension in training set" };
            }
            for (std::size_t j = 0; j < d; ++j) {
                s.mean_[j] += z.object[j];
            }
        }
        const auto count = static_cast<double>(examples.size());
        for (auto &m : s.mean_) {
            m /= count;
        }
        for (const auto &z : examples) {
            for (std::size_t j = 0; j < d; ++j) {
                const double c = z.object[j] - s.mean_[j];
                s.scale_[j] += c * c;
            }
        }
        for (auto &v : s.scale_) {
            const double sd = std::sqrt(v / count);
            v = sd > 0.0 ? sd : 1.0;  // constant feature: centre only
        }
        return s;
    }

    [[nodiscard]] std::size_t dimension() const noexcept { return mean_.size(); }

    [[nodiscard]] double transform(std::size_t j, double value) const noexcept { return (value - mean_[j]) / scale_[j]; }

    [[nodiscard]] std::vector<double> transform(std::span<const double> object) const {
        std::vector<double> out(object.size());
        for (std::size_t j = 0; j < object.size(); ++j) {
            out[j] = transform(j, object[j]);
        }
        return out;
    }

    [[nodiscard]] const std::vector<double> &mean() const noexcept { return mean_; }
    [[nodiscard]] const std::vector<double> &scale() const noexcept { return scale_; }

  private:
    std::vector<double> mean_;
    std::vector<double> scale_;
};

/// Full-batch gradient descent settings for the logistic model.
struct FitOptions {
    double learning_rate{ 0.5 };
    std::size_t iterations{ 500 };
    double l2{ 1e-3 };
};

/**
 * Mean logistic loss plus (l2/2)|w|^2 on standardized features. Parameters are the d
 * weights followed by the intercept (which is not penalised).
 */
class LogisticObjective {
  public:
    LogisticObjective(std::span<const Example> examples, Label positive, const Standardizer &standardizer, double l2) :
        dimension_{ standardizer.dimension() },
        l2_{ l2 } {
        design_.reserve(examples.size() * dimension_);
        targets_.reserve(examples.size());
        for (const auto &z : examples) {
            if (!z.label) {
                throw configuration_error{ "training example " + std::to_string(z.id) + " has no label" };
            }
            if (z.object.size() != dimension_) {
                throw dimension_error{ "training example " + std::to_string(z.id) + " has the wrong feature dimension" };
            }
            for (std::size_t j = 0; j < dimension_; ++j) {
                design_.push_back(standardizer.transform(j, z.object[j]));
            }
            targets_.push_back(*z.label == positive ? 1.0 : 0.0);
        }
    }

    [[nodiscard]] std::size_t parameter_count() const noexcept { return dimension_ + 1; }
    [[nodiscard]] std::size_t size() const noexcept { return targets_.size(); }

    [[nodiscard]] double loss(std::span<const double> params) const {
        double total = 0.0;
        for (std::size_t i = 0; i < targets_.size(); ++i) {
            const double t = margin(params, i);
            // log(1 + e^t) - y t, overflow-safe
            const double softplus = t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
            total += softplus - targets_[i] * t;
        }
        double penalty = 0.0;
        for (std::size_t j = 0; j < dimension_; ++j) {
            penalty += params[j] * params[j];
        }
        return total / static_cast<double>(targets_.size()) + 0.5 * l2_ * penalty;
    }

    [[nodiscard]] std::vector<double> gradient(std::span<const double> params) const {
        std::vector<double> grad(parameter_count(), 0.0);
        for (std::size_t i = 0; i < targets_.size(); ++i) {
            const double t = margin(params, i);
            const double residual = sigmoid(t) - targets_[i];
            const double *row = design_.data() + i * dimension_;
            for (std::size_t j = 0; j < dimension_; ++j) {
                grad[j] += residual * row[j];
            }
            grad[dimension_] += residual;
        }
        const auto count = static_cast<double>(targets_.size());
        for (std::size_t j = 0; j < dimension_; ++j) {
            grad[j] = grad[j] / count + l2_ * params[j];
        }
        grad[dimension_] /= count;
        return grad;
    }

    [[nodiscard]] static double sigmoid(double t) noexcept {
        if (t >= 0.0) {
            return 1.0 / (1.0 + std::exp(-t));
        }
        const double e = std::exp(t);
        return e / (1.0 + e);
    }

  private:
    [[nodiscard]] double margin(std::span<const double> params, std::size_t i) const noexcept {
        const double *row = design_.data() + i * dimension_;
        double t = params[dimension_];
        for (std::size_t j = 0; j < dimension_; ++j) {
            t += params[j] * row[j];
        }
        return t;
    }

    std::size_t dimension_;
    double l2_;
    std::vector<double> design_;  // row-major, standardized
    std::vector<double> targets_;
};

/// Linear model on the log-odds scale: f(x) = w . standardize(x) + b.
class LinearLogitModel final : public Scorer {
  public:
    LinearLogitModel(Standardizer standardizer, std::vector<double> params, FitOptions options) :
        standardizer_{ std::move(standardizer) },
        params_{ std::move(params) },
        options_{ options } {
        if (params_.size() != standardizer_.dimension() + 1) {
            throw configuration_error{ "logistic model needs one weight per feature plus an intercept" };
        }
    }

    [[nodiscard]] double operator()(const Example &example) const override { return decision(example.object); }

    [[nodiscard]] double decision(std::span<const double> object) const {
        if (object.size() != standardizer_.dimension()) {
            throw dimension_error{ "object has " + std::to_string(object.size()) + " features, model expects " + std::to_string(standardizer_.dimension()) };
        }
        double t = params_.back();
        for (std::size_t j = 0; j < object.size(); ++j) {
            t += params_[j] * standardizer_.transform(j, object[j]);
        }
        return t;
    }

    [[nodiscard]] std::optional<std::size_t> dimension() const override { return standardizer_.dimension(); }

    [[nodiscard]] std::span<const double> weights() const noexcept { return { params_.data(), params_.size() - 1 }; }
    [[nodiscard]] double intercept() const noexcept { return params_.back(); }
    [[nodiscard]] const std::vector<double> &parameters() const noexcept { return params_; }
    [[nodiscard]] const FitOptions &options() const noexcept { return options_; }
    [[nodiscard]] const Standardizer &standardizer() const noexcept { return standardizer_; }

  private:
    Standardizer standardizer_;
    std::vector<double> params_;
    FitOptions options_;
};

/**
 * Fits the logistic model by full-batch gradient descent. Weights start at zero and the
 * intercept at the log prior odds, so zero iterations gives the intercept-only model.
 */
[[nodiscard]] inline LinearLogitModel fit(std::span<const Example> proper_training, Label positive, const FitOptions &options = {}) {
    if (proper_training.empty()) {
        throw configuration_error{ "proper training set is empty" };
    }
    if (!(options.learning_rate > 0.0) || options.l2 < 0.0) {
        throw configuration_error{ "learning rate must be positive and l2 non-negative" };
    }
    std::size_t positives = 0;
    for (const auto &z : proper_training) {
        if (!z.label) {
            throw configuration_error{ "training example " + std::to_string(z.id) + " has no label" };
        }
        positives += *z.label == positive ? 1 : 0;
    }
    const std::size_t negatives = proper_training.size() - positives;
    if (positives == 0 || negatives == 0) {
        throw configuration_error{ "proper training set must contain both classes" };
    }

    auto standardizer = Standardizer::fit(proper_training);
    const LogisticObjective objective{ proper_training, positive, standardizer, options.l2 };
    std::vector<double> params(objective.parameter_count(), 0.0);
    params.back() = std::log(static_cast<double>(positives) / static_cast<double>(negatives));
    for (std::size_t it = 0; it < options.iterations; ++it) {
        const auto grad = objective.gradient(params);
        for (std::size_t j = 0; j < params.size(); ++j) {
            params[j] -= options.learning_rate * grad[j];
        }
    }
    return { std::move(standardizer), std::move(params), options };
}

/// Adapts any callable on examples into a Scorer.
class FunctionScorer final : public Scorer {
  public:
    explicit FunctionScorer(std::function<double(const Example &)> fn, std::optional<std::size_t> dim = std::nullopt) :
        fn_{ std::move(fn) },
        dim_{ dim } {}

    [[nodiscard]] double operator()(const Example &example) const override { return fn_(example); }
    [[nodiscard]] std::optional<std::size_t> dimension() const override { return dim_; }

  private:
    std::function<double(const Example &)> fn_;
    std::optional<std::size_t> dim_;
};

/// Precomputed f values keyed by example id (0-based row in the source dataset).
class ScoreTable final : public Scorer {
  public:
    ScoreTable() = default;

    explicit ScoreTable(std::map<std::size_t, double> scores) :
        scores_{ std::move(scores) } {}

    [[nodiscard]] double operator()(const Example &example) const override {
        const auto it = scores_.find(example.id);
        if (it == scores_.end()) {
            throw configuration_error{ "score file has no entry for example id " + std::to_string(example.id) };
        }
        return it->second;
    }

    [[nodiscard]] std::size_t size() const noexcept { return scores_.size(); }
    [[nodiscard]] const std::map<std::size_t, double> &scores() const noexcept { return scores_; }

    /// Every id 0..rows-1 present and nothing else.
    void require_covers(std::size_t rows, const std::string &source = "score file") const {
        if (scores_.size() != rows) {
            throw ingestion_error{ source + ": " + std::to_string(scores_.size()) + " scores for a dataset of " + std::to_string(rows) + " rows" };
        }
        std::size_t expected = 0;
        for (const auto &[id, score] : scores_) {
            if (id != expected) {
                throw ingestion_error{ source + ": missing id " + std::to_string(expected) };
            }
            ++expected;
        }
    }

  private:
    std::map<std::size_t, double> scores_;
};

namespace detail {

inline std::string_view trim(std::string_view s) noexcept {
    const auto not_space = [](char c) { return c != ' ' && c != '\t' && c != '\r' && c != '\n'; };
    while (!s.empty() && !not_space(s.front())) {
        s.remove_prefix(1);
    }
    while (!s.empty() && !not_space(s.back())) {
        s.remove_suffix(1);
    }
    return s;
}

inline std::optional<double> to_double(std::string_view s) noexcept {
    s = trim(s);
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    double v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

inline std::optional<std::size_t> to_index(std::string_view s) noexcept {
    s = trim(s);
    std::size_t v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
        return std::nullopt;
    }
    return v;
}

}  // namespace detail

/// Parses `id,score` lines; a first line whose cells are both non-numeric is a header.
[[nodiscard]] inline ScoreTable parse_scores(std::istream &in, const std::string &source = "<scores>") {
    std::map<std::size_t, double> scores;
    std::string line;
    std::size_t line_no = 0;
    bool any_line = false;
    while (std::getline(in, line)) {
        ++line_no;
        const auto text = detail::trim(line);
        if (text.empty()) {
            continue;
        }
        const auto comma = text.find(',');
        if (comma == std::string_view::npos || text.find(',', comma + 1) != std::string_view::npos) {
            throw ingestion_error{ source, line_no, "expected two columns 'id,score'" };
        }
        const auto id_cell = text.substr(0, comma);
        const auto score_cell = text.substr(comma + 1);
        const auto id = detail::to_index(id_cell);
        const auto score = detail::to_double(score_cell);
        if (!any_line && !id && !detail::to_double(id_cell) && !score) {
            any_line = true;  // header
            continue;
        }
        any_line = true;
        if (!id) {
            throw ingestion_error{ source, line_no, "id '" + std::string{ detail::trim(id_cell) } + "' is not a non-negative integer" };
        }
        if (!score) {
            throw ingestion_error{ source, line_no, "score '" + std::string{ detail::trim(score_cell) } + "' is not a finite number" };
        }
        if (!scores.emplace(*id, *score).second) {
            throw ingestion_error{ source, line_no, "duplicate id " + std::to_string(*id) };
        }
    }
    if (scores.empty()) {
        throw ingestion_error{ source + ": no scores found" };
    }
    return ScoreTable{ std::move(scores) };
}

[[nodiscard]] inline ScoreTable load_scores(const std::string &path) {
    std::ifstream in{ path };
    if (!in) {
        throw ingestion_error{ "cannot open score file '" + path + "'" };
    }
    return parse_scores(in, path);
}

/// Binary similarity measure over precomputed scores read from a file.
class ScoreFileMeasure final : public BinaryScoreMeasure {
  public:
    ScoreFileMeasure(std::shared_ptr<const ScoreTable> table, Label positive) :
        BinaryScoreMeasure{ table, positive },
        table_{ std::move(table) } {}

    [[nodiscard]] const ScoreTable &table() const noexcept { return *table_; }

  private:
    std::shared_ptr<const ScoreTable> table_;
};

}  // namespace conformal

#endif  // CONFORMAL_SCORER_HPP_
