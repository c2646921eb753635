#ifndef CONFORMAL_SIM_HPP_
#define CONFORMAL_SIM_HPP_
#pragma once

#include "conformal/conditional.hpp"
#include "conformal/core.hpp"
#include "conformal/detail/parallel.hpp"
#include "conformal/error.hpp"
#include "conformal/icp.hpp"
#include "conformal/rng.hpp"
#include "conformal/scorer.hpp"
#include "conformal/validity.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace conformal::sim {

enum class GeneratorKind {
    two_gaussian_binary,  ///< x | y ~ N(mean_y, sd_y^2 I)
    uniform_real,         ///< a real label y ~ U(0, 1) with no object; the score is y itself
    label_skewed_binary,  ///< two_gaussian_binary with unequal priors and class-dependent spread
};

[[nodiscard]] inline const char *to_string(GeneratorKind kind) noexcept {
    switch (kind) {
        case GeneratorKind::two_gaussian_binary:
            return "two-gaussian";
        case GeneratorKind::uniform_real:
            return "uniform-real";
        case GeneratorKind::label_skewed_binary:
            return "label-skewed";
    }
    return "unknown";
}

[[nodiscard]] inline GeneratorKind parse_generator(std::string_view text) {
    if (text == "two-gaussian" || text == "two-gaussian-binary") {
        return GeneratorKind::two_gaussian_binary;
    }
    if (text == "uniform-real") {
        return GeneratorKind::uniform_real;
    }
    if (text == "label-skewed" || text == "label-skewed-binary") {
        return GeneratorKind::label_skewed_binary;
    }
    throw configuration_error{ "unknown generator '" + std::string{ text } + "' (expected two-gaussian, uniform-real or label-skewed)" };
}

/// Which f the binary generators use.
enum class ScorerKind {
    fitted,    ///< LinearLogitModel fitted on a fresh proper training set each trial
    oracle,    ///< the true log-odds of the generator
    constant,  ///< f = 0: every score ties
};

[[nodiscard]] inline ScorerKind parse_scorer_kind(std::string_view text) {
    if (text == "fitted") {
        return ScorerKind::fitted;
    }
    if (text == "oracle") {
        return ScorerKind::oracle;
    }
    if (text == "constant") {
        return ScorerKind::constant;
    }
    throw configuration_error{ "unknown simulation scorer '" + std::string{ text } + "' (expected fitted, oracle or constant)" };
}

inline constexpr Label negative_label{ 0 };
inline constexpr Label positive_label{ 1 };

[[nodiscard]] inline LabelAlphabet binary_alphabet() { return LabelAlphabet{ { "0", "1" } }; }

struct SyntheticSpec {
    GeneratorKind kind{ GeneratorKind::two_gaussian_binary };
    double positive_prior{ 0.5 };
    double negative_mean{ -1.0 };
    double positive_mean{ 1.0 };
    double negative_sd{ 1.0 };
    double positive_sd{ 1.0 };
    std::size_t dimension{ 2 };
    std::size_t proper_training{ 100 };
    ScorerKind scorer{ ScorerKind::fitted };
    FitOptions fit{ 0.5, 100, 1e-3 };
    /// Fresh examples per trial used to estimate coverage when it has no closed form.
    std::size_t test_batch{ 10000 };
    std::uint64_t seed{ 0 };

    [[nodiscard]] static SyntheticSpec two_gaussian(std::uint64_t seed = 0) {
        SyntheticSpec s;
        s.seed = seed;
        return s;
    }

    /// 9:1 negatives to positives; negatives tightly clustered, positives diffuse.
    [[nodiscard]] static SyntheticSpec label_skewed(std::uint64_t seed = 0) {
        SyntheticSpec s;
        s.kind = GeneratorKind::label_skewed_binary;
        s.positive_prior = 0.1;
        s.negative_mean = -1.0;
        s.negative_sd = 0.5;
        s.positive_mean = 1.0;
        s.positive_sd = 2.0;
        s.seed = seed;
        return s;
    }

    [[nodiscard]] static SyntheticSpec uniform_real(std::uint64_t seed = 0) {
        SyntheticSpec s;
        s.kind = GeneratorKind::uniform_real;
        s.dimension = 0;
        s.seed = seed;
        return s;
    }

    void validate() const {
        if (kind != GeneratorKind::uniform_real) {
            if (!(positive_prior > 0.0 && positive_prior < 1.0)) {
                throw configuration_error{ "class prior must lie strictly between 0 and 1" };
            }
            if (!(negative_sd > 0.0 && positive_sd > 0.0)) {
                throw configuration_error{ "class spreads must be positive" };
            }
            if (dimension < 1) {
                throw configuration_error{ "binary generators need at least one feature" };
            }
            if (scorer == ScorerKind::fitted && proper_training < 2) {
                throw configuration_error{ "fitted scorer needs a proper training set of at least 2" };
            }
        }
    }
};

/// Example generator bound to one random stream.
class Generator {
  public:
    Generator(const SyntheticSpec &spec, counter_rng &rng) :
        spec_{ spec },
        rng_{ rng } {}

    [[nodiscard]] Example draw_with_label(Label y) {
        Example z;
        z.id = next_id_++;
        z.label = y;
        const bool pos = y == positive_label;
        const double mean = pos ? spec_.positive_mean : spec_.negative_mean;
        const double sd = pos ? spec_.positive_sd : spec_.negative_sd;
        z.object.resize(spec_.dimension);
        for (auto &v : z.object) {
            v = rng_.normal(mean, sd);
        }
        return z;
    }

    [[nodiscard]] Example draw() { return draw_with_label(rng_.bernoulli(spec_.positive_prior) ? positive_label : negative_label); }

    [[nodiscard]] std::vector<Example> draw(std::size_t count) {
        std::vector<Example> out;
        out.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            out.push_back(draw());
        }
        return out;
    }

    /// Class counts fixed at round(count * prior), at least one of each. Only used for proper
    /// training sets, which need not be exchangeable with calibration and test data.
    [[nodiscard]] std::vector<Example> draw_stratified(std::size_t count) {
        auto positives = static_cast<std::size_t>(std::llround(static_cast<double>(count) * spec_.positive_prior));
        positives = std::clamp<std::size_t>(positives, 1, count - 1);
        std::vector<Example> out;
        out.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            out.push_back(draw_with_label(i < positives ? positive_label : negative_label));
        }
        return out;
    }

  private:
    const SyntheticSpec &spec_;
    counter_rng &rng_;
    std::size_t next_id_{ 0 };
};

/// log P(y=1 | x) / P(y=0 | x) under the generator.
[[nodiscard]] inline double true_log_odds(const SyntheticSpec &spec, std::span<const double> x) noexcept {
    double t = std::log(spec.positive_prior / (1.0 - spec.positive_prior));
    for (const double v : x) {
        const double z1 = (v - spec.positive_mean) / spec.positive_sd;
        const double z0 = (v - spec.negative_mean) / spec.negative_sd;
        t += -0.5 * z1 * z1 - std::log(spec.positive_sd) + 0.5 * z0 * z0 + std::log(spec.negative_sd);
    }
    return t;
}

/// The conformity measure for one trial.
[[nodiscard]] inline std::shared_ptr<const BinaryScoreMeasure> make_measure(const SyntheticSpec &spec, Generator &gen) {
    std::shared_ptr<const Scorer> f;
    switch (spec.scorer) {
        case ScorerKind::fitted:
            f = std::make_shared<LinearLogitModel>(fit(gen.draw_stratified(spec.proper_training), positive_label, spec.fit));
            break;
        case ScorerKind::oracle:
            f = std::make_shared<FunctionScorer>([spec](const Example &z) { return true_log_odds(spec, z.object); }, spec.dimension);
            break;
        case ScorerKind::constant:
            f = std::make_shared<FunctionScorer>([](const Example &) { return 0.0; });
            break;
    }
    return std::make_shared<BinaryScoreMeasure>(std::move(f), positive_label);
}

struct CategoryRate {
    std::size_t trials{ 0 };
    std::size_t errors{ 0 };

    [[nodiscard]] double rate() const noexcept { return trials == 0 ? 0.0 : static_cast<double>(errors) / static_cast<double>(trials); }

    /// sqrt(eps (1 - eps) / trials): binomial standard error of a rate with mean eps.
    [[nodiscard]] double standard_error(double epsilon) const noexcept {
        return trials == 0 ? 0.0 : std::sqrt(epsilon * (1.0 - epsilon) / static_cast<double>(trials));
    }
};

/// Result of a Monte Carlo validity experiment. Per-trial coverage is either the 0/1
/// outcome for the trial's single test example or that trial's (estimated or exact) coverage.
struct CoverageReport {
    std::string mode;
    std::string generator;
    std::size_t trials{ 0 };
    std::size_t calibration_size{ 0 };
    double epsilon{ 0.0 };
    std::uint64_t seed{ 0 };
    std::vector<double> coverage;
    std::size_t errors{ 0 };
    double empirical_error_rate{ 0.0 };
    ProportionInterval error_interval{ 0.0, 1.0 };
    std::map<std::string, CategoryRate> per_category;
    /// Label-conditional mode: the unconditional ICP evaluated on the same stream.
    std::map<std::string, CategoryRate> unconditional_per_category;
    std::optional<double> ks_statistic_vs_beta;
    std::optional<double> ks_critical_value;
    std::optional<double> delta;
    std::optional<double> exact_E;
    std::optional<double> fraction_below_exact;  ///< trials with coverage < 1 - exact_E
    std::optional<std::size_t> formulation_disagreements;
    std::size_t test_batch{ 0 };  ///< 0 when coverage came from a closed form or a single test example
    std::string rng{ philox4x32::name };

    [[nodiscard]] double standard_error() const noexcept { return std::sqrt(epsilon * (1.0 - epsilon) / static_cast<double>(trials)); }
};

/// Kolmogorov-Smirnov distance between a sample and a continuous distribution function.
template <typename Cdf>
[[nodiscard]] double ks_statistic(std::vector<double> sample, Cdf &&cdf) {
    if (sample.empty()) {
        throw configuration_error{ "KS statistic of an empty sample" };
    }
    std::sort(sample.begin(), sample.end());
    const auto n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double F = cdf(sample[i]);
        d = std::max({ d, F - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - F });
    }
    return d;
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
[[nodiscard]] inline double ks_critical_1pct(std::size_t n) noexcept { return 1.63 / std::sqrt(static_cast<double>(n)); }

namespace detail {

inline void require_trials(std::size_t trials, std::size_t n) {
    if (trials < 1) {
        throw configuration_error{ "need at least one trial" };
    }
    if (n < 1) {
        throw configuration_error{ "calibration size must be at least 1" };
    }
}

inline void finish(CoverageReport &report) {
    report.empirical_error_rate = static_cast<double>(report.errors) / static_cast<double>(report.trials);
    report.error_interval = clopper_pearson(report.errors, report.trials, 0.95);
}

inline std::string label_name(Label y) { return y == positive_label ? "1" : "0"; }

inline counter_rng trial_rng(const SyntheticSpec &spec, std::size_t trial) { return counter_rng{ spec.seed, 0x7472690000000000ULL + trial }; }

}  // namespace detail

/**
 * Each trial draws a proper training set, n calibration examples and one test example,
 * and records whether the ICP at level epsilon misses the test label.
 */
[[nodiscard]] inline CoverageReport run_unconditional_validity_trial(const SyntheticSpec &spec, std::size_t n, double epsilon, std::size_t trials,
                                                                     std::size_t threads = 0) {
    spec.validate();
    require_significance(epsilon);
    detail::require_trials(trials, n);
    struct Outcome {
        bool error;
        int category;
    };
    std::vector<Outcome> outcomes(trials);
    conformal::detail::parallel_for(
        trials,
        [&](std::size_t t) {
            auto rng = detail::trial_rng(spec, t);
            if (spec.kind == GeneratorKind::uniform_real) {
                std::vector<double> scores(n);
                for (auto &s : scores) {
                    s = rng.uniform();
                }
                const double y = rng.uniform();
                outcomes[t] = { !exceeds(p_value(scores, y), epsilon), -1 };
                return;
            }
            Generator gen{ spec, rng };
            auto measure = make_measure(spec, gen);
            const auto calibration = gen.draw(n);
            const auto icp = InductiveConformalPredictor::calibrated(measure, binary_alphabet(), calibration);
            const Example test = gen.draw();
            outcomes[t] = { !exceeds(icp.p_value(test, *test.label), epsilon), static_cast<int>(test.label->index) };
        },
        threads);

    CoverageReport report;
    report.mode = "unconditional";
    report.generator = to_string(spec.kind);
    report.trials = trials;
    report.calibration_size = n;
    report.epsilon = epsilon;
    report.seed = spec.seed;
    report.coverage.reserve(trials);
    for (const auto &o : outcomes) {
        report.coverage.push_back(o.error ? 0.0 : 1.0);
        report.errors += o.error ? 1 : 0;
        if (o.category >= 0) {
            auto &c = report.per_category[detail::label_name(Label{ static_cast<std::uint32_t>(o.category) })];
            ++c.trials;
            c.errors += o.error ? 1 : 0;
        }
    }
    detail::finish(report);
    return report;
}

/**
 * Each trial fixes one calibration set and measures the coverage of the resulting
 * predictor: exactly for uniform-real (1 - y_(L) of the Wilks interval [y_(L), +inf)),
 * otherwise over `spec.test_batch` fresh examples. When `compare_beta` is set, the sample of
 * coverages is compared with Beta((1 - eps)(n + 1), eps (n + 1)), which requires eps (n + 1)
 * to be an integer. When `delta` is given, also reports the fraction of trials whose
 * coverage falls below 1 - exact_E(eps, delta, n).
 */
[[nodiscard]] inline CoverageReport run_training_conditional_trial(const SyntheticSpec &spec, std::size_t n, double epsilon, std::size_t trials, bool compare_beta = true,
                                                                   std::optional<double> delta = std::nullopt, std::size_t threads = 0) {
    spec.validate();
    require_significance(epsilon);
    detail::require_trials(trials, n);
    const double blocks = epsilon * static_cast<double>(n + 1);
    const auto discarded = static_cast<std::size_t>(significance_floor(epsilon, n + 1));
    if (compare_beta && std::abs(blocks - std::nearbyint(blocks)) > 1e-9) {
        throw configuration_error{ "Beta comparison needs epsilon (n + 1) to be an integer" };
    }
    const bool exact = spec.kind == GeneratorKind::uniform_real;
    if (!exact && spec.test_batch < 1) {
        throw configuration_error{ "coverage estimation needs a positive test batch" };
    }

    std::vector<double> coverage(trials);
    conformal::detail::parallel_for(
        trials,
        [&](std::size_t t) {
            auto rng = detail::trial_rng(spec, t);
            if (exact) {
                std::vector<double> sample(n);
                for (auto &s : sample) {
                    s = rng.uniform();
                }
                const auto interval = wilks_interval(sample, discarded, n + 1);
                coverage[t] = 1.0 - std::max(0.0, interval.lower);
                return;
            }
            Generator gen{ spec, rng };
            auto measure = make_measure(spec, gen);
            const auto calibration = gen.draw(n);
            const auto icp = InductiveConformalPredictor::calibrated(measure, binary_alphabet(), calibration);
            std::size_t covered = 0;
            for (std::size_t i = 0; i < spec.test_batch; ++i) {
                const Example z = gen.draw();
                covered += exceeds(icp.p_value(z, *z.label), epsilon) ? 1 : 0;
            }
            coverage[t] = static_cast<double>(covered) / static_cast<double>(spec.test_batch);
        },
        threads);

    CoverageReport report;
    report.mode = "training-conditional";
    report.generator = to_string(spec.kind);
    report.trials = trials;
    report.calibration_size = n;
    report.epsilon = epsilon;
    report.seed = spec.seed;
    report.test_batch = exact ? 0 : spec.test_batch;
    report.coverage = coverage;
    // a trial "errs" when its coverage falls short of 1 - epsilon
    for (const double c : coverage) {
        report.errors += c < 1.0 - epsilon ? 1 : 0;
    }
    detail::finish(report);
    if (compare_beta && discarded > 0) {
        const auto a = static_cast<double>(n + 1 - discarded);
        const auto b = static_cast<double>(discarded);
        report.ks_statistic_vs_beta = ks_statistic(coverage, [a, b](double x) { return beta_cdf(a, b, x); });
        report.ks_critical_value = ks_critical_1pct(trials);
    }
    if (delta) {
        const double E = exact_E(epsilon, *delta, n);
        report.delta = delta;
        report.exact_E = E;
        const auto below = std::count_if(coverage.begin(), coverage.end(), [E](double c) { return c < 1.0 - E; });
        report.fraction_below_exact = static_cast<double>(below) / static_cast<double>(trials);
    }
    return report;
}

/**
 * Label conditional ICP vs plain ICP on the same stream: each trial calibrates both on one
 * calibration set and predicts one test example. per_category holds the label conditional
 * error rates by true label, unconditional_per_category the plain ICP's.
 */
[[nodiscard]] inline CoverageReport run_label_conditional_trial(const SyntheticSpec &spec, std::size_t n, double epsilon, std::size_t trials, std::size_t threads = 0) {
    spec.validate();
    require_significance(epsilon);
    detail::require_trials(trials, n);
    if (spec.kind == GeneratorKind::uniform_real) {
        throw configuration_error{ "label conditional trials need a binary generator" };
    }
    struct Outcome {
        Label label;
        bool conditional_error;
        bool unconditional_error;
    };
    std::vector<Outcome> outcomes(trials);
    const auto taxonomy = std::make_shared<const LabelTaxonomy>();
    conformal::detail::parallel_for(
        trials,
        [&](std::size_t t) {
            auto rng = detail::trial_rng(spec, t);
            Generator gen{ spec, rng };
            auto measure = make_measure(spec, gen);
            const auto calibration = gen.draw(n);
            const auto records = calibrate(*measure, calibration, *taxonomy);
            const ConditionalConformalPredictor conditional{ measure, taxonomy, binary_alphabet(), records };
            const InductiveConformalPredictor unconditional{ measure, binary_alphabet(), records };
            const Example test = gen.draw();
            outcomes[t] = { *test.label, !exceeds(conditional.p_value(test, *test.label), epsilon), !exceeds(unconditional.p_value(test, *test.label), epsilon) };
        },
        threads);

    CoverageReport report;
    report.mode = "label-conditional";
    report.generator = to_string(spec.kind);
    report.trials = trials;
    report.calibration_size = n;
    report.epsilon = epsilon;
    report.seed = spec.seed;
    report.coverage.reserve(trials);
    for (const auto &o : outcomes) {
        report.coverage.push_back(o.conditional_error ? 0.0 : 1.0);
        report.errors += o.conditional_error ? 1 : 0;
        const auto name = detail::label_name(o.label);
        auto &c = report.per_category[name];
        ++c.trials;
        c.errors += o.conditional_error ? 1 : 0;
        auto &u = report.unconditional_per_category[name];
        ++u.trials;
        u.errors += o.unconditional_error ? 1 : 0;
    }
    detail::finish(report);
    return report;
}

/**
 * One-sided label conditional classifier: each trial calibrates under the label taxonomy
 * and classifies one test example as positive iff p^0 <= epsilon. per_category["0"] is the
 * rate of negatives classified positive (the controlled error), per_category["1"] the rate
 * of positives classified negative. Also counts disagreements between the p-value and
 * order-statistic formulations.
 */
[[nodiscard]] inline CoverageReport run_one_sided_trial(const SyntheticSpec &spec, std::size_t n, double epsilon, std::size_t trials, std::size_t threads = 0) {
    spec.validate();
    require_significance(epsilon);
    detail::require_trials(trials, n);
    if (spec.kind == GeneratorKind::uniform_real) {
        throw configuration_error{ "one-sided trials need a binary generator" };
    }
    struct Outcome {
        Label label;
        bool positive;
        bool agree;
    };
    std::vector<Outcome> outcomes(trials);
    const LabelTaxonomy taxonomy;
    conformal::detail::parallel_for(
        trials,
        [&](std::size_t t) {
            auto rng = detail::trial_rng(spec, t);
            Generator gen{ spec, rng };
            auto measure = make_measure(spec, gen);
            const auto calibration = gen.draw(n);
            const auto records = calibrate(*measure, calibration, taxonomy);
            const Example test = gen.draw();
            const double f = measure->predict(test);
            const bool by_p_value = one_sided_is_positive(records, f, epsilon, negative_label);
            const bool by_order_statistic = OneSidedClassifier{ records, epsilon, negative_label }.is_positive(f);
            outcomes[t] = { *test.label, by_p_value, by_p_value == by_order_statistic };
        },
        threads);

    CoverageReport report;
    report.mode = "one-sided";
    report.generator = to_string(spec.kind);
    report.trials = trials;
    report.calibration_size = n;
    report.epsilon = epsilon;
    report.seed = spec.seed;
    report.formulation_disagreements = 0;
    report.coverage.reserve(trials);
    for (const auto &o : outcomes) {
        const bool wrong = o.positive != (o.label == positive_label);
        report.coverage.push_back(wrong ? 0.0 : 1.0);
        report.errors += wrong ? 1 : 0;
        auto &c = report.per_category[detail::label_name(o.label)];
        ++c.trials;
        c.errors += wrong ? 1 : 0;
        *report.formulation_disagreements += o.agree ? 0 : 1;
    }
    detail::finish(report);
    return report;
}

}  // namespace conformal::sim

#endif  // CONFORMAL_SIM_HPP_
