#ifndef CONFORMAL_EXPERIMENT_HPP_
#define CONFORMAL_EXPERIMENT_HPP_
#pragma once

#include "conformal/conditional.hpp"
#include "conformal/core.hpp"
#include "conformal/dataset.hpp"
#include "conformal/detail/parallel.hpp"
#include "conformal/error.hpp"
#include "conformal/icp.hpp"
#include "conformal/roc.hpp"
#include "conformal/rng.hpp"
#include "conformal/scorer.hpp"
#include "conformal/sim.hpp"
#include "conformal/validity.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace conformal {

/// Where f comes from: the built-in logistic model or a score file.
struct ScorerChoice {
    std::optional<std::string> file;

    [[nodiscard]] bool builtin() const noexcept { return !file.has_value(); }
    [[nodiscard]] std::string describe() const { return file ? "file:" + *file : "builtin"; }

    [[nodiscard]] static ScorerChoice parse(std::string_view text) {
        if (text == "builtin") {
            return {};
        }
        if (text.starts_with("file:") && text.size() > 5) {
            return { std::string{ text.substr(5) } };
        }
        throw configuration_error{ "scorer must be 'builtin' or 'file:<path>', got '" + std::string{ text } + "'" };
    }
};

/// Parses "a..b" (inclusive) or a comma separated list.
[[nodiscard]] inline std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
    const auto bad = [&] { return configuration_error{ "seed list must be 'a..b' or 'a,b,...', got '" + std::string{ text } + "'" }; };
    std::vector<std::uint64_t> seeds;
    if (const auto dots = text.find(".."); dots != std::string_view::npos) {
        const auto lo = detail::to_index(text.substr(0, dots));
        const auto hi = detail::to_index(text.substr(dots + 2));
        if (!lo || !hi || *lo > *hi) {
            throw bad();
        }
        for (auto s = *lo; s <= *hi; ++s) {
            seeds.push_back(s);
        }
        return seeds;
    }
    for (const auto cell : detail::split_csv_line(text)) {
        const auto v = detail::to_index(cell);
        if (!v) {
            throw bad();
        }
        seeds.push_back(*v);
    }
    return seeds;
}

struct ExperimentConfig {
    std::string data_path;
    DataFormat format{ DataFormat::spambase_csv };
    SplitSizes split{};
    std::vector<std::uint64_t> seeds{ 0, 1, 2, 3, 4, 5, 6, 7 };
    double epsilon{ 0.05 };
    std::string taxonomy{ "label" };
    ScorerChoice scorer{};
    std::string out_dir;
    /// Name of the label f scores positively; empty picks "1" or "spam", else the last label.
    std::string positive;
    /// Taxonomy used only to break the test-set tables into rows. Empty means the Spambase
    /// "$" split for Spambase data and no split otherwise; "none" disables it.
    std::string report_split;
    FitOptions fit{};
    std::size_t threads{ 0 };

    void validate() const {
        require_significance(epsilon);
        if (seeds.empty()) {
            throw configuration_error{ "seed list is empty" };
        }
    }
};

/// Test-set counts for one row of the table.
struct OutcomeCounts {
    std::string group;
    std::size_t count{ 0 };
    std::size_t errors{ 0 };
    std::size_t multiple{ 0 };
    std::size_t empty{ 0 };

    [[nodiscard]] static double percent(std::size_t k, std::size_t n) noexcept { return n == 0 ? 0.0 : 100.0 * static_cast<double>(k) / static_cast<double>(n); }
    [[nodiscard]] double error_percent() const noexcept { return percent(errors, count); }
    [[nodiscard]] double multiple_percent() const noexcept { return percent(multiple, count); }
    [[nodiscard]] double empty_percent() const noexcept { return percent(empty, count); }
};

struct PValueRow {
    std::size_t id{ 0 };
    Label label{};
    std::vector<PValue> p_values;
    bool error{ false };
    std::size_t set_size{ 0 };
};

/// Test error fraction at each significance level of the grid, overall and by true label.
struct CalibrationPoint {
    double epsilon{ 0.0 };
    double overall{ 0.0 };
    std::vector<double> per_label;
};

struct ErrorInterval {
    std::string group;
    std::size_t errors{ 0 };
    std::size_t count{ 0 };
    ProportionInterval ci95{ 0.0, 1.0 };
    ProportionInterval ci80{ 0.0, 1.0 };
};

/// Distance from each test (p^0, p^1) to the calibration ROC point set.
struct RocCheck {
    bool performed{ false };
    std::size_t checked{ 0 };
    std::size_t violations{ 0 };
    double max_distance{ 0.0 };
    double bound{ 0.0 };
    std::size_t n0{ 0 };
    std::size_t n1{ 0 };
};

struct SeedResult {
    std::uint64_t seed{ 0 };
    std::vector<std::size_t> calibration_label_counts;
    std::vector<OutcomeCounts> rows;
    std::vector<PValueRow> p_values;
    std::vector<CalibrationPoint> calibration_curve;
    std::vector<ErrorInterval> intervals;
    RocCheck roc;
};

struct AverageRow {
    std::string group;
    double error_percent{ 0.0 };
    double multiple_percent{ 0.0 };
    double empty_percent{ 0.0 };
};

struct ExperimentReport {
    ExperimentConfig config;
    LabelAlphabet alphabet;
    Label positive{};
    std::size_t dataset_size{ 0 };
    std::size_t feature_count{ 0 };
    std::string taxonomy;
    std::string report_split;
    std::vector<SeedResult> seeds;
    std::vector<AverageRow> averages;
};

inline constexpr std::size_t calibration_grid_steps = 100;

namespace detail {

inline Label resolve_positive(const LabelAlphabet &alphabet, const std::string &requested) {
    if (alphabet.size() != 2) {
        throw configuration_error{ "the experiment needs exactly two labels, found " + std::to_string(alphabet.size()) };
    }
    if (!requested.empty()) {
        const auto l = alphabet.find(requested);
        if (!l) {
            throw configuration_error{ "positive label '" + requested + "' does not occur in the data" };
        }
        return *l;
    }
    if (const auto l = default_positive_label(alphabet)) {
        return *l;
    }
    return alphabet.labels().back();
}

inline std::unique_ptr<Taxonomy> resolve_report_split(const ExperimentConfig &config, std::size_t feature_count) {
    std::string text = config.report_split;
    if (text.empty()) {
        if (config.format != DataFormat::spambase_csv) {
            return nullptr;
        }
        text = "feature:" + std::to_string(*spambase_feature_index("char_freq_$")) + ":" + format_number(spambase_dollar_threshold);
    }
    if (text == "none") {
        return nullptr;
    }
    auto taxonomy = parse_taxonomy(text);
    const auto *feature = dynamic_cast<const FeatureThresholdTaxonomy *>(taxonomy.get());
    if (!feature) {
        throw configuration_error{ "report split must be 'none' or feature:<index>:<threshold>" };
    }
    if (feature->feature() >= feature_count) {
        throw dimension_error{ "report split feature " + std::to_string(feature->feature()) + " outside " + std::to_string(feature_count) + " features" };
    }
    return taxonomy;
}

inline SeedResult run_seed(const ExperimentConfig &config, const Dataset &data, Label positive, const std::shared_ptr<const ScoreTable> &scores,
                           const std::shared_ptr<const Taxonomy> &taxonomy, const Taxonomy *report_split, std::uint64_t seed) {
    const auto parts = split(data, config.split, seed);
    std::shared_ptr<const BinaryScoreMeasure> measure;
    if (scores) {
        measure = std::make_shared<ScoreFileMeasure>(scores, positive);
    } else {
        measure = std::make_shared<BinaryScoreMeasure>(std::make_shared<LinearLogitModel>(fit(parts.proper_training, positive, config.fit)), positive);
    }
    const auto records = calibrate(*measure, parts.calibration, *taxonomy);
    const ConditionalConformalPredictor predictor{ measure, taxonomy, data.alphabet, records };

    SeedResult result;
    result.seed = seed;
    result.calibration_label_counts.assign(data.alphabet.size(), 0);
    for (const auto &z : parts.calibration) {
        ++result.calibration_label_counts[z.label->index];
    }

    const std::size_t labels = data.alphabet.size();
    std::vector<OutcomeCounts> rows;
    rows.push_back({ "overall" });
    for (const auto &name : data.alphabet.names()) {
        rows.push_back({ "label " + name });
    }
    if (report_split) {
        rows.push_back({ report_split->describe() + " <" });
        rows.push_back({ report_split->describe() + " >=" });
    }

    result.p_values.reserve(parts.test.size());
    std::vector<std::size_t> label_totals(labels, 0);
    std::vector<std::vector<std::size_t>> errors_at(calibration_grid_steps + 1, std::vector<std::size_t>(labels, 0));
    for (const auto &z : parts.test) {
        auto set = predictor.predict_set(z, config.epsilon);
        const auto outcome = classify_prediction(set, *z.label);
        const auto bump = [&](OutcomeCounts &row) {
            ++row.count;
            row.errors += outcome.error ? 1 : 0;
            row.multiple += outcome.multiple ? 1 : 0;
            row.empty += outcome.empty ? 1 : 0;
        };
        bump(rows[0]);
        bump(rows[1 + z.label->index]);
        if (report_split) {
            bump(rows[1 + labels + report_split->category(z, *z.label).value]);
        }
        ++label_totals[z.label->index];
        const PValue truth = set.p_values[z.label->index];
        for (std::size_t g = 0; g <= calibration_grid_steps; ++g) {
            const double eps = static_cast<double>(g) / static_cast<double>(calibration_grid_steps);
            errors_at[g][z.label->index] += exceeds(truth, eps) ? 0 : 1;
        }
        result.p_values.push_back({ z.id, *z.label, std::move(set.p_values), outcome.error, set.labels.size() });
    }
    result.rows = std::move(rows);

    const auto fraction = [](std::size_t k, std::size_t n) { return n == 0 ? 0.0 : static_cast<double>(k) / static_cast<double>(n); };
    for (std::size_t g = 0; g <= calibration_grid_steps; ++g) {
        CalibrationPoint pt;
        pt.epsilon = static_cast<double>(g) / static_cast<double>(calibration_grid_steps);
        std::size_t total = 0;
        for (std::size_t y = 0; y < labels; ++y) {
            pt.per_label.push_back(fraction(errors_at[g][y], label_totals[y]));
            total += errors_at[g][y];
        }
        pt.overall = fraction(total, parts.test.size());
        result.calibration_curve.push_back(std::move(pt));
    }

    for (const auto &row : result.rows) {
        if (row.count == 0) {
            result.intervals.push_back({ row.group, 0, 0 });
            continue;
        }
        result.intervals.push_back({ row.group, row.errors, row.count, clopper_pearson(row.errors, row.count, 0.95), clopper_pearson(row.errors, row.count, 0.80) });
    }

    if (taxonomy->describe() == "label") {
        const Label negative{ positive.index == 0 ? 1U : 0U };
        std::vector<double> s0;
        std::vector<double> s1;
        for (const auto &z : parts.calibration) {
            (*z.label == positive ? s1 : s0).push_back(measure->predict(z));
        }
        auto &roc = result.roc;
        roc.performed = true;
        roc.n0 = s0.size();
        roc.n1 = s1.size();
        roc.bound = roc_distance_bound(roc.n0, roc.n1);
        const auto curve = build_roc(s0, s1, RocVariant::empirical);
        for (const auto &row : result.p_values) {
            const double d = pvalue_roc_distance(row.p_values[negative.index].value(), row.p_values[positive.index].value(), curve);
            ++roc.checked;
            roc.max_distance = std::max(roc.max_distance, d);
            roc.violations += d > roc.bound * (1.0 + 1e-12) ? 1 : 0;
        }
        if (roc.violations > 0) {
            throw invariant_violation{ fmt::format("seed {}: {} test objects lie farther than {:.6g} from the ROC point set (max distance {:.6g})", seed, roc.violations,
                                                   roc.bound, roc.max_distance) };
        }
    }
    return result;
}

}  // namespace detail

/// Runs the split / fit / calibrate / predict pipeline for every seed on an in-memory dataset.
[[nodiscard]] inline ExperimentReport run_experiment(const ExperimentConfig &config, const Dataset &data) {
    config.validate();
    ExperimentReport report;
    report.config = config;
    report.alphabet = data.alphabet;
    report.dataset_size = data.size();
    report.feature_count = data.feature_count;
    report.positive = detail::resolve_positive(data.alphabet, config.positive);

    std::shared_ptr<const ScoreTable> scores;
    if (config.scorer.file) {
        auto table = std::make_shared<ScoreTable>(load_scores(*config.scorer.file));
        table->require_covers(data.size(), *config.scorer.file);
        scores = std::move(table);
    }
    const std::shared_ptr<const Taxonomy> taxonomy = parse_taxonomy(config.taxonomy);
    if (const auto *feature = dynamic_cast<const FeatureThresholdTaxonomy *>(taxonomy.get()); feature && feature->feature() >= data.feature_count) {
        throw dimension_error{ "taxonomy feature " + std::to_string(feature->feature()) + " outside " + std::to_string(data.feature_count) + " features" };
    }
    const auto report_split = detail::resolve_report_split(config, data.feature_count);
    report.taxonomy = taxonomy->describe();
    report.report_split = report_split ? report_split->describe() : "none";

    report.seeds.resize(config.seeds.size());
    detail::parallel_for(
        config.seeds.size(),
        [&](std::size_t i) { report.seeds[i] = detail::run_seed(config, data, report.positive, scores, taxonomy, report_split.get(), config.seeds[i]); },
        config.threads);

    const auto &first = report.seeds.front().rows;
    const auto k = static_cast<double>(report.seeds.size());
    for (std::size_t r = 0; r < first.size(); ++r) {
        AverageRow avg{ first[r].group };
        for (const auto &s : report.seeds) {
            avg.error_percent += s.rows[r].error_percent() / k;
            avg.multiple_percent += s.rows[r].multiple_percent() / k;
            avg.empty_percent += s.rows[r].empty_percent() / k;
        }
        report.averages.push_back(std::move(avg));
    }
    return report;
}

[[nodiscard]] inline ExperimentReport run_experiment(const ExperimentConfig &config) {
    if (config.data_path.empty()) {
        throw configuration_error{ "no data file given" };
    }
    return run_experiment(config, ingest(config.data_path, config.format));
}

/// Rows "delta,E_hoeffding,E_exact,E_alternative". At delta = 1 every E is admissible for
/// the exact bound, so its smallest value 0 is reported.
[[nodiscard]] inline std::string emit_bound_curves(double epsilon, std::size_t n, std::span<const double> delta_grid) {
    if (delta_grid.empty()) {
        throw configuration_error{ "delta grid is empty" };
    }
    require_significance(epsilon);
    require_calibration_size(n);
    std::string out = "delta,E_hoeffding,E_exact,E_alternative\n";
    for (const double delta : delta_grid) {
        const double exact = delta >= 1.0 ? 0.0 : exact_E(epsilon, delta, n);
        out += fmt::format("{:.6g},{:.10f},{:.10f},{:.10f}\n", delta, hoeffding_E(epsilon, delta, n), exact, alternative_E(epsilon, delta, n));
    }
    return out;
}

/// 0.001, 0.002, ..., 0.01, 0.02, ..., 1.
[[nodiscard]] inline std::vector<double> default_delta_grid() {
    std::vector<double> grid;
    for (int i = 1; i < 10; ++i) {
        grid.push_back(i / 1000.0);
    }
    for (int i = 1; i <= 100; ++i) {
        grid.push_back(i / 100.0);
    }
    return grid;
}

[[nodiscard]] inline std::string roc_csv(const RocCurve &curve) {
    std::string out = "c,alpha,beta,variant\n";
    for (const auto &pt : curve.points) {
        out += fmt::format("{},{:.10f},{:.10f},{}\n", pt.threshold, pt.alpha, pt.beta, to_string(curve.variant));
    }
    return out;
}

// ---------------------------------------------------------------------------
// report writers

namespace detail {

inline nlohmann::ordered_json interval_json(const ProportionInterval &ci) { return { { "lower", ci.lower }, { "upper", ci.upper } }; }

inline void write_file(const std::filesystem::path &path, const std::string &text) {
    std::ofstream out{ path, std::ios::binary };
    if (!out) {
        throw configuration_error{ "cannot write '" + path.string() + "'" };
    }
    out << text;
}

}  // namespace detail

[[nodiscard]] inline nlohmann::ordered_json to_json(const ExperimentReport &report) {
    using json = nlohmann::ordered_json;
    const auto &c = report.config;
    json seeds = json::array();
    for (const auto s : c.seeds) {
        seeds.push_back(s);
    }
    json j;
    j["config"] = { { "data", c.data_path },
                    { "format", c.format == DataFormat::spambase_csv ? "spambase-csv" : "generic-csv" },
                    { "split", { c.split.proper_training, c.split.calibration, c.split.test } },
                    { "seeds", seeds },
                    { "epsilon", c.epsilon },
                    { "taxonomy", report.taxonomy },
                    { "report_split", report.report_split },
                    { "scorer", c.scorer.describe() },
                    { "fit", { { "learning_rate", c.fit.learning_rate }, { "iterations", c.fit.iterations }, { "l2", c.fit.l2 } } } };
    j["rng"] = { { "name", philox4x32::name }, { "version", counter_rng::version } };
    j["dataset"] = { { "examples", report.dataset_size }, { "features", report.feature_count }, { "labels", report.alphabet.names() },
                     { "positive", report.alphabet.name(report.positive) } };
    json per_seed = json::array();
    for (const auto &s : report.seeds) {
        json rows = json::array();
        for (std::size_t r = 0; r < s.rows.size(); ++r) {
            const auto &row = s.rows[r];
            const auto &iv = s.intervals[r];
            rows.push_back({ { "group", row.group },
                             { "count", row.count },
                             { "errors", row.errors },
                             { "multiple", row.multiple },
                             { "empty", row.empty },
                             { "error_percent", row.error_percent() },
                             { "multiple_percent", row.multiple_percent() },
                             { "empty_percent", row.empty_percent() },
                             { "error_ci95", detail::interval_json(iv.ci95) },
                             { "error_ci80", detail::interval_json(iv.ci80) } });
        }
        json entry = { { "seed", s.seed }, { "calibration_label_counts", s.calibration_label_counts }, { "rows", rows } };
        if (s.roc.performed) {
            entry["roc_distance_check"] = { { "checked", s.roc.checked }, { "violations", s.roc.violations }, { "max_distance", s.roc.max_distance },
                                            { "bound", s.roc.bound }, { "n0", s.roc.n0 }, { "n1", s.roc.n1 } };
        }
        per_seed.push_back(std::move(entry));
    }
    j["seeds"] = std::move(per_seed);
    json averages = json::array();
    for (const auto &a : report.averages) {
        averages.push_back({ { "group", a.group }, { "error_percent", a.error_percent }, { "multiple_percent", a.multiple_percent }, { "empty_percent", a.empty_percent } });
    }
    j["averages"] = std::move(averages);
    return j;
}

/// One line per (group, statistic) with a column per seed and the average, percentages to 4 dp.
[[nodiscard]] inline std::string table_csv(const ExperimentReport &report) {
    std::string out = "group,statistic";
    for (const auto &s : report.seeds) {
        out += fmt::format(",seed_{}", s.seed);
    }
    out += ",average\n";
    const auto line = [&](std::size_t r, const char *stat, double (OutcomeCounts::*pct)() const noexcept, double average) {
        out += fmt::format("{},{}", report.averages[r].group, stat);
        for (const auto &s : report.seeds) {
            out += fmt::format(",{:.4f}", (s.rows[r].*pct)());
        }
        out += fmt::format(",{:.4f}\n", average);
    };
    for (std::size_t r = 0; r < report.averages.size(); ++r) {
        line(r, "errors", &OutcomeCounts::error_percent, report.averages[r].error_percent);
    }
    for (std::size_t r = 0; r < report.averages.size(); ++r) {
        line(r, "multiple", &OutcomeCounts::multiple_percent, report.averages[r].multiple_percent);
    }
    for (std::size_t r = 0; r < report.averages.size(); ++r) {
        line(r, "empty", &OutcomeCounts::empty_percent, report.averages[r].empty_percent);
    }
    return out;
}

[[nodiscard]] inline std::string calibration_csv(const ExperimentReport &report) {
    std::string out = "seed,epsilon,overall";
    for (const auto &name : report.alphabet.names()) {
        out += ",label_" + name;
    }
    out += "\n";
    for (const auto &s : report.seeds) {
        for (const auto &pt : s.calibration_curve) {
            out += fmt::format("{},{:.2f},{:.6f}", s.seed, pt.epsilon, pt.overall);
            for (const double v : pt.per_label) {
                out += fmt::format(",{:.6f}", v);
            }
            out += "\n";
        }
    }
    return out;
}

[[nodiscard]] inline std::string pvalues_csv(const ExperimentReport &report) {
    std::string out = "seed,id,label";
    for (const auto &name : report.alphabet.names()) {
        out += ",p_" + name;
    }
    out += ",set_size,error\n";
    for (const auto &s : report.seeds) {
        for (const auto &row : s.p_values) {
            out += fmt::format("{},{},{}", s.seed, row.id, report.alphabet.name(row.label));
            for (const auto &p : row.p_values) {
                out += fmt::format(",{:.10f}", p.value());
            }
            out += fmt::format(",{},{}\n", row.set_size, row.error ? 1 : 0);
        }
    }
    return out;
}

[[nodiscard]] inline std::string intervals_csv(const ExperimentReport &report) {
    std::string out = "seed,group,errors,count,ci95_lower,ci95_upper,ci80_lower,ci80_upper\n";
    for (const auto &s : report.seeds) {
        for (const auto &iv : s.intervals) {
            out += fmt::format("{},{},{},{},{:.6f},{:.6f},{:.6f},{:.6f}\n", s.seed, iv.group, iv.errors, iv.count, iv.ci95.lower, iv.ci95.upper, iv.ci80.lower,
                               iv.ci80.upper);
        }
    }
    return out;
}

/// Human-readable table: statistic blocks, seed columns, average.
[[nodiscard]] inline std::string format_table(const ExperimentReport &report) {
    std::size_t width = 14;
    for (const auto &a : report.averages) {
        width = std::max(width, a.group.size() + 2);
    }
    std::string out = fmt::format("epsilon = {}, taxonomy = {}, scorer = {}\n", detail::format_number(report.config.epsilon), report.taxonomy,
                                  report.config.scorer.describe());
    out += fmt::format("{:<{}}", "", width);
    for (const auto &s : report.seeds) {
        out += fmt::format("{:>8}", fmt::format("s{}", s.seed));
    }
    out += fmt::format("{:>9}\n", "average");
    const auto block = [&](const char *title, double (OutcomeCounts::*pct)() const noexcept, double AverageRow::*avg) {
        out += fmt::format("{}\n", title);
        for (std::size_t r = 0; r < report.averages.size(); ++r) {
            out += fmt::format("{:<{}}", "  " + report.averages[r].group, width);
            for (const auto &s : report.seeds) {
                out += fmt::format("{:>7.2f}%", (s.rows[r].*pct)());
            }
            out += fmt::format("{:>8.2f}%\n", report.averages[r].*avg);
        }
    };
    block("errors", &OutcomeCounts::error_percent, &AverageRow::error_percent);
    block("multiple", &OutcomeCounts::multiple_percent, &AverageRow::multiple_percent);
    block("empty", &OutcomeCounts::empty_percent, &AverageRow::empty_percent);
    for (const auto &s : report.seeds) {
        if (s.roc.performed) {
            out += fmt::format("seed {}: ROC distance check {} objects, max {:.6f} <= bound {:.6f}\n", s.seed, s.roc.checked, s.roc.max_distance, s.roc.bound);
        }
    }
    return out;
}

/// Writes table.csv, calibration.csv, pvalues.csv, intervals.csv and report.json into `dir`.
inline void write_report_files(const ExperimentReport &report, const std::filesystem::path &dir) {
    std::filesystem::create_directories(dir);
    detail::write_file(dir / "table.csv", table_csv(report));
    detail::write_file(dir / "calibration.csv", calibration_csv(report));
    detail::write_file(dir / "pvalues.csv", pvalues_csv(report));
    detail::write_file(dir / "intervals.csv", intervals_csv(report));
    detail::write_file(dir / "report.json", to_json(report).dump(2) + "\n");
}

[[nodiscard]] inline nlohmann::ordered_json to_json(const sim::CoverageReport &r) {
    using json = nlohmann::ordered_json;
    json categories = json::object();
    for (const auto &[name, c] : r.per_category) {
        categories[name] = { { "trials", c.trials }, { "errors", c.errors }, { "rate", c.rate() } };
    }
    json j = { { "mode", r.mode },
               { "generator", r.generator },
               { "trials", r.trials },
               { "calibration_size", r.calibration_size },
               { "epsilon", r.epsilon },
               { "seed", r.seed },
               { "rng", { { "name", r.rng }, { "version", counter_rng::version } } },
               { "test_batch", r.test_batch },
               { "errors", r.errors },
               { "empirical_error_rate", r.empirical_error_rate },
               { "error_ci95", detail::interval_json(r.error_interval) },
               { "per_category", categories } };
    if (!r.unconditional_per_category.empty()) {
        json u = json::object();
        for (const auto &[name, c] : r.unconditional_per_category) {
            u[name] = { { "trials", c.trials }, { "errors", c.errors }, { "rate", c.rate() } };
        }
        j["unconditional_per_category"] = std::move(u);
    }
    if (r.ks_statistic_vs_beta) {
        j["ks_statistic_vs_beta"] = *r.ks_statistic_vs_beta;
        j["ks_critical_1pct"] = *r.ks_critical_value;
    }
    if (r.delta) {
        j["delta"] = *r.delta;
        j["exact_E"] = *r.exact_E;
        j["fraction_below_exact"] = *r.fraction_below_exact;
    }
    if (r.formulation_disagreements) {
        j["formulation_disagreements"] = *r.formulation_disagreements;
    }
    return j;
}

[[nodiscard]] inline std::string coverage_csv(const sim::CoverageReport &r) {
    std::string out = "trial,coverage\n";
    for (std::size_t t = 0; t < r.coverage.size(); ++t) {
        out += fmt::format("{},{:.10f}\n", t, r.coverage[t]);
    }
    return out;
}

}  // namespace conformal

#endif  // CONFORMAL_EXPERIMENT_HPP_
