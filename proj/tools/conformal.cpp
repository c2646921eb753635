// conformal: command-line front end for the conformal library.

#include "conformal/conformal.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace conformal;

struct RunOptions {
    std::string data;
    std::string format{ "spambase-csv" };
    std::string split{ "2602,999,1000" };
    std::string seeds{ "0..7" };
    double epsilon{ 0.05 };
    std::string taxonomy{ "label" };
    std::string scorer{ "builtin" };
    std::string out;
    std::string positive;
    std::string report_split;
    std::size_t iterations{ FitOptions{}.iterations };
    double learning_rate{ FitOptions{}.learning_rate };
    double l2{ FitOptions{}.l2 };
    std::size_t threads{ 0 };
};

struct SimulateOptions {
    std::string mode{ "unconditional" };
    std::string generator{ "two-gaussian" };
    std::string scorer{ "fitted" };
    std::size_t n{ 199 };
    double epsilon{ 0.1 };
    std::size_t trials{ 10000 };
    std::uint64_t seed{ 0 };
    std::size_t test_batch{ 10000 };
    std::size_t proper{ 100 };
    std::optional<double> delta;
    std::string out;
    std::size_t threads{ 0 };
};

struct BoundsOptions {
    double epsilon{ 0.05 };
    std::size_t n{ 999 };
    std::string deltas;
    std::string out;
};

struct RocOptions {
    std::string scores;
    std::string data;
    std::string format{ "spambase-csv" };
    std::string positive;
    std::string variant{ "empirical" };
    double zero_over_zero{ default_zero_over_zero };
    std::string out;
};

void emit(const std::string &text, const std::string &path) {
    if (path.empty() || path == "-") {
        std::fwrite(text.data(), 1, text.size(), stdout);
        return;
    }
    std::ofstream f{ path, std::ios::binary };
    if (!f) {
        throw configuration_error{ "cannot write '" + path + "'" };
    }
    f << text;
}

int ingest_check(const RunOptions &o) {
    const auto data = ingest(o.data, parse_data_format(o.format));
    fmt::print("{}: {} examples, {} features\n", o.data, data.size(), data.feature_count);
    const auto counts = data.label_counts();
    for (const auto y : data.alphabet.labels()) {
        fmt::print("  label {}: {}\n", data.alphabet.name(y), counts[y.index]);
    }
    return 0;
}

int run(const RunOptions &o) {
    ExperimentConfig config;
    config.data_path = o.data;
    config.format = parse_data_format(o.format);
    config.split = parse_split_sizes(o.split);
    config.seeds = parse_seed_list(o.seeds);
    config.epsilon = o.epsilon;
    config.taxonomy = o.taxonomy;
    config.scorer = ScorerChoice::parse(o.scorer);
    config.out_dir = o.out;
    config.positive = o.positive;
    config.report_split = o.report_split;
    config.fit = { o.learning_rate, o.iterations, o.l2 };
    config.threads = o.threads;
    const auto report = run_experiment(config);
    fmt::print("{}", format_table(report));
    if (!o.out.empty()) {
        write_report_files(report, o.out);
    }
    return 0;
}

int simulate(const SimulateOptions &o) {
    const auto kind = sim::parse_generator(o.generator);
    sim::SyntheticSpec spec = kind == sim::GeneratorKind::label_skewed_binary ? sim::SyntheticSpec::label_skewed(o.seed)
                              : kind == sim::GeneratorKind::uniform_real      ? sim::SyntheticSpec::uniform_real(o.seed)
                                                                              : sim::SyntheticSpec::two_gaussian(o.seed);
    spec.scorer = sim::parse_scorer_kind(o.scorer);
    spec.test_batch = o.test_batch;
    spec.proper_training = o.proper;
    sim::CoverageReport report;
    if (o.mode == "unconditional") {
        report = sim::run_unconditional_validity_trial(spec, o.n, o.epsilon, o.trials, o.threads);
    } else if (o.mode == "training-conditional") {
        const double blocks = o.epsilon * static_cast<double>(o.n + 1);
        const bool integral = std::abs(blocks - std::nearbyint(blocks)) <= 1e-9;
        report = sim::run_training_conditional_trial(spec, o.n, o.epsilon, o.trials, integral, o.delta, o.threads);
    } else if (o.mode == "label-conditional") {
        report = sim::run_label_conditional_trial(spec, o.n, o.epsilon, o.trials, o.threads);
    } else if (o.mode == "one-sided") {
        report = sim::run_one_sided_trial(spec, o.n, o.epsilon, o.trials, o.threads);
    } else {
        throw configuration_error{ "unknown simulation mode '" + o.mode + "'" };
    }
    fmt::print("{} / {}: n = {}, epsilon = {}, trials = {}\n", report.mode, report.generator, report.calibration_size, o.epsilon, report.trials);
    fmt::print("  error rate {:.5f}  (95% CI {:.5f} .. {:.5f}; eps + 3 SE = {:.5f})\n", report.empirical_error_rate, report.error_interval.lower,
               report.error_interval.upper, report.epsilon + 3.0 * report.standard_error());
    for (const auto &[name, c] : report.per_category) {
        fmt::print("  label {}: {:.5f} over {} trials", name, c.rate(), c.trials);
        if (const auto u = report.unconditional_per_category.find(name); u != report.unconditional_per_category.end()) {
            fmt::print("  (unconditional ICP {:.5f})", u->second.rate());
        }
        fmt::print("\n");
    }
    if (report.ks_statistic_vs_beta) {
        fmt::print("  KS vs Beta: {:.5f} (1% critical {:.5f})\n", *report.ks_statistic_vs_beta, *report.ks_critical_value);
    }
    if (report.fraction_below_exact) {
        fmt::print("  fraction with coverage < 1 - E_exact({}) = {:.5f}: {:.5f}\n", *report.delta, *report.exact_E, *report.fraction_below_exact);
    }
    if (report.formulation_disagreements) {
        fmt::print("  order-statistic vs p-value disagreements: {}\n", *report.formulation_disagreements);
    }
    if (!o.out.empty()) {
        std::filesystem::create_directories(o.out);
        emit(to_json(report).dump(2) + "\n", (std::filesystem::path{ o.out } / "simulation.json").string());
        emit(coverage_csv(report), (std::filesystem::path{ o.out } / "coverage.csv").string());
    }
    return 0;
}

int bounds(const BoundsOptions &o) {
    std::vector<double> grid;
    if (o.deltas.empty()) {
        grid = default_delta_grid();
    } else {
        for (const auto cell : detail::split_csv_line(o.deltas)) {
            grid.push_back(detail::parse_double(cell, "delta"));
        }
    }
    emit(emit_bound_curves(o.epsilon, o.n, grid), o.out);
    return 0;
}

int roc(const RocOptions &o) {
    const auto data = ingest(o.data, parse_data_format(o.format));
    const Label positive = detail::resolve_positive(data.alphabet, o.positive);
    const auto table = load_scores(o.scores);
    table.require_covers(data.size(), o.scores);
    std::vector<double> s0;
    std::vector<double> s1;
    for (const auto &z : data.examples) {
        (*z.label == positive ? s1 : s0).push_back(table(z));
    }
    emit(roc_csv(build_roc(s0, s1, parse_roc_variant(o.variant), o.zero_over_zero)), o.out);
    return 0;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{ "Inductive conformal predictors: experiments, simulations and validity bounds" };
    app.require_subcommand(1);

    RunOptions run_opts;
    const auto add_common = [](CLI::App *cmd, RunOptions &o) {
        cmd->add_option("--data", o.data, "dataset path")->required();
        cmd->add_option("--format", o.format, "spambase-csv | generic-csv")->capture_default_str();
    };
    auto *check_cmd = app.add_subcommand("ingest-check", "parse a dataset and print its shape");
    add_common(check_cmd, run_opts);

    auto *run_cmd = app.add_subcommand("run", "run the split/calibrate/predict experiment over a seed list");
    add_common(run_cmd, run_opts);
    run_cmd->add_option("--split", run_opts.split, "proper,calibration,test sizes")->capture_default_str();
    run_cmd->add_option("--seeds", run_opts.seeds, "a..b or comma list")->capture_default_str();
    run_cmd->add_option("--epsilon", run_opts.epsilon, "significance level")->capture_default_str();
    run_cmd->add_option("--taxonomy", run_opts.taxonomy, "none | label | feature:<i>:<t>")->capture_default_str();
    run_cmd->add_option("--scorer", run_opts.scorer, "builtin | file:<path>")->capture_default_str();
    run_cmd->add_option("--out", run_opts.out, "output directory for report files");
    run_cmd->add_option("--positive", run_opts.positive, "label name scored positively by f");
    run_cmd->add_option("--report-split", run_opts.report_split, "none | feature:<i>:<t> rows in the tables");
    run_cmd->add_option("--iterations", run_opts.iterations, "gradient descent iterations")->capture_default_str();
    run_cmd->add_option("--learning-rate", run_opts.learning_rate, "gradient descent step")->capture_default_str();
    run_cmd->add_option("--l2", run_opts.l2, "L2 penalty")->capture_default_str();
    run_cmd->add_option("--threads", run_opts.threads, "worker threads, 0 = all cores")->capture_default_str();

    SimulateOptions sim_opts;
    auto *sim_cmd = app.add_subcommand("simulate", "Monte Carlo validity check on synthetic data");
    sim_cmd->add_option("--mode", sim_opts.mode, "unconditional | training-conditional | label-conditional | one-sided")->capture_default_str();
    sim_cmd->add_option("--generator", sim_opts.generator, "two-gaussian | uniform-real | label-skewed")->capture_default_str();
    sim_cmd->add_option("--scorer", sim_opts.scorer, "fitted | oracle | constant")->capture_default_str();
    sim_cmd->add_option("-n,--calibration", sim_opts.n, "calibration set size")->capture_default_str();
    sim_cmd->add_option("--epsilon", sim_opts.epsilon, "significance level")->capture_default_str();
    sim_cmd->add_option("--trials", sim_opts.trials, "number of trials")->capture_default_str();
    sim_cmd->add_option("--seed", sim_opts.seed, "64-bit seed")->capture_default_str();
    sim_cmd->add_option("--test-batch", sim_opts.test_batch, "fresh examples per coverage estimate")->capture_default_str();
    sim_cmd->add_option("--proper", sim_opts.proper, "proper training set size")->capture_default_str();
    sim_cmd->add_option("--delta", sim_opts.delta, "also report the fraction of trials below 1 - E_exact(delta)");
    sim_cmd->add_option("--out", sim_opts.out, "output directory");
    sim_cmd->add_option("--threads", sim_opts.threads, "worker threads, 0 = all cores")->capture_default_str();

    BoundsOptions bounds_opts;
    auto *bounds_cmd = app.add_subcommand("bounds", "CSV of E against delta for the Hoeffding, exact and alternative bounds");
    bounds_cmd->add_option("--epsilon", bounds_opts.epsilon, "significance level")->capture_default_str();
    bounds_cmd->add_option("-n,--calibration", bounds_opts.n, "calibration set size")->capture_default_str();
    bounds_cmd->add_option("--deltas", bounds_opts.deltas, "comma list of delta values (default grid 0.001..1)");
    bounds_cmd->add_option("--out", bounds_opts.out, "output file (default stdout)");

    RocOptions roc_opts;
    auto *roc_cmd = app.add_subcommand("roc", "ROC point set of a score file against dataset labels");
    roc_cmd->add_option("--scores", roc_opts.scores, "score file id,score")->required();
    roc_cmd->add_option("--data", roc_opts.data, "dataset supplying the labels")->required();
    roc_cmd->add_option("--format", roc_opts.format, "spambase-csv | generic-csv")->capture_default_str();
    roc_cmd->add_option("--positive", roc_opts.positive, "label name scored positively");
    roc_cmd->add_option("--variant", roc_opts.variant, "empirical | minimax | laplace")->capture_default_str();
    roc_cmd->add_option("--zero-over-zero", roc_opts.zero_over_zero, "empirical rate for an empty class")->capture_default_str();
    roc_cmd->add_option("--out", roc_opts.out, "output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*check_cmd) {
            return ingest_check(run_opts);
        }
        if (*run_cmd) {
            return run(run_opts);
        }
        if (*sim_cmd) {
            return simulate(sim_opts);
        }
        if (*bounds_cmd) {
            return bounds(bounds_opts);
        }
        if (*roc_cmd) {
            return roc(roc_opts);
        }
    } catch (const ingestion_error &e) {
        fmt::print(stderr, "ingestion error: {}\n", e.what());
        return 2;
    } catch (const invariant_violation &e) {
        fmt::print(stderr, "invariant violation: {}\n", e.what());
        return 3;
    } catch (const configuration_error &e) {
        fmt::print(stderr, "configuration error: {}\n", e.what());
        return 1;
    } catch (const conformal::domain_error &e) {
        fmt::print(stderr, "configuration error: {}\n", e.what());
        return 1;
    }
    return 1;
}
