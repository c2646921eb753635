#include "conformal/experiment.hpp"

#include <fmt/format.h>
#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace conformal;
namespace fs = std::filesystem;

namespace {

Dataset skewed_dataset(std::size_t n, std::uint64_t seed) {
    const auto spec = sim::SyntheticSpec::label_skewed(seed);
    counter_rng rng{ seed, 99 };
    sim::Generator gen{ spec, rng };
    Dataset d;
    d.alphabet = sim::binary_alphabet();
    d.feature_count = spec.dimension;
    d.examples = gen.draw(n);
    for (std::size_t i = 0; i < n; ++i) {
        d.examples[i].id = i;
    }
    return d;
}

ExperimentConfig small_config() {
    ExperimentConfig c;
    c.format = DataFormat::generic_csv;
    c.split = { 300, 499, 1000 };
    c.seeds = { 0, 1, 2, 3 };
    c.taxonomy = "label";
    c.report_split = "feature:0:0";
    return c;
}

std::string read_file(const fs::path &p) {
    std::ifstream in{ p, std::ios::binary };
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string &name) {
    const fs::path dir = fs::path{ ::testing::TempDir() } / ("conformal_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_csv(const Dataset &d, const fs::path &path) {
    std::ofstream out{ path };
    out << "x1,x2,label\n";
    for (const auto &z : d.examples) {
        out << fmt::format("{},{},{}\n", z.object[0], z.object[1], d.alphabet.name(*z.label));
    }
}

int run_cli(const std::string &args) {
    const std::string cmd = std::string{ CONFORMAL_CLI } + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Experiment, EpsilonZeroFullSets) {
    auto c = small_config();
    c.epsilon = 0.0;
    const auto r = run_experiment(c, skewed_dataset(1799, 1));
    for (const auto &s : r.seeds) {
        for (const auto &row : s.rows) {
            if (row.count == 0) {
                continue;
            }
            EXPECT_EQ(row.error_percent(), 0.0) << row.group;
            EXPECT_EQ(row.multiple_percent(), 100.0) << row.group;
            EXPECT_EQ(row.empty_percent(), 0.0) << row.group;
        }
    }
}

TEST(Experiment, EpsilonOneEmptySets) {
    auto c = small_config();
    c.epsilon = 1.0;
    const auto r = run_experiment(c, skewed_dataset(1799, 2));
    for (const auto &s : r.seeds) {
        for (const auto &row : s.rows) {
            if (row.count == 0) {
                continue;
            }
            EXPECT_EQ(row.error_percent(), 100.0) << row.group;
            EXPECT_EQ(row.empty_percent(), 100.0) << row.group;
        }
    }
}

TEST(Experiment, LabelConditionalPerLabelRatesNearEpsilon) {
    auto c = small_config();
    c.seeds = { 0, 1, 2, 3, 4, 5, 6, 7 };
    const auto r = run_experiment(c, skewed_dataset(1799, 3));
    // pool test outcomes over seeds per label
    for (std::size_t label = 0; label < 2; ++label) {
        std::size_t errors = 0;
        std::size_t count = 0;
        for (const auto &s : r.seeds) {
            errors += s.rows[1 + label].errors;
            count += s.rows[1 + label].count;
        }
        const double rate = static_cast<double>(errors) / static_cast<double>(count);
        // seeds share the dataset, so outcomes are not independent across seeds; use the
        // per-seed test size for the standard error
        const double se = std::sqrt(0.05 * 0.95 / (static_cast<double>(count) / 8.0));
        EXPECT_NEAR(rate, 0.05, 3.0 * se) << "label " << label;
    }
}

TEST(Experiment, AveragesAreSeedMeans) {
    const auto r = run_experiment(small_config(), skewed_dataset(1799, 4));
    std::istringstream table{ table_csv(r) };
    std::string line;
    std::getline(table, line);
    EXPECT_EQ(line, "group,statistic,seed_0,seed_1,seed_2,seed_3,average");
    int rows = 0;
    while (std::getline(table, line)) {
        std::vector<double> cells;
        std::stringstream ss{ line };
        std::string cell;
        int col = 0;
        while (std::getline(ss, cell, ',')) {
            if (col++ >= 2) {
                cells.push_back(std::stod(cell));
            }
        }
        ASSERT_EQ(cells.size(), 5U);
        const double mean = (cells[0] + cells[1] + cells[2] + cells[3]) / 4.0;
        EXPECT_NEAR(cells[4], mean, 1e-4) << line;
        for (const double v : cells) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 100.0);
        }
        ++rows;
    }
    // 5 groups (overall, 2 labels, 2 feature sides) x 3 statistics
    EXPECT_EQ(rows, 15);
}

TEST(Experiment, RocDistanceChecked) {
    const auto r = run_experiment(small_config(), skewed_dataset(1799, 5));
    for (const auto &s : r.seeds) {
        EXPECT_TRUE(s.roc.performed);
        EXPECT_EQ(s.roc.checked, 1000U);
        EXPECT_EQ(s.roc.violations, 0U);
        EXPECT_LE(s.roc.max_distance, s.roc.bound);
    }
}

TEST(Experiment, CalibrationCurveShape) {
    const auto r = run_experiment(small_config(), skewed_dataset(1799, 6));
    for (const auto &s : r.seeds) {
        ASSERT_EQ(s.calibration_curve.size(), calibration_grid_steps + 1);
        EXPECT_EQ(s.calibration_curve.front().overall, 0.0);
        EXPECT_EQ(s.calibration_curve.back().overall, 1.0);
        for (std::size_t g = 1; g < s.calibration_curve.size(); ++g) {
            EXPECT_GE(s.calibration_curve[g].overall, s.calibration_curve[g - 1].overall);
        }
        // near the diagonal, with room for 1000-point sampling noise
        for (const auto &pt : s.calibration_curve) {
            EXPECT_NEAR(pt.overall, pt.epsilon, 0.06);
        }
        for (const auto &p : s.p_values) {
            for (const auto &pv : p.p_values) {
                EXPECT_GT(pv.value(), 0.0);
                EXPECT_LE(pv.value(), 1.0);
            }
        }
    }
}

TEST(Experiment, IntervalsContainRates) {
    const auto r = run_experiment(small_config(), skewed_dataset(1799, 7));
    for (const auto &s : r.seeds) {
        for (const auto &iv : s.intervals) {
            if (iv.count == 0) {
                continue;
            }
            const double rate = static_cast<double>(iv.errors) / static_cast<double>(iv.count);
            EXPECT_LE(iv.ci95.lower, iv.ci80.lower + 1e-15);
            EXPECT_LE(iv.ci80.lower, rate);
            EXPECT_GE(iv.ci80.upper, rate);
            EXPECT_GE(iv.ci95.upper, iv.ci80.upper - 1e-15);
        }
    }
}

TEST(Experiment, DeterministicFiles) {
    const auto data = skewed_dataset(1799, 8);
    const auto a = scratch("det_a");
    const auto b = scratch("det_b");
    auto ca = small_config();
    ca.threads = 1;
    auto cb = small_config();
    cb.threads = 3;
    write_report_files(run_experiment(ca, data), a);
    write_report_files(run_experiment(cb, data), b);
    for (const char *name : { "table.csv", "calibration.csv", "pvalues.csv", "intervals.csv", "report.json" }) {
        const auto x = read_file(a / name);
        EXPECT_FALSE(x.empty()) << name;
        EXPECT_EQ(x, read_file(b / name)) << name;
    }
}

TEST(Experiment, ScoreFileScorer) {
    const auto data = skewed_dataset(1799, 9);
    const auto dir = scratch("scores");
    const auto spec = sim::SyntheticSpec::label_skewed();
    {
        std::ofstream out{ dir / "scores.csv" };
        out << "id,score\n";
        for (const auto &z : data.examples) {
            out << fmt::format("{},{}\n", z.id, sim::true_log_odds(spec, z.object));
        }
    }
    auto c = small_config();
    c.scorer = ScorerChoice::parse("file:" + (dir / "scores.csv").string());
    const auto r = run_experiment(c, data);
    EXPECT_EQ(r.seeds.size(), 4U);
    EXPECT_EQ(r.seeds[0].roc.violations, 0U);

    // a score file missing rows is an ingestion error
    std::ofstream short_file{ dir / "short.csv" };
    short_file << "0,1.0\n";
    short_file.close();
    c.scorer = ScorerChoice::parse("file:" + (dir / "short.csv").string());
    EXPECT_THROW((void)run_experiment(c, data), ingestion_error);
}

TEST(Experiment, ConfigErrors) {
    const auto data = skewed_dataset(500, 10);
    auto c = small_config();
    EXPECT_THROW((void)run_experiment(c, data), configuration_error);  // split too large
    c.split = { 100, 100, 100 };
    c.epsilon = 1.5;
    EXPECT_THROW((void)run_experiment(c, data), configuration_error);
    c.epsilon = 0.05;
    c.taxonomy = "feature:7:0";
    EXPECT_THROW((void)run_experiment(c, data), dimension_error);
    c.taxonomy = "label";
    c.positive = "spam";
    EXPECT_THROW((void)run_experiment(c, data), configuration_error);
}

TEST(Experiment, FeatureTaxonomyRuns) {
    auto c = small_config();
    c.taxonomy = "feature:0:0";
    const auto r = run_experiment(c, skewed_dataset(1799, 11));
    EXPECT_EQ(r.taxonomy, "feature:0:0");
    EXPECT_FALSE(r.seeds[0].roc.performed);
}

TEST(Bounds, DeltaOneRow) {
    const std::vector<double> grid{ 1.0 };
    const auto csv = emit_bound_curves(0.05, 999, grid);
    EXPECT_EQ(csv, "delta,E_hoeffding,E_exact,E_alternative\n1,0.0500000000,0.0000000000,0.0500000000\n");
}

TEST(Bounds, ExactBelowHoeffdingAndMonotone) {
    const auto grid = default_delta_grid();
    const auto csv = emit_bound_curves(0.05, 999, grid);
    std::istringstream in{ csv };
    std::string line;
    std::getline(in, line);
    double prev_h = 2.0;
    double prev_e = 2.0;
    bool first = true;
    while (std::getline(in, line)) {
        double d = 0;
        double h = 0;
        double e = 0;
        double a = 0;
        ASSERT_EQ(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &d, &h, &e, &a), 4);
        if (d < 1.0) {
            EXPECT_LT(e, h) << line;
        }
        if (!first) {
            // grid ascends in delta, so E descends
            EXPECT_LE(h, prev_h);
            EXPECT_LE(e, prev_e);
        }
        prev_h = h;
        prev_e = e;
        first = false;
    }
    EXPECT_THROW((void)emit_bound_curves(0.05, 999, std::vector<double>{}), configuration_error);
}

TEST(Parsing, SeedsAndScorer) {
    EXPECT_EQ(parse_seed_list("0..7").size(), 8U);
    EXPECT_EQ(parse_seed_list("3,5,9"), (std::vector<std::uint64_t>{ 3, 5, 9 }));
    EXPECT_THROW((void)parse_seed_list("7..0"), configuration_error);
    EXPECT_THROW((void)parse_seed_list("a"), configuration_error);
    EXPECT_TRUE(ScorerChoice::parse("builtin").builtin());
    EXPECT_EQ(*ScorerChoice::parse("file:/x.csv").file, "/x.csv");
    EXPECT_THROW((void)ScorerChoice::parse("mart"), configuration_error);
}

TEST(Cli, RunTwiceByteIdentical) {
    const auto dir = scratch("cli");
    write_csv(skewed_dataset(1799, 12), dir / "data.csv");
    const std::string common = "run --data " + (dir / "data.csv").string() + " --format generic-csv --split 300,499,1000 --seeds 0..2 --report-split feature:0:0";
    ASSERT_EQ(run_cli(common + " --out " + (dir / "a").string()), 0);
    ASSERT_EQ(run_cli(common + " --threads 2 --out " + (dir / "b").string()), 0);
    for (const char *name : { "table.csv", "calibration.csv", "pvalues.csv", "intervals.csv", "report.json" }) {
        EXPECT_EQ(read_file(dir / "a" / name), read_file(dir / "b" / name)) << name;
    }
}

TEST(Cli, ExitCodes) {
    const auto dir = scratch("cli_codes");
    write_csv(skewed_dataset(1799, 13), dir / "data.csv");
    {
        std::ofstream bad{ dir / "bad.csv" };
        bad << "1,2,0\n1,x,1\n";
    }
    const std::string data = " --data " + (dir / "data.csv").string() + " --format generic-csv";
    EXPECT_EQ(run_cli("ingest-check" + data), 0);
    EXPECT_EQ(run_cli("run" + data + " --epsilon 2"), 1);
    EXPECT_EQ(run_cli("run" + data + " --taxonomy bogus"), 1);
    EXPECT_EQ(run_cli("run" + data + " --split 5000,1,1"), 1);
    EXPECT_EQ(run_cli("ingest-check --data " + (dir / "bad.csv").string() + " --format generic-csv"), 2);
    EXPECT_EQ(run_cli("ingest-check --data " + (dir / "missing.csv").string()), 2);
    EXPECT_EQ(run_cli("bounds --deltas 0"), 1);
    EXPECT_EQ(run_cli("bounds --out " + (dir / "bounds.csv").string()), 0);
    EXPECT_EQ(run_cli("simulate --trials 200 -n 19 --out " + (dir / "sim").string()), 0);
    EXPECT_TRUE(fs::exists(dir / "sim" / "simulation.json"));
    EXPECT_EQ(run_cli("no-such-command"), 1);
}
