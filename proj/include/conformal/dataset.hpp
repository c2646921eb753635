#ifndef CONFORMAL_DATASET_HPP_
#define CONFORMAL_DATASET_HPP_
#pragma once

#include "conformal/core.hpp"
#include "conformal/error.hpp"
#include "conformal/rng.hpp"
#include "conformal/scorer.hpp"  // detail::trim, detail::to_double

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace conformal {

enum class DataFormat {
    spambase_csv,  ///< 57 numeric features then a 0/1 label, no header
    generic_csv,   ///< numeric features then a label token; optional header row
};

[[nodiscard]] inline DataFormat parse_data_format(std::string_view text) {
    if (text == "spambase-csv" || text == "spambase") {
        return DataFormat::spambase_csv;
    }
    if (text == "generic-csv" || text == "csv") {
        return DataFormat::generic_csv;
    }
    throw configuration_error{ "unknown data format '" + std::string{ text } + "' (expected spambase-csv or generic-csv)" };
}

/// Column names of the Spambase file, in file order.
inline constexpr std::array<std::string_view, 57> spambase_feature_names{
    "word_freq_make", "word_freq_address", "word_freq_all", "word_freq_3d", "word_freq_our", "word_freq_over",
    "word_freq_remove", "word_freq_internet", "word_freq_order", "word_freq_mail", "word_freq_receive", "word_freq_will",
    "word_freq_people", "word_freq_report", "word_freq_addresses", "word_freq_free", "word_freq_business", "word_freq_email",
    "word_freq_you", "word_freq_credit", "word_freq_your", "word_freq_font", "word_freq_000", "word_freq_money",
    "word_freq_hp", "word_freq_hpl", "word_freq_george", "word_freq_650", "word_freq_lab", "word_freq_labs",
    "word_freq_telnet", "word_freq_857", "word_freq_data", "word_freq_415", "word_freq_85", "word_freq_technology",
    "word_freq_1999", "word_freq_parts", "word_freq_pm", "word_freq_direct", "word_freq_cs", "word_freq_meeting",
    "word_freq_original", "word_freq_project", "word_freq_re", "word_freq_edu", "word_freq_table", "word_freq_conference",
    "char_freq_;", "char_freq_(", "char_freq_[", "char_freq_!", "char_freq_$", "char_freq_#",
    "capital_run_length_average", "capital_run_length_longest", "capital_run_length_total",
};

[[nodiscard]] inline std::optional<std::size_t> spambase_feature_index(std::string_view name) noexcept {
    const auto it = std::find(spambase_feature_names.begin(), spambase_feature_names.end(), name);
    if (it == spambase_feature_names.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - spambase_feature_names.begin());
}

/**
 * Default split feature for Spambase tables: char_freq_$ below 0.0555 (the column holds
 * percentages of '$' characters, so this is the "$ < 5.55%" split of a decision-tree root).
 */
inline constexpr double spambase_dollar_threshold = 0.0555;

/// Labelled examples in file order; example i has id i.
struct Dataset {
    std::vector<Example> examples;
    LabelAlphabet alphabet;
    std::size_t feature_count{ 0 };

    [[nodiscard]] std::size_t size() const noexcept { return examples.size(); }

    [[nodiscard]] std::vector<std::size_t> label_counts() const {
        std::vector<std::size_t> counts(alphabet.size(), 0);
        for (const auto &z : examples) {
            ++counts[z.label->index];
        }
        return counts;
    }
};

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return cells;
}

}  // namespace detail

/// Parses a dataset. Missing or non-numeric feature cells are rejected, never imputed.
[[nodiscard]] inline Dataset parse_dataset(std::istream &in, DataFormat format, const std::string &source = "<data>") {
    struct Row {
        std::vector<double> object;
        std::string label;
    };
    std::vector<Row> rows;
    std::optional<std::size_t> width;
    std::string line;
    std::size_t line_no = 0;
    bool first_content = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) {
            continue;
        }
        const auto cells = detail::split_csv_line(line);
        const bool maybe_header = first_content;
        first_content = false;
        if (format == DataFormat::spambase_csv) {
            if (cells.size() != spambase_feature_names.size() + 1) {
                throw ingestion_error{ source, line_no, "expected 58 columns (57 features + label), found " + std::to_string(cells.size()) };
            }
        } else {
            if (cells.size() < 2) {
                throw ingestion_error{ source, line_no, "expected at least one feature column and a label column" };
            }
            if (maybe_header && !detail::to_double(cells.front())) {
                width = cells.size();
                continue;
            }
            if (width && cells.size() != *width) {
                throw ingestion_error{ source, line_no, "expected " + std::to_string(*width) + " columns, found " + std::to_string(cells.size()) };
            }
        }
        width = cells.size();
        Row row;
        row.object.reserve(cells.size() - 1);
        for (std::size_t j = 0; j + 1 < cells.size(); ++j) {
            const auto v = detail::to_double(cells[j]);
            if (!v) {
                throw ingestion_error{ source, line_no, "column " + std::to_string(j + 1) + ": '" + std::string{ cells[j] } + "' is not a finite number" };
            }
            row.object.push_back(*v);
        }
        row.label = std::string{ cells.back() };
        if (row.label.empty()) {
            throw ingestion_error{ source, line_no, "missing label" };
        }
        if (format == DataFormat::spambase_csv && row.label != "0" && row.label != "1") {
            throw ingestion_error{ source, line_no, "label must be 0 or 1, found '" + row.label + "'" };
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw ingestion_error{ source + ": no data rows" };
    }

    std::vector<std::string> names;
    if (format == DataFormat::spambase_csv) {
        names = { "0", "1" };
    } else {
        std::set<std::string> distinct;
        for (const auto &r : rows) {
            distinct.insert(r.label);
        }
        names.assign(distinct.begin(), distinct.end());
    }
    Dataset data;
    data.alphabet = LabelAlphabet{ names };
    data.feature_count = rows.front().object.size();
    data.examples.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        data.examples.push_back({ i, std::move(rows[i].object), data.alphabet.find(rows[i].label) });
    }
    return data;
}

[[nodiscard]] inline Dataset ingest(const std::string &path, DataFormat format) {
    std::ifstream in{ path };
    if (!in) {
        throw ingestion_error{ "cannot open data file '" + path + "'" };
    }
    return parse_dataset(in, format, path);
}

struct SplitSizes {
    std::size_t proper_training{ 2602 };
    std::size_t calibration{ 999 };
    std::size_t test{ 1000 };

    [[nodiscard]] std::size_t total() const noexcept { return proper_training + calibration + test; }
};

/// Parses "m,n,t".
[[nodiscard]] inline SplitSizes parse_split_sizes(std::string_view text) {
    const auto cells = detail::split_csv_line(text);
    if (cells.size() != 3) {
        throw configuration_error{ "split must be m,n,t, got '" + std::string{ text } + "'" };
    }
    std::array<std::size_t, 3> v{};
    for (std::size_t i = 0; i < 3; ++i) {
        const auto parsed = detail::to_index(cells[i]);
        if (!parsed) {
            throw configuration_error{ "split size '" + std::string{ cells[i] } + "' is not a non-negative integer" };
        }
        v[i] = *parsed;
    }
    return { v[0], v[1], v[2] };
}

/// Fisher-Yates permutation of the row order driven by counter_rng(seed, streams::split).
[[nodiscard]] inline std::vector<std::size_t> permutation(std::size_t size, std::uint64_t seed) {
    std::vector<std::size_t> order(size);
    for (std::size_t i = 0; i < size; ++i) {
        order[i] = i;
    }
    counter_rng rng{ seed, streams::split };
    for (std::size_t i = size; i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform_index(i));
        std::swap(order[i - 1], order[j]);
    }
    return order;
}

/// Permutes the dataset, then slices proper training / calibration / test in that order.
[[nodiscard]] inline SplitDataset split(const Dataset &data, SplitSizes sizes, std::uint64_t seed) {
    if (sizes.proper_training < 1 || sizes.calibration < 1) {
        throw configuration_error{ "split needs at least one proper training and one calibration example" };
    }
    if (sizes.total() > data.size()) {
        throw configuration_error{ "split sizes " + std::to_string(sizes.proper_training) + "+" + std::to_string(sizes.calibration) + "+"
                                   + std::to_string(sizes.test) + " exceed dataset size " + std::to_string(data.size()) };
    }
    const auto order = permutation(data.size(), seed);
    SplitDataset out;
    out.proper_training.reserve(sizes.proper_training);
    out.calibration.reserve(sizes.calibration);
    out.test.reserve(sizes.test);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < sizes.proper_training; ++i) {
        out.proper_training.push_back(data.examples[order[pos++]]);
    }
    for (std::size_t i = 0; i < sizes.calibration; ++i) {
        out.calibration.push_back(data.examples[order[pos++]]);
    }
    for (std::size_t i = 0; i < sizes.test; ++i) {
        out.test.push_back(data.examples[order[pos++]]);
    }
    return out;
}

/// The label literally named "1" or "spam", if present.
[[nodiscard]] inline std::optional<Label> default_positive_label(const LabelAlphabet &alphabet) {
    if (auto l = alphabet.find("1")) {
        return l;
    }
    return alphabet.find("spam");
}

}  // namespace conformal

#endif  // CONFORMAL_DATASET_HPP_
