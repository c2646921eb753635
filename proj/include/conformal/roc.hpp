#ifndef CONFORMAL_ROC_HPP_
#define CONFORMAL_ROC_HPP_
#pragma once

#include "conformal/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace conformal {

/// How error counts k out of n are turned into rates.
enum class RocVariant {
    empirical,  ///< k / n, with 0/0 set to a configurable value
    minimax,    ///< (k + 1/2) / (n + 1)
    laplace,    ///< (k + 1) / (n + 2)
};

[[nodiscard]] inline const char *to_string(RocVariant variant) noexcept {
    switch (variant) {
        case RocVariant::empirical:
            return "empirical";
        case RocVariant::minimax:
            return "minimax";
        case RocVariant::laplace:
            return "laplace";
    }
    return "unknown";
}

[[nodiscard]] inline RocVariant parse_roc_variant(std::string_view text) {
    if (text == "empirical") {
        return RocVariant::empirical;
    }
    if (text == "minimax") {
        return RocVariant::minimax;
    }
    if (text == "laplace") {
        return RocVariant::laplace;
    }
    throw configuration_error{ "unknown ROC variant '" + std::string{ text } + "'" };
}

inline constexpr double default_zero_over_zero = 0.5;

[[nodiscard]] inline double roc_rate(std::size_t k, std::size_t n, RocVariant variant, double zero_over_zero = default_zero_over_zero) noexcept {
    const auto kd = static_cast<double>(k);
    const auto nd = static_cast<double>(n);
    switch (variant) {
        case RocVariant::empirical:
            return n == 0 ? zero_over_zero : kd / nd;
        case RocVariant::minimax:
            return (kd + 0.5) / (nd + 1.0);
        case RocVariant::laplace:
            return (kd + 1.0) / (nd + 2.0);
    }
    return zero_over_zero;
}

/// Fraction of class-0 calibration scores f(x_i) >= c.
[[nodiscard]] inline double type_I_error(std::span<const double> scores0, double c, double zero_over_zero = default_zero_over_zero) noexcept {
    const auto k = static_cast<std::size_t>(std::count_if(scores0.begin(), scores0.end(), [c](double f) { return f >= c; }));
    return roc_rate(k, scores0.size(), RocVariant::empirical, zero_over_zero);
}

/// Fraction of class-1 calibration scores f(x_i) <= c.
[[nodiscard]] inline double type_II_error(std::span<const double> scores1, double c, double zero_over_zero = default_zero_over_zero) noexcept {
    const auto k = static_cast<std::size_t>(std::count_if(scores1.begin(), scores1.end(), [c](double f) { return f <= c; }));
    return roc_rate(k, scores1.size(), RocVariant::empirical, zero_over_zero);
}

struct RocPoint {
    double threshold;  ///< c; for points between two distinct scores, their midpoint
    double alpha;
    double beta;
};

/**
 * The image of c -> (alpha(c), beta(c)) over the real line.
 *
 * Both rates are step functions of c, so the image is finite: one point at every distinct
 * score value, one point for every open gap between consecutive distinct values, and the
 * two sentinels c = -inf (everything flagged as type I) and c = +inf.
 */
struct RocCurve {
    std::vector<RocPoint> points;
    RocVariant variant{ RocVariant::empirical };
    std::size_t n0{ 0 };
    std::size_t n1{ 0 };
};

[[nodiscard]] inline RocCurve build_roc(std::span<const double> scores0, std::span<const double> scores1, RocVariant variant,
                                        double zero_over_zero = default_zero_over_zero) {
    if (scores0.empty() && scores1.empty()) {
        throw configuration_error{ "build_roc needs at least one score in either class" };
    }
    std::vector<double> s0(scores0.begin(), scores0.end());
    std::vector<double> s1(scores1.begin(), scores1.end());
    std::sort(s0.begin(), s0.end());
    std::sort(s1.begin(), s1.end());
    std::vector<double> pooled;
    pooled.reserve(s0.size() + s1.size());
    std::merge(s0.begin(), s0.end(), s1.begin(), s1.end(), std::back_inserter(pooled));
    pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());

    RocCurve curve;
    curve.variant = variant;
    curve.n0 = s0.size();
    curve.n1 = s1.size();
    const auto rate0 = [&](std::size_t k) { return roc_rate(k, curve.n0, variant, zero_over_zero); };
    const auto rate1 = [&](std::size_t k) { return roc_rate(k, curve.n1, variant, zero_over_zero); };
    // #{s0 >= c} and #{s1 <= c} for c at a score value; #{s0 > c} for c just above it
    const auto at_least = [&](double c) { return static_cast<std::size_t>(s0.end() - std::lower_bound(s0.begin(), s0.end(), c)); };
    const auto above = [&](double c) { return static_cast<std::size_t>(s0.end() - std::upper_bound(s0.begin(), s0.end(), c)); };
    const auto at_most = [&](double c) { return static_cast<std::size_t>(std::upper_bound(s1.begin(), s1.end(), c) - s1.begin()); };

    constexpr double inf = std::numeric_limits<double>::infinity();
    curve.points.reserve(2 * pooled.size() + 1);
    curve.points.push_back({ -inf, rate0(curve.n0), rate1(0) });
    for (std::size_t j = 0; j < pooled.size(); ++j) {
        const double c = pooled[j];
        curve.points.push_back({ c, rate0(at_least(c)), rate1(at_most(c)) });
        const double next = j + 1 < pooled.size() ? c + 0.5 * (pooled[j + 1] - c) : inf;
        curve.points.push_back({ next, rate0(above(c)), rate1(at_most(c)) });
    }
    return curve;
}

/// sqrt(1/(n0+1)^2 + 1/(n1+1)^2).
[[nodiscard]] inline double roc_distance_bound(std::size_t n0, std::size_t n1) noexcept {
    const double a = 1.0 / (static_cast<double>(n0) + 1.0);
    const double b = 1.0 / (static_cast<double>(n1) + 1.0);
    return std::sqrt(a * a + b * b);
}

/// Euclidean distance from (p0, p1) to the nearest point of the curve.
[[nodiscard]] inline double pvalue_roc_distance(double p0, double p1, const RocCurve &curve) {
    if (curve.points.empty()) {
        throw configuration_error{ "ROC curve has no points" };
    }
    double best = std::numeric_limits<double>::infinity();
    for (const auto &pt : curve.points) {
        best = std::min(best, std::hypot(p0 - pt.alpha, p1 - pt.beta));
    }
    return best;
}

}  // namespace conformal

#endif  // CONFORMAL_ROC_HPP_
