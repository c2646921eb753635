#ifndef CONFORMAL_VALIDITY_HPP_
#define CONFORMAL_VALIDITY_HPP_
#pragma once

#include "conformal/core.hpp"
#include "conformal/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace conformal {

namespace detail {

/// Neumaier compensated sum.
class compensated_sum {
  public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            compensation_ += (sum_ - t) + x;
        } else {
            compensation_ += (x - t) + sum_;
        }
        sum_ = t;
    }

    [[nodiscard]] double value() const noexcept { return sum_ + compensation_; }

  private:
    double sum_{ 0.0 };
    double compensation_{ 0.0 };
};

/// log(n!) - log(sqrt(2 pi n) (n/e)^n) for integer n >= 0.
inline double stirling_error(double n) noexcept {
    static constexpr std::array<double, 16> small{
        0.0,
        8.1061466795327261070092106e-02,
        4.1340695955409297035476612e-02,
        2.7677925684998338357045711e-02,
        2.0790672103765093364780014e-02,
        1.6644691189821193139097844e-02,
        1.3876128823070748435908328e-02,
        1.1896709945891769527603898e-02,
        1.0411265261972096202169880e-02,
        9.2554621827127328548279195e-03,
        8.3305634333628707927088541e-03,
        7.5736754879518405902949496e-03,
        6.9428401072095299179087746e-03,
        6.4089941880042071431500261e-03,
        5.9513701127588474956708886e-03,
        5.5547335519628010525039485e-03,
    };
    constexpr double s0 = 1.0 / 12.0;
    constexpr double s1 = 1.0 / 360.0;
    constexpr double s2 = 1.0 / 1260.0;
    constexpr double s3 = 1.0 / 1680.0;
    constexpr double s4 = 1.0 / 1188.0;
    if (n <= 15.0) {
        return small[static_cast<std::size_t>(n)];
    }
    const double nn = n * n;
    if (n > 500.0) {
        return (s0 - s1 / nn) / n;
    }
    if (n > 80.0) {
        return (s0 - (s1 - s2 / nn) / nn) / n;
    }
    if (n > 35.0) {
        return (s0 - (s1 - (s2 - s3 / nn) / nn) / nn) / n;
    }
    return (s0 - (s1 - (s2 - (s3 - s4 / nn) / nn) / nn) / nn) / n;
}

/// x log(x / np) + np - x, accurate when x is close to np.
inline double deviance_term(double x, double np) noexcept {
    if (std::abs(x - np) < 0.1 * (x + np)) {
        double v = (x - np) / (x + np);
        double s = (x - np) * v;
        double ej = 2.0 * x * v;
        v *= v;
        for (int j = 1; j < 1000; ++j) {
            ej *= v;
            const double s1 = s + ej / (2 * j + 1);
            if (s1 == s) {
                return s1;
            }
            s = s1;
        }
        return s;
    }
    return x * std::log(x / np) + np - x;
}

/// log P(X = x) for X ~ Binomial(n, p), saddle-point form (Loader 2000), q = 1 - p.
inline double binom_log_pmf(double x, double n, double p, double q) noexcept {
    constexpr double neg_inf = -std::numeric_limits<double>::infinity();
    if (p == 0.0) {
        return x == 0.0 ? 0.0 : neg_inf;
    }
    if (q == 0.0) {
        return x == n ? 0.0 : neg_inf;
    }
    if (x < 0.0 || x > n) {
        return neg_inf;
    }
    if (x == 0.0) {
        return p < 0.1 ? -deviance_term(n, n * q) - n * p : n * std::log(q);
    }
    if (x == n) {
        return q < 0.1 ? -deviance_term(n, n * p) - n * q : n * std::log(p);
    }
    const double lc = stirling_error(n) - stirling_error(x) - stirling_error(n - x) - deviance_term(x, n * p) - deviance_term(n - x, n * q);
    const double lf = std::log(2.0 * std::numbers::pi) + std::log(x) + std::log1p(-x / n);
    return lc - 0.5 * lf;
}

}  // namespace detail

/// P(X = k), X ~ Binomial(n, p).
[[nodiscard]] inline double binom_pmf(std::size_t n, double p, std::int64_t k) noexcept {
    if (k < 0 || static_cast<std::size_t>(k) > n) {
        return 0.0;
    }
    return std::exp(detail::binom_log_pmf(static_cast<double>(k), static_cast<double>(n), p, 1.0 - p));
}

/**
 * bin_{n,p}(k) = P(X <= k) for X ~ Binomial(n, p).
 *
 * Sums whichever tail lies away from the mode: the tail term nearest the mode is evaluated
 * in log space, the remaining terms by the pmf ratio recurrence (they decrease
 * monotonically), accumulated with compensation and truncated once negligible.
 */
[[nodiscard]] inline double binom_cdf(std::size_t n, double p, std::int64_t k) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw domain_error{ "binomial success probability must lie in [0, 1]" };
    }
    if (k < 0) {
        return 0.0;
    }
    if (static_cast<std::size_t>(k) >= n) {
        return 1.0;
    }
    if (p == 0.0) {
        return 1.0;
    }
    if (p == 1.0) {
        return 0.0;
    }
    const double q = 1.0 - p;
    const double nd = static_cast<double>(n);
    const double mode = std::floor((nd + 1.0) * p);
    const auto kd = static_cast<double>(k);

    detail::compensated_sum sum;
    if (kd < mode) {
        // lower tail, j = k, k-1, ..., 0
        double term = std::exp(detail::binom_log_pmf(kd, nd, p, q));
        const double odds = q / p;
        for (double j = kd; term > 0.0; --j) {
            sum.add(term);
            if (j == 0.0 || term < sum.value() * 1e-18) {
                break;
            }
            term *= j / (nd - j + 1.0) * odds;
        }
        return std::clamp(sum.value(), 0.0, 1.0);
    }
    // upper tail, j = k+1, ..., n
    double term = std::exp(detail::binom_log_pmf(kd + 1.0, nd, p, q));
    const double odds = p / q;
    for (double j = kd + 1.0; term > 0.0; ++j) {
        sum.add(term);
        if (j == nd || term < sum.value() * 1e-18) {
            break;
        }
        term *= (nd - j) / (j + 1.0) * odds;
    }
    return std::clamp(1.0 - sum.value(), 0.0, 1.0);
}

namespace detail {

/// Modified Lentz evaluation of the incomplete beta continued fraction.
inline double beta_continued_fraction(double a, double b, double x) noexcept {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) {
        d = tiny;
    }
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 10000; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) {
            c = tiny;
        }
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) {
            c = tiny;
        }
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < eps) {
            break;
        }
    }
    return h;
}

}  // namespace detail

/// Regularized incomplete beta function I_x(a, b): the Beta(a, b) distribution function.
[[nodiscard]] inline double beta_cdf(double a, double b, double x) {
    if (!(a > 0.0 && b > 0.0)) {
        throw domain_error{ "beta parameters must be positive" };
    }
    if (std::isnan(x)) {
        throw domain_error{ "beta_cdf argument is NaN" };
    }
    if (x <= 0.0) {
        return 0.0;
    }
    if (x >= 1.0) {
        return 1.0;
    }
    const double log_prefix = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double prefix = std::exp(log_prefix);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return std::clamp(prefix * detail::beta_continued_fraction(a, b, x) / a, 0.0, 1.0);
    }
    return std::clamp(1.0 - prefix * detail::beta_continued_fraction(b, a, 1.0 - x) / b, 0.0, 1.0);
}

/// Both sides of bin_{n,E}(k-1) = Bet_{n+1-k,k}(1-E) = 1 - Bet_{k,n+1-k}(E).
struct BinomialBetaIdentity {
    double lhs;
    double rhs;
    double rhs_complement;
};

[[nodiscard]] inline BinomialBetaIdentity binom_beta_identity(std::size_t n, std::int64_t k, double E) {
    if (n < 1 || k < 1 || static_cast<std::size_t>(k) > n) {
        throw configuration_error{ "binom_beta_identity requires 1 <= k <= n" };
    }
    const auto a = static_cast<double>(n + 1 - static_cast<std::size_t>(k));
    const auto b = static_cast<double>(k);
    return { binom_cdf(n, E, k - 1), beta_cdf(a, b, 1.0 - E), 1.0 - beta_cdf(b, a, E) };
}

/// Outcome of sweeping bin_{n,p}(k) over an evenly spaced p grid.
struct MonotonicityCheck {
    bool non_increasing{ true };
    double largest_increase{ 0.0 };
    double worst_p{ 0.0 };
};

/// Verifies bin_{n,p}(k) is non-increasing in p over `grid_points` points of [0, 1].
[[nodiscard]] inline MonotonicityCheck binom_cdf_monotone_check(std::size_t n, std::int64_t k, std::size_t grid_points = 1001) {
    if (k < 0 || static_cast<std::size_t>(k) > n) {
        throw configuration_error{ "binom_cdf_monotone_check requires 0 <= k <= n" };
    }
    if (grid_points < 2) {
        throw configuration_error{ "monotonicity grid needs at least two points" };
    }
    MonotonicityCheck result;
    double previous = binom_cdf(n, 0.0, k);
    for (std::size_t i = 1; i < grid_points; ++i) {
        const double p = static_cast<double>(i) / static_cast<double>(grid_points - 1);
        const double current = binom_cdf(n, p, k);
        if (current - previous > result.largest_increase) {
            result.largest_increase = current - previous;
            result.worst_p = p;
        }
        previous = current;
    }
    result.non_increasing = result.largest_increase <= 0.0;
    return result;
}

/**
 * overbin_{n,delta}(k) = max{p : bin_{n,p}(k) >= delta}, by bisection.
 *
 * Returns the upper end of the final bracket, so bin_{n,result}(k) <= delta: the result is
 * always a valid (conservative) E. k < 0 gives 0; k >= n gives 1.
 */
[[nodiscard]] inline double overbin(std::size_t n, double delta, std::int64_t k, double tolerance = 1e-13, int max_iterations = 200) {
    if (!(delta > 0.0 && delta <= 1.0)) {
        throw domain_error{ "delta must lie in (0, 1]" };
    }
    if (k < 0) {
        return 0.0;
    }
    if (static_cast<std::size_t>(k) >= n) {
        return 1.0;
    }
    double lo = 0.0;  // bin = 1 >= delta
    double hi = 1.0;  // bin = 0 < delta
    for (int i = 0; i < max_iterations && hi - lo > tolerance; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (binom_cdf(n, mid, k) >= delta) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return hi;
}

inline void require_calibration_size(std::size_t n) {
    if (n < 1) {
        throw configuration_error{ "calibration size n must be at least 1" };
    }
}

/// floor(epsilon (n + 1) - 1): the largest count of calibration scores below the test score that still errs.
[[nodiscard]] inline std::int64_t error_count_limit(double epsilon, std::size_t n) {
    return significance_floor(epsilon, n + 1) - 1;
}

/// epsilon + sqrt(-ln(delta) / (2n)), clamped to 1.
[[nodiscard]] inline double hoeffding_E(double epsilon, double delta, std::size_t n) {
    require_significance(epsilon);
    require_calibration_size(n);
    if (!(delta > 0.0 && delta <= 1.0)) {
        throw domain_error{ "hoeffding_E: delta must lie in (0, 1]; delta = 0 gives no finite bound" };
    }
    return std::min(1.0, epsilon + std::sqrt(-std::log(delta) / (2.0 * static_cast<double>(n))));
}

/// epsilon + sqrt(-2 epsilon ln(delta) / n) - 2 ln(delta) / n, clamped to 1. Below hoeffding_E for small epsilon, above it for large.
[[nodiscard]] inline double alternative_E(double epsilon, double delta, std::size_t n) {
    require_significance(epsilon);
    require_calibration_size(n);
    if (!(delta > 0.0 && delta <= 1.0)) {
        throw domain_error{ "alternative_E: delta must lie in (0, 1]" };
    }
    const double nd = static_cast<double>(n);
    const double log_delta = std::log(delta);
    return std::min(1.0, epsilon + std::sqrt(-2.0 * epsilon * log_delta / nd) - 2.0 * log_delta / nd);
}

/**
 * bin_{n,E}(floor(epsilon (n + 1) - 1)): the smallest delta for which the epsilon-level ICP
 * is (E, delta)-valid when conformity scores are continuous. With atoms in the score
 * distribution it remains a valid (upper-bound) certificate.
 */
[[nodiscard]] inline double exact_delta(double epsilon, double E, std::size_t n) {
    require_significance(epsilon);
    require_calibration_size(n);
    return binom_cdf(n, E, error_count_limit(epsilon, n));
}

/// overbin_{n,delta}(floor(epsilon (n + 1) - 1)): the smallest E certified at confidence 1 - delta.
[[nodiscard]] inline double exact_E(double epsilon, double delta, std::size_t n, double tolerance = 1e-13) {
    require_significance(epsilon);
    require_calibration_size(n);
    if (!(delta > 0.0 && delta < 1.0)) {
        throw domain_error{ "exact_E: delta must lie in (0, 1)" };
    }
    return overbin(n, delta, error_count_limit(epsilon, n), tolerance);
}

enum class BoundKind { hoeffding, exact, alternative };

[[nodiscard]] inline const char *to_string(BoundKind kind) noexcept {
    switch (kind) {
        case BoundKind::hoeffding:
            return "hoeffding";
        case BoundKind::exact:
            return "exact";
        case BoundKind::alternative:
            return "alternative";
    }
    return "unknown";
}

/// A certified (epsilon, delta, E) triple for calibration size n.
struct ValidityBound {
    double epsilon;
    double delta;
    double E;
    std::size_t n;
    BoundKind kind;
};

[[nodiscard]] inline ValidityBound hoeffding_bound(double epsilon, double delta, std::size_t n) {
    return { epsilon, delta, hoeffding_E(epsilon, delta, n), n, BoundKind::hoeffding };
}

[[nodiscard]] inline ValidityBound exact_bound(double epsilon, double delta, std::size_t n) {
    return { epsilon, delta, exact_E(epsilon, delta, n), n, BoundKind::exact };
}

[[nodiscard]] inline ValidityBound alternative_bound(double epsilon, double delta, std::size_t n) {
    return { epsilon, delta, alternative_E(epsilon, delta, n), n, BoundKind::alternative };
}

/// Exact (Clopper-Pearson) two-sided interval for a binomial proportion k / n.
struct ProportionInterval {
    double lower;
    double upper;
};

[[nodiscard]] inline ProportionInterval clopper_pearson(std::size_t successes, std::size_t trials, double confidence) {
    if (trials == 0 || successes > trials) {
        throw configuration_error{ "clopper_pearson requires 0 <= successes <= trials, trials > 0" };
    }
    if (!(confidence > 0.0 && confidence < 1.0)) {
        throw configuration_error{ "confidence must lie in (0, 1)" };
    }
    const double tail = 0.5 * (1.0 - confidence);
    const auto k = static_cast<std::int64_t>(successes);
    // lower: P(X >= k | p) = tail  <=>  bin_{n,p}(k-1) = 1 - tail
    const double lower = successes == 0 ? 0.0 : overbin(trials, 1.0 - tail, k - 1, 1e-12);
    const double upper = successes == trials ? 1.0 : overbin(trials, tail, k, 1e-12);
    return { lower, upper };
}

/// Order-statistic interval [y_(L), y_(U)] with y_(0) = -inf and y_(n+1) = +inf.
struct TolerancePrediction {
    double lower;
    double upper;
};

[[nodiscard]] inline TolerancePrediction wilks_interval(std::span<const double> sample, std::size_t lower_rank, std::size_t upper_rank) {
    const std::size_t n = sample.size();
    if (n < 1) {
        throw configuration_error{ "wilks_interval needs a non-empty sample" };
    }
    if (lower_rank > upper_rank) {
        throw configuration_error{ "wilks_interval requires L <= U" };
    }
    if (upper_rank > n + 1) {
        throw configuration_error{ "wilks_interval requires U <= n + 1" };
    }
    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    constexpr double inf = std::numeric_limits<double>::infinity();
    const auto order = [&](std::size_t i) {
        if (i == 0) {
            return -inf;
        }
        if (i == n + 1) {
            return inf;
        }
        return sorted[i - 1];
    };
    return { order(lower_rank), order(upper_rank) };
}

/// Number of statistically equivalent blocks [y_(L), y_(U)] discards: L + n + 1 - U.
[[nodiscard]] inline std::size_t wilks_discarded_blocks(std::size_t n, std::size_t lower_rank, std::size_t upper_rank) {
    if (lower_rank > upper_rank || upper_rank > n + 1) {
        throw configuration_error{ "wilks ranks require 0 <= L <= U <= n + 1" };
    }
    return lower_rank + n + 1 - upper_rank;
}

/// Smallest delta for which [y_(L), y_(U)] is (E, delta)-valid: bin_{n,E}(blocks - 1).
[[nodiscard]] inline double wilks_delta(std::size_t n, std::size_t lower_rank, std::size_t upper_rank, double E) {
    const auto blocks = static_cast<std::int64_t>(wilks_discarded_blocks(n, lower_rank, upper_rank));
    return binom_cdf(n, E, blocks - 1);
}

}  // namespace conformal

#endif  // CONFORMAL_VALIDITY_HPP_
