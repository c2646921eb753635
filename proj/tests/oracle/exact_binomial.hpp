#ifndef CONFORMAL_TESTS_EXACT_BINOMIAL_HPP_
#define CONFORMAL_TESTS_EXACT_BINOMIAL_HPP_
#pragma once

#include <gmpxx.h>

#include <cmath>
#include <cstddef>
#include <cstdint>

namespace oracle {

/**
 * bin_{n,p}(k) summed exactly in rational arithmetic.
 *
 * p is taken at its exact binary value a / 2^e, so the sum is
 * sum_{j<=k} C(n,j) a^j (2^e - a)^(n-j) / 2^(e n), an integer over a power of two.
 */
inline double binom_cdf(std::size_t n, double p, std::int64_t k) {
    if (k < 0) {
        return 0.0;
    }
    if (static_cast<std::size_t>(k) >= n) {
        return 1.0;
    }
    int exponent = 0;
    const double mantissa = std::frexp(p, &exponent);  // p = mantissa * 2^exponent
    // a = mantissa * 2^53, so p = a / 2^(53 - exponent)
    mpz_class num;
    mpz_set_d(num.get_mpz_t(), std::ldexp(mantissa, 53));
    const long shift = 53 - exponent;
    mpz_class denom_one;
    mpz_ui_pow_ui(denom_one.get_mpz_t(), 2, static_cast<unsigned long>(shift));
    const mpz_class q = denom_one - num;

    mpz_class total = 0;
    mpz_class binom = 1;
    for (std::int64_t j = 0; j <= k; ++j) {
        if (j > 0) {
            binom *= static_cast<unsigned long>(n - static_cast<std::size_t>(j) + 1);
            binom /= static_cast<unsigned long>(j);
        }
        mpz_class pj;
        mpz_class qj;
        mpz_pow_ui(pj.get_mpz_t(), num.get_mpz_t(), static_cast<unsigned long>(j));
        mpz_pow_ui(qj.get_mpz_t(), q.get_mpz_t(), static_cast<unsigned long>(n - static_cast<std::size_t>(j)));
        total += binom * pj * qj;
    }
    mpz_class denom;
    mpz_pow_ui(denom.get_mpz_t(), denom_one.get_mpz_t(), static_cast<unsigned long>(n));
    mpq_class ratio{ total, denom };
    ratio.canonicalize();
    return ratio.get_d();
}

}  // namespace oracle

#endif  // CONFORMAL_TESTS_EXACT_BINOMIAL_HPP_
