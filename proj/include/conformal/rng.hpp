#ifndef CONFORMAL_RNG_HPP_
#define CONFORMAL_RNG_HPP_
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace conformal {

/**
 * Philox4x32-10 counter-based generator (Salmon et al., Random123).
 *
 * The block function maps a 128-bit counter and 64-bit key to 128 random bits. Everything
 * built on top of it (uniforms, normals, bounded integers) is implemented here rather than
 * through <random> distributions so that streams are identical across standard libraries.
 */
class philox4x32 {
  public:
    using counter_type = std::array<std::uint32_t, 4>;
    using key_type = std::array<std::uint32_t, 2>;

    static constexpr const char *name = "philox4x32-10";

    [[nodiscard]] static constexpr counter_type block(counter_type ctr, key_type key) noexcept {
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = std::uint64_t{ 0xD2511F53U } * ctr[0];
            const std::uint64_t p1 = std::uint64_t{ 0xCD9E8D57U } * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = { hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0 };
            key[0] += 0x9E3779B9U;
            key[1] += 0xBB67AE85U;
        }
        return ctr;
    }
};

/**
 * A stream of random numbers keyed by (seed, stream). Distinct streams of the same seed are
 * independent, which is how simulation trials and split permutations get reproducible,
 * schedule-independent randomness.
 */
class counter_rng {
  public:
    static constexpr int version = 1;

    explicit counter_rng(std::uint64_t seed, std::uint64_t stream = 0) noexcept :
        key_{ static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32) },
        stream_{ stream } {}

    [[nodiscard]] std::uint64_t next_u64() noexcept {
        if (buffered_ == 0) {
            refill();
        }
        --buffered_;
        return buffer_[buffered_];
    }

    /// Uniform on [0, 1) with 53 random bits.
    [[nodiscard]] double uniform() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform on the open interval (0, 1).
    [[nodiscard]] double uniform_open() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller (cosine branch only).
    [[nodiscard]] double normal() noexcept {
        const double u1 = uniform_open();
        const double u2 = uniform_open();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    [[nodiscard]] double normal(double mean, double sd) noexcept { return mean + sd * normal(); }

    /// Uniform integer in [0, bound). bound must be positive.
    [[nodiscard]] std::uint64_t uniform_index(std::uint64_t bound) noexcept {
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) {
                return r % bound;
            }
        }
    }

    [[nodiscard]] bool bernoulli(double p) noexcept { return uniform() < p; }

  private:
    void refill() noexcept {
        const philox4x32::counter_type ctr{ static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                                            static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32) };
        const auto out = philox4x32::block(ctr, key_);
        ++block_;
        // consumed back to front
        buffer_[1] = (std::uint64_t{ out[1] } << 32) | out[0];
        buffer_[0] = (std::uint64_t{ out[3] } << 32) | out[2];
        buffered_ = 2;
    }

    philox4x32::key_type key_;
    std::uint64_t stream_;
    std::uint64_t block_{ 0 };
    std::array<std::uint64_t, 2> buffer_{};
    int buffered_{ 0 };
};

/// Stream identifiers reserved by the library.
namespace streams {
inline constexpr std::uint64_t split = 0x73706c6974ULL;  // "split"
}  // namespace streams

}  // namespace conformal

#endif  // CONFORMAL_RNG_HPP_
