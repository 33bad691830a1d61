#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace iclbench {

/// SplitMix64 (Steele, Lea, Flood). Used to expand a single integer seed into
/// xoshiro state and to derive child seeds.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}
    std::uint64_t next() noexcept;

private:
    std::uint64_t state_;
};

/// Finalizer of SplitMix64 applied to one value.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives an independent child seed from a parent seed and a stream id.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream) noexcept;

/// FNV-1a 64-bit over raw bytes. Stable across platforms and languages.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// xoshiro256** 1.0 (Blackman, Vigna), state filled from SplitMix64(seed).
///
/// Every random decision in the harness (dataset split, example selection,
/// bootstrap resampling, randomized targets) goes through this generator so
/// results are identical across compilers and platforms.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) noexcept;

    std::uint64_t next() noexcept;
    std::uint64_t operator()() noexcept { return next(); }
    static constexpr std::uint64_t min() noexcept { return 0; }
    static constexpr std::uint64_t max() noexcept { return ~std::uint64_t{0}; }

    /// Uniform double in [0, 1) from the top 53 bits.
    double uniform() noexcept;

    /// Uniform integer in [0, bound) by rejection (no modulo bias). bound > 0.
    std::uint64_t below(std::uint64_t bound) noexcept;

    /// Standard normal via Box-Muller: sqrt(-2 ln(1 - u1)) * cos(2 pi u2).
    /// Consumes exactly two uniforms per draw.
    double normal() noexcept;

    /// Fisher-Yates, iterating i from n-1 down to 1 and swapping with below(i+1).
    template <typename T>
    void shuffle(std::span<T> items) noexcept
    {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    template <typename T>
    void shuffle(std::vector<T>& items) noexcept
    {
        shuffle(std::span<T>(items));
    }

private:
    std::uint64_t s_[4];
};

} // namespace iclbench
