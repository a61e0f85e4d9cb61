#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string_view>

namespace camfp {

/// 64-bit FNV-1a, used to turn string identifiers into seed material.
constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Combines seed components into one key. Order matters.
constexpr std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b) {
    return mix64(a ^ mix64(b + 0x632be59bd9b4e019ULL));
}
constexpr std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return derive_seed(derive_seed(a, b), c);
}

/// Counter-based generator: draw i is mix64(key + i * golden). Any stream
/// position is reproducible from (key, counter) alone, so results do not
/// depend on which worker generates them or in what order.
///
/// All distributions are implemented here rather than via <random> so that
/// draws are bit-identical across standard library implementations.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0)
        : key_(mix64(key)), counter_(counter) {}

    std::uint64_t next_u64() {
        return mix64(key_ + 0x9e3779b97f4a7c15ULL * (++counter_));
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Unbiased integer in [0, bound) (Lemire's multiply-and-reject).
    std::uint64_t below(std::uint64_t bound) {
        if (bound <= 1) return 0;
        unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                m = static_cast<unsigned __int128>(next_u64()) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    /// Standard normal via Box-Muller (one value per call, no caching).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    template <class T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_;
};

}  // namespace camfp
