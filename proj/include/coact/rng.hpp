#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string_view>
#include <vector>

namespace coact {

// splitmix64 finalizer; used to combine seeds and tags.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t tag(std::string_view name) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Child seed from a parent seed plus a tag. All randomness in a run flows
// from one root seed through chains of derive_seed calls
// (run -> iteration -> stage -> item), so any sub-experiment can be
// replayed in isolation.
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t t) {
    return mix64(parent ^ mix64(t));
}

inline std::uint64_t derive_seed(std::uint64_t parent, std::string_view name) {
    return derive_seed(parent, tag(name));
}

inline std::uint64_t derive_seed(std::uint64_t parent, std::string_view name, std::uint64_t item) {
    return derive_seed(derive_seed(parent, tag(name)), item);
}

// Seeded random source. The engine is std::mt19937_64 (bit-exact per the
// standard); the distribution transforms are written out here because the
// std ones are implementation-defined, and identical seeds must replay
// identical streams on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1), 53 bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n). Rejection sampling, no modulo bias.
    std::uint64_t uniform_int(std::uint64_t n) {
        const std::uint64_t thresh = (-n) % n;
        for (;;) {
            std::uint64_t x = engine_();
            if (x >= thresh) return x % n;
        }
    }

    // Standard normal, Box-Muller. Two uniforms per draw, no cached spare,
    // so the stream position is a pure function of the call count.
    double normal() {
        double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        return r * std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
    }

    // Geometric on {1, 2, ...} with the given mean (success prob 1/mean).
    int geometric(double mean) {
        if (mean <= 1.0) return 1;
        double p = 1.0 / mean;
        double u = uniform();
        double g = 1.0 + std::floor(std::log1p(-u) / std::log1p(-p));
        if (g < 1.0) g = 1.0;
        if (g > 1e9) g = 1e9;
        return static_cast<int>(g);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // First k entries of a random permutation of [0, n).
    std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k) {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        if (k > n) k = n;
        for (std::size_t i = 0; i < k; ++i) {
            std::size_t j = i + static_cast<std::size_t>(uniform_int(n - i));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(k);
        return idx;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace coact
