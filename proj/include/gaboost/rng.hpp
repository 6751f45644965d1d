#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace gaboost {

// splitmix64; used for seed derivation so that consumers of one stream can
// never collide with another stream derived from the same master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_label(std::string_view label) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Labeled seed derivation: derive_seed(master, {a, b, ...}) walks a hash
// chain, so streams are independent of the order subcommands are added.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> labels) {
    std::uint64_t s = splitmix64(master);
    for (std::uint64_t l : labels) s = splitmix64(s ^ splitmix64(l));
    return s;
}

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label) {
    return derive_seed(master, {hash_label(label)});
}

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t a) {
    return derive_seed(master, {hash_label(label), a});
}

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t a,
                                 std::uint64_t b) {
    return derive_seed(master, {hash_label(label), a, b});
}

// mt19937_64 with portable bounded draws. std::uniform_int_distribution is
// implementation-defined, so all reductions are done here by hand; identical
// seeds give identical streams on any conforming standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // [0, 1)
    double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // [lo, hi)
    double uniform(double lo, double hi) { return lo + unit() * (hi - lo); }

    // [lo, hi] inclusive, unbiased
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        if (lo > hi) throw std::invalid_argument("uniform_int: lo > hi");
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        if (span == 0) return static_cast<std::int64_t>(next_u64());  // full 64-bit range
        const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % span;
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return lo + static_cast<std::int64_t>(v % span);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct values from [0, n), in draw order (partial Fisher-Yates).
    std::vector<std::int32_t> sample_without_replacement(std::int32_t n, std::int32_t k) {
        if (k < 0 || k > n) throw std::invalid_argument("sample_without_replacement: k out of range");
        std::vector<std::int32_t> pool(static_cast<std::size_t>(n));
        for (std::int32_t i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
        std::vector<std::int32_t> out;
        out.reserve(static_cast<std::size_t>(k));
        for (std::int32_t i = 0; i < k; ++i) {
            const auto j = static_cast<std::size_t>(uniform_int(i, n - 1));
            std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
            out.push_back(pool[static_cast<std::size_t>(i)]);
        }
        return out;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace gaboost
