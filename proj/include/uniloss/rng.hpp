// Copyright (c) 2026 The uniloss authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace uniloss {

// Deterministic RNG used everywhere in the project. mt19937_64 output is
// pinned by the standard; the value transforms below are hand-rolled so that
// generated datasets, anchor draws and weight inits do not depend on the
// standard library's unspecified distribution algorithms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // uniform in [lo, hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // unbiased uniform integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return x % n;
    }

    bool coin() { return (gen_() & 1u) != 0; }

    // standard normal via Box-Muller (second value cached)
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // k distinct indices from [0, n), in draw order
    std::vector<std::uint32_t> sample_without_replacement(std::uint32_t n, std::uint32_t k) {
        // Floyd's algorithm; O(k) memory, deterministic draw order.
        std::vector<std::uint32_t> out;
        out.reserve(k);
        std::vector<bool> taken(n, false);
        for (std::uint32_t j = n - k; j < n; ++j) {
            const auto t = static_cast<std::uint32_t>(below(j + 1));
            if (taken[t]) {
                out.push_back(j);
                taken[j] = true;
            } else {
                out.push_back(t);
                taken[t] = true;
            }
        }
        return out;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // child stream for an independent sub-task (dataset shard, parallel run)
    Rng spawn() { return Rng(gen_() ^ 0x9e3779b97f4a7c15ull); }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace uniloss
