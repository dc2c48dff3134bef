#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string_view>
#include <vector>

#include "bytes.hpp"

namespace vanauth {

// Deterministic xoshiro256** generator. The simulator requires bit-identical
// runs for a given seed on every platform, so all randomness goes through
// this instead of the standard <random> distributions.
class Rng {
public:
    explicit Rng(uint64_t seed);

    uint64_t u64();

    // Uniform in [0, n). n must be > 0.
    uint64_t below(uint64_t n);

    // Uniform double in [0, 1) with 53 bits of precision.
    double real01();

    bool chance(double p) { return real01() < p; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * real01(); }

    double exponential(double mean);

    void fill(uint8_t* dst, size_t n);

    Bytes bytes(size_t n);

    Block block();

    // Child stream whose seed depends on this stream's seed and the tag,
    // but not on how much of this stream has been consumed.
    Rng fork(std::string_view tag, uint64_t salt = 0) const;

    // k distinct values from [0, n), in draw order.
    std::vector<uint64_t> sample_without_replacement(uint64_t n, uint64_t k);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    uint64_t state_[4];
    uint64_t seed_;
};

}  // namespace vanauth
