#include "rng.hpp"

#include <map>

#include "error.hpp"

namespace vanauth {

namespace {

uint64_t splitmix64(uint64_t& x) {
    x += 0x9e3779b97f4a7c15ull;
    uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(uint64_t seed) : seed_(seed) {
    uint64_t s = seed;
    for (auto& w : state_) w = splitmix64(s);
}

uint64_t Rng::u64() {
    const uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

uint64_t Rng::below(uint64_t n) {
    if (n == 0) raise(Errc::BadParams, "Rng::below(0)");
    // rejection sampling to avoid modulo bias
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v;
    do {
        v = u64();
    } while (v >= limit);
    return v % n;
}

double Rng::real01() {
    return static_cast<double>(u64() >> 11) * 0x1.0p-53;
}

double Rng::exponential(double mean) {
    double u;
    do {
        u = real01();
    } while (u <= 0.0);
    return -mean * std::log(u);
}

void Rng::fill(uint8_t* dst, size_t n) {
    size_t i = 0;
    while (i + 8 <= n) {
        uint64_t v = u64();
        std::memcpy(dst + i, &v, 8);
        i += 8;
    }
    if (i < n) {
        uint64_t v = u64();
        std::memcpy(dst + i, &v, n - i);
    }
}

Bytes Rng::bytes(size_t n) {
    Bytes b(n);
    fill(b.data(), n);
    return b;
}

Block Rng::block() {
    Block b;
    fill(b.data(), b.size());
    return b;
}

Rng Rng::fork(std::string_view tag, uint64_t salt) const {
    uint64_t h = fnv1a64(tag);
    h = fnv1a64(reinterpret_cast<const uint8_t*>(&salt), 8, h);
    h = fnv1a64(reinterpret_cast<const uint8_t*>(&seed_), 8, h);
    return Rng(h);
}

std::vector<uint64_t> Rng::sample_without_replacement(uint64_t n, uint64_t k) {
    if (k > n) raise(Errc::BadParams, "sample larger than population");
    // partial Fisher-Yates over a sparse index map
    std::map<uint64_t, uint64_t> moved;
    std::vector<uint64_t> out;
    out.reserve(k);
    for (uint64_t i = 0; i < k; ++i) {
        uint64_t j = i + below(n - i);
        auto value_of = [&](uint64_t idx) {
            auto it = moved.find(idx);
            return it == moved.end() ? idx : it->second;
        };
        uint64_t vj = value_of(j);
        moved[j] = value_of(i);
        out.push_back(vj);
    }
    return out;
}

}  // namespace vanauth
