#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <string_view>
#include <vector>

namespace vanauth {

using Bytes = std::vector<uint8_t>;
using Block = std::array<uint8_t, 16>;

inline Bytes to_bytes(std::string_view s) {
    return Bytes(s.begin(), s.end());
}

inline std::string to_string(const Bytes& b) {
    return std::string(b.begin(), b.end());
}

inline void append(Bytes& dst, const Bytes& src) {
    dst.insert(dst.end(), src.begin(), src.end());
}

inline void append(Bytes& dst, const Block& src) {
    dst.insert(dst.end(), src.begin(), src.end());
}

inline void append_u64le(Bytes& dst, uint64_t v) {
    for (int i = 0; i < 8; ++i) dst.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

inline uint64_t read_u64le(const uint8_t* p) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(p[i]) << (8 * i);
    return v;
}

inline std::string hex(const uint8_t* data, size_t n) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(2 * n);
    for (size_t i = 0; i < n; ++i) {
        out.push_back(digits[data[i] >> 4]);
        out.push_back(digits[data[i] & 0xf]);
    }
    return out;
}

inline std::string hex(const Bytes& b) { return hex(b.data(), b.size()); }
inline std::string hex(const Block& b) { return hex(b.data(), b.size()); }

// FNV-1a, used for trace/envelope digests. Not a cryptographic hash.
inline uint64_t fnv1a64(const uint8_t* data, size_t n, uint64_t h = 0xcbf29ce484222325ull) {
    for (size_t i = 0; i < n; ++i) {
        h ^= data[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline uint64_t fnv1a64(const Bytes& b) { return fnv1a64(b.data(), b.size()); }
inline uint64_t fnv1a64(std::string_view s) {
    return fnv1a64(reinterpret_cast<const uint8_t*>(s.data()), s.size());
}

inline std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

}  // namespace vanauth
