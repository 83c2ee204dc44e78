#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

namespace locogen {

// FNV-1a over raw bytes. Used for the freeze ledger: a frozen component must
// keep a bit-identical hash across epochs.
inline uint64_t fnv1a(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline uint64_t hash_doubles(const std::vector<double>& v, uint64_t h = 0xcbf29ce484222325ull) {
    return v.empty() ? h : fnv1a(v.data(), v.size() * sizeof(double), h);
}

inline std::string hash_hex(uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace locogen
