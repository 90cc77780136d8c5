#ifndef UWDIFF_CORE_HASH_HPP_
#define UWDIFF_CORE_HASH_HPP_

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

namespace uwdiff {

// FNV-1a 64-bit. Used for config fingerprints, schedule hashes and
// checkpoint integrity checksums; not cryptographic.
inline uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline uint64_t fnv1a64(const std::string& s, uint64_t h = 0xcbf29ce484222325ULL) {
    return fnv1a64(s.data(), s.size(), h);
}

inline uint64_t fnv1a64(const std::vector<double>& v, uint64_t h = 0xcbf29ce484222325ULL) {
    return fnv1a64(v.data(), v.size() * sizeof(double), h);
}

inline std::string hex64(uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace uwdiff

#endif  // UWDIFF_CORE_HASH_HPP_
