#pragma once

#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

namespace tinygaze {

// FNV-1a 64-bit, used as the content hash in manifests.
inline std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::string& s) {
    return fnv1a64(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

inline std::uint64_t fnv1a64(std::span<const double> v) {
    return fnv1a64(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(v.data()), v.size() * sizeof(double)));
}

inline std::string hex64(std::uint64_t h) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// Round-trip-safe decimal formatting (>= 17 significant digits).
inline std::string fmt_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::vector<std::string> split_ws(const std::string& line);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

std::vector<double> read_doubles_le(const std::string& path);
void write_doubles_le(const std::string& path, std::span<const double> values);

}  // namespace tinygaze
