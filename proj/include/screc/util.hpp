#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

namespace screc {

// Deterministic 64-bit PRNG (splitmix64). Used everywhere a seed appears so
// that fixed-seed runs are bit-identical across platforms; std::mt19937
// distributions are not guaranteed stable between standard library versions.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform double in [0, 1) with a full 53-bit mantissa.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n).
    std::uint64_t uniform_int(std::uint64_t n) {
        return next_u64() % n;
    }

    double uniform_range(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

private:
    std::uint64_t state_;
};

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

// Lowercase tokens split on non-alphanumeric boundaries; empties dropped.
inline std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            tokens.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(cur);
    return tokens;
}

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

template <typename It, typename F>
std::string join(It first, It last, const std::string& sep, F render) {
    std::string out;
    for (It it = first; it != last; ++it) {
        if (it != first) out += sep;
        out += render(*it);
    }
    return out;
}

inline std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    return join(parts.begin(), parts.end(), sep,
                [](const std::string& s) { return s; });
}

// Decimal rendering with 17 significant digits (round-trips any double).
inline std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace screc
