#ifndef FUZCONV_UTIL_HPP
#define FUZCONV_UTIL_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace fuzconv {

// ---------------------------------------------------------------------------
// Logging. Verbosity comes from the FUZCONV_LOG environment variable:
// "error", "warn", "info" (default), "debug".
// ---------------------------------------------------------------------------

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

LogLevel log_threshold();
void log(LogLevel level, const std::string& msg);

inline void log_info(const std::string& msg) { log(LogLevel::Info, msg); }
inline void log_warn(const std::string& msg) { log(LogLevel::Warn, msg); }
inline void log_debug(const std::string& msg) { log(LogLevel::Debug, msg); }

// ---------------------------------------------------------------------------
// Deterministic RNG helpers. Distribution mapping is hand-rolled so that a
// given seed produces the same stream everywhere.
// ---------------------------------------------------------------------------

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) from the top 53 bits of the generator output.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

/// Uniform integer in [0, n), n > 0. Modulo bias is irrelevant at our scales
/// but we reject the tail anyway to keep the stream well defined.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = rng();
    while (x >= limit) x = rng();
    return x % n;
}

/// In-place Fisher-Yates shuffle driven by uniform_index.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(uniform_index(rng, i));
        std::swap(v[i - 1], v[j]);
    }
}

// ---------------------------------------------------------------------------
// Compensated (Neumaier) summation, used where long cumulative sums must stay
// accurate to a few ulps.
// ---------------------------------------------------------------------------

class KahanSum {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// ---------------------------------------------------------------------------
// FNV-1a 64-bit hash, used for config fingerprints.
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string to_hex(std::uint64_t v);

/// ceil(log2(n)) for n >= 1, computed with integers.
inline int ceil_log2(std::size_t n) {
    int bits = 0;
    std::size_t p = 1;
    while (p < n) {
        p <<= 1;
        ++bits;
    }
    return bits;
}

} // namespace fuzconv

#endif
