#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <string_view>

namespace fms::rng {

// FNV-1a string hash; used to derive named substreams from a base seed.
constexpr std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// splitmix64 finalizer.
constexpr std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Stable seed for substream `tag[index]` of a base seed. Two runs with the
// same base seed get identical substreams regardless of how many other
// substreams exist.
inline std::uint64_t derive(std::uint64_t base, std::string_view tag, std::uint64_t index = 0) {
    return mix(base ^ mix(fnv1a(tag)) ^ mix(0x6a09e667f3bcc909ull + index));
}

// Seeded random stream. Distributions are hand-rolled on top of mt19937_64 so
// draws are bit-identical across standard library implementations.
class Stream {
public:
    Stream() : engine_(0) {}
    explicit Stream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t bits() { return engine_(); }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Unbiased integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            std::uint64_t x = engine_();
            if (x >= threshold) return x % n;
        }
    }

    int index(int n) { return static_cast<int>(below(static_cast<std::uint64_t>(n))); }

    // Integer in [lo, hi] inclusive.
    int range(int lo, int hi) { return lo + index(hi - lo + 1); }

    double exponential(double mean) { return -mean * std::log1p(-uniform()); }

    // Box-Muller without the cached spare, so the stream state is exactly the
    // engine state (simplifies checkpointing).
    double gaussian() {
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    std::string serialize() const {
        std::ostringstream os;
        os << engine_;
        return os.str();
    }

    void deserialize(const std::string& s) {
        std::istringstream is(s);
        is >> engine_;
    }

    bool operator==(const Stream& other) const { return engine_ == other.engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace fms::rng
