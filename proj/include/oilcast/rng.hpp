#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace oilcast {

// SplitMix64 stream with a keyed-substream constructor.
//
// Substreams derived from the same seed but different indices are
// statistically independent and depend only on (seed, index), never on
// how many draws other streams made. That makes Monte Carlo output
// identical for any path-evaluation order or thread count.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(mix(seed + golden_gamma)) {}

    static Rng substream(std::uint64_t seed, std::uint64_t index) {
        Rng r(0);
        r.state_ = mix(mix(seed + golden_gamma) ^ mix(index + 0x8000000000000000ull));
        return r;
    }

    std::uint64_t next_u64() {
        state_ += golden_gamma;
        return mix(state_);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

    // Standard normal via Box-Muller; the second variate is cached.
    double normal();

    // Fisher-Yates shuffle with this stream.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_u64() % i);
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    static constexpr std::uint64_t golden_gamma = 0x9e3779b97f4a7c15ull;

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace oilcast
