#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace lbmrl {

// Counter-based generator (splitmix64 output function over key+counter).
// Every stochastic operation takes an explicit Rng, so a run is reproducible
// bit-for-bit from (config, seed) on any platform.
class Rng {
public:
    Rng() = default;
    explicit Rng(std::uint64_t key, std::uint64_t counter = 0)
        : key_(key), counter_(counter) {}

    std::uint64_t next_u64() {
        std::uint64_t z = key_ + (++counter_) * 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n). Lemire's multiply-shift; n must be > 0.
    int next_below(int n) {
        if (n <= 0) throw std::invalid_argument("Rng::next_below: n must be positive");
        unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) *
                              static_cast<unsigned __int128>(n);
        return static_cast<int>(m >> 64);
    }

    // Index drawn from a probability row (entries >= 0 summing to ~1).
    int next_categorical(const double* probs, int n) {
        double u = next_double();
        double cum = 0.0;
        for (int i = 0; i < n; ++i) {
            cum += probs[i];
            if (u < cum) return i;
        }
        return n - 1;  // guard against rounding in the row sum
    }
    int next_categorical(const std::vector<double>& probs) {
        return next_categorical(probs.data(), static_cast<int>(probs.size()));
    }

    // Independent substream; disjoint from this stream for distinct ids.
    Rng derive(std::uint64_t stream_id) const {
        std::uint64_t z = key_ ^ (stream_id + 0x632BE59BD9B4E019ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return Rng(z ^ (z >> 31));
    }

private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

}  // namespace lbmrl
