#pragma once

#include <cstdint>

namespace permclass {

// Counter-mode SplitMix64. The stream is a pure function of (key, counter),
// so identical seeds replay identical streams on every platform, and
// substreams fork by rekeying rather than by sharing mutable state.
class Rng {
public:
    explicit Rng(std::uint64_t key) : key_(key) {}

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t next() { return mix(key_ + ++counter_ * 0x9E3779B97F4A7C15ull); }

    // Uniform in [0, 1), 53 significant bits.
    double uniform() { return double(next() >> 11) * 0x1.0p-53; }

    // Uniform in [0, n), unbiased by rejection.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t cut = (0 - n) % n;
        for (;;) {
            const std::uint64_t r = next();
            if (r >= cut) return r % n;
        }
    }

    // Independent labeled substream; forking never advances this stream.
    Rng fork(std::uint64_t label) const { return Rng(mix(key_ ^ mix(label + 0x9E3779B97F4A7C15ull))); }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace permclass
