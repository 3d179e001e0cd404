#pragma once

#include <cstdint>
#include <random>

namespace decsynth {

// Deterministic random stream. std::mt19937_64 has a standardized sequence;
// the double/int derivations below avoid std::*_distribution, whose output
// is implementation-defined, so identical seeds reproduce identical runs on
// any platform.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t bits() { return gen_(); }

    // uniform in [0,1)
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform in [0,n)
    uint64_t below(uint64_t n) {
        return static_cast<uint64_t>((static_cast<unsigned __int128>(gen_()) * n) >> 64);
    }

    // uniform integer in [lo,hi] inclusive
    long long range_int(long long lo, long long hi) {
        return lo + static_cast<long long>(below(static_cast<uint64_t>(hi - lo + 1)));
    }

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 gen_;
};

// splitmix64 step; used to derive independent per-task seeds from a master
// seed so parallel work stays reproducible.
inline uint64_t derive_seed(uint64_t seed, uint64_t index) {
    uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace decsynth
