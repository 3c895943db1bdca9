#pragma once

#include <cstdint>
#include <random>

namespace tabrec {

// Seedable portable RNG: mt19937_64 with hand-rolled distributions so the
// generated streams are identical across platforms and standard libraries
// (std:: distributions are implementation-defined).
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 bits of mantissa.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [lo, hi] inclusive, unbiased by rejection.
    int uniform_int(int lo, int hi) {
        const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        const uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return lo + static_cast<int>(v % span);
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Independent substream for a keyed subtask; keeps per-table generation
    // order-insensitive.
    Rng fork(uint64_t key) {
        uint64_t s = engine_() ^ (key * 0x9e3779b97f4a7c15ULL);
        return Rng(s);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace tabrec
