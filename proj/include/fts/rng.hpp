#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace fts {

// Deterministic random stream used by every generator and trainer.
//
// Engine: std::mt19937_64 (the 64-bit Mersenne Twister is fully pinned by the
// C++ standard, so the raw stream is identical everywhere). Uniform doubles
// take the top 53 bits; normals come from the classic Box-Muller transform
// with the second variate cached. Fixture reproducibility depends on this
// exact recipe, so do not change it casually.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller.
    double next_normal();

    // Uniform integer in [0, n). Plain modulo; bias is irrelevant at the
    // scales used here (n far below 2^32).
    std::uint64_t next_below(std::uint64_t n);

    // Uniform in [lo, hi).
    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

private:
    std::mt19937_64 eng_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

// Stable per-component seed: FNV-1a hash of the tag XORed into the global
// seed, so enabling or disabling one component never shifts another's stream.
std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view tag);

}  // namespace fts
