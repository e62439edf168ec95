#include "fts/rng.hpp"

#include <cmath>
#include <numbers>

#include "fts/error.hpp"

namespace fts {

double Rng::next_normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    double u1 = next_double();
    double u2 = next_double();
    while (u1 <= 0.0) u1 = next_double();  // avoid log(0)
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * std::numbers::pi * u2;
    cached_ = radius * std::sin(angle);
    has_cached_ = true;
    return radius * std::cos(angle);
}

std::uint64_t Rng::next_below(std::uint64_t n) {
    if (n == 0) fail(errc::invalid_argument, "next_below: n must be positive");
    return next_u64() % n;
}

std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view tag) {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (char c : tag) {
        hash ^= static_cast<unsigned char>(c);
        hash *= 0x100000001b3ull;
    }
    return global_seed ^ hash;
}

}  // namespace fts
