#include "bandsel/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace bandsel {

std::size_t Rng::index(std::size_t n)
{
    // Rejection sampling to avoid modulo bias.
    const std::uint64_t range = std::uint64_t(n);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % range;
    std::uint64_t r;
    do {
        r = engine_();
    } while (r >= limit);
    return std::size_t(r % range);
}

double Rng::normal()
{
    double u1 = uniform();
    while (u1 <= 0.0)
        u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace bandsel
