#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "wavelab/wavelab.hpp"

namespace wavelab::testkit {

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

/// Smooth bump of random height, centre and width, zero outside [lo, hi].
inline Field random_bump(const Grid& g, std::mt19937_64& gen, double lo, double hi, double max_height = 1.0) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const double a = lo + (hi - lo) * 0.4 * U(gen);
    const double b = hi - (hi - lo) * 0.4 * U(gen);
    const double height = max_height * (0.1 + 0.9 * U(gen));
    const int bumps = 1 + static_cast<int>(3 * U(gen));
    return Field::from_function(g, [&](double z) {
        if (z <= a || z >= b) return 0.0;
        const double s = (z - a) / (b - a);
        double acc = 0.0;
        for (int k = 1; k <= bumps; ++k) acc += std::pow(std::sin(std::numbers::pi * s * k), 2) / k;
        return height * std::sin(std::numbers::pi * s) * acc / 2.0;
    });
}

/// Independent values in [lo, hi] at the nodes of [-window, window], zero elsewhere and at the ends.
inline Field random_rough(const Grid& g, std::mt19937_64& gen, double window, double lo, double hi) {
    std::uniform_real_distribution<double> U(lo, hi);
    Field u(g);
    for (std::size_t i = 1; i + 1 < g.n; ++i)
        if (std::abs(g.z(i)) <= window) u[i] = U(gen);
    return u;
}

inline double l2c_distance(const Field& a, const Field& b, double c) { return std::sqrt(weighted_l2_sq(a - b, c)); }

}  // namespace wavelab::testkit
