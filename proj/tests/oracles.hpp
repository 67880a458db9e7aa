#pragma once

// Closed forms and brute-force references used as independent checks.

#include <cmath>
#include <functional>
#include <random>

#include "hetphase/vec.hpp"

namespace oracle {

inline constexpr double kQuarticKH = 8.0 / 3.0; // 2 * [p - p^3/3] from -1 to 1

/// (p^2 - 1)^2 written out, independent of the library's registry.
inline double quartic(double p) { return (p * p - 1.0) * (p * p - 1.0); }

/// 2 int_lo^hi sqrt(V) by composite Simpson with n (even) panels.
inline double simpson_cost(const std::function<double(double)> &v, double lo, double hi, int n = 20000) {
    const double h = (hi - lo) / n;
    double s = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        s += w * std::sqrt(std::max(v(lo + i * h), 0.0));
    }
    return 2.0 * s * h / 3.0;
}

/// int_Q m by brute-force midpoint sampling with n points per axis.
inline double cell_mean(const std::function<double(const hetphase::Vec &)> &m, int dim, int n) {
    double s = 0.0;
    long total = 1;
    for (int i = 0; i < dim; ++i) total *= n;
    for (long k = 0; k < total; ++k) {
        hetphase::Vec y(dim);
        long r = k;
        for (int i = 0; i < dim; ++i) {
            y[i] = (static_cast<double>(r % n) + 0.5) / n;
            r /= n;
        }
        s += m(y);
    }
    return s / static_cast<double>(total);
}

/// Random dyadic rational in [lo, hi): exactly representable, so x + 1 loses no bits.
inline double dyadic(std::mt19937_64 &rng, double lo, double hi) {
    std::uniform_int_distribution<long> k(0, (1L << 16) - 1);
    return lo + (hi - lo) * static_cast<double>(k(rng)) / 65536.0;
}

} // namespace oracle
