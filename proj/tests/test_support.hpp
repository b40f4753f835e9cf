#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "kgh/field.hpp"
#include "kgh/spectral.hpp"

namespace kgh::testing {

inline constexpr double pi = std::numbers::pi;

inline double max_diff(const ComplexField& a, const ComplexField& b) { return max_abs(a - b); }
inline double max_diff(const RealField& a, const RealField& b) { return max_abs(a - b); }

inline double rel_l2(const ComplexField& a, const ComplexField& b) { return l2_norm(a - b) / l2_norm(b); }

/// Random band-limited field: a few low Fourier modes with random
/// coefficients from a fixed seed.
inline ComplexField random_band_limited(const Grid& grid, unsigned seed, int max_mode = 3) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> normal;
    ComplexField f(grid);
    for (int m0 = -max_mode; m0 <= max_mode; ++m0) {
        for (int m1 = -max_mode; m1 <= max_mode; ++m1) {
            if (grid.dims() == 1 && m1 != 0) continue;
            const std::complex<double> coef(normal(rng), normal(rng));
            for (std::size_t n = 0; n < grid.size(); ++n) {
                double phase = 2.0 * pi * m0 * (grid.coordinate(0, grid.axis_index(n, 0)) - grid.origin(0)) / grid.length(0);
                if (grid.dims() == 2) {
                    phase += 2.0 * pi * m1 * (grid.coordinate(1, grid.axis_index(n, 1)) - grid.origin(1)) / grid.length(1);
                }
                f[n] += coef * std::exp(std::complex<double>(0.0, phase));
            }
        }
    }
    return f;
}

}  // namespace kgh::testing
