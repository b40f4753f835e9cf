#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "kgh/grid.hpp"

namespace kgh {

using Complex = std::complex<double>;

/// Scalar samples on a Grid. Value semantics; the grid is shared.
template <class T>
class Field {
public:
    using value_type = T;

    explicit Field(Grid grid) : grid_(std::move(grid)), values_(grid_.size(), T{}) {}
    Field(Grid grid, std::vector<T> values) : grid_(std::move(grid)), values_(std::move(values)) {
        if (values_.size() != grid_.size()) {
            throw std::invalid_argument("field value count does not match grid size");
        }
    }

    /// Samples f(x) at every grid point; x has one coordinate per axis.
    template <class Fn>
    static Field sample(const Grid& grid, Fn&& fn) {
        Field out(grid);
        std::vector<double> x(static_cast<std::size_t>(grid.dims()));
        for (std::size_t n = 0; n < grid.size(); ++n) {
            for (int a = 0; a < grid.dims(); ++a) {
                x[static_cast<std::size_t>(a)] = grid.coordinate(a, grid.axis_index(n, a));
            }
            out.values_[n] = static_cast<T>(fn(std::span<const double>(x)));
        }
        return out;
    }

    const Grid& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return values_.size(); }
    std::span<T> values() noexcept { return values_; }
    std::span<const T> values() const noexcept { return values_; }
    T& operator[](std::size_t n) { return values_[n]; }
    const T& operator[](std::size_t n) const { return values_[n]; }

    bool all_finite() const {
        return std::all_of(values_.begin(), values_.end(), [](const T& v) {
            if constexpr (std::is_same_v<T, Complex>) {
                return std::isfinite(v.real()) && std::isfinite(v.imag());
            } else {
                return std::isfinite(v);
            }
        });
    }

    Field& operator+=(const Field& o) {
        check_same_grid(o);
        for (std::size_t n = 0; n < values_.size(); ++n) values_[n] += o.values_[n];
        return *this;
    }
    Field& operator-=(const Field& o) {
        check_same_grid(o);
        for (std::size_t n = 0; n < values_.size(); ++n) values_[n] -= o.values_[n];
        return *this;
    }
    Field& operator*=(T s) {
        for (auto& v : values_) v *= s;
        return *this;
    }

    friend Field operator+(Field a, const Field& b) { return a += b; }
    friend Field operator-(Field a, const Field& b) { return a -= b; }
    friend Field operator*(Field a, T s) { return a *= s; }
    friend Field operator*(T s, Field a) { return a *= s; }

    void check_same_grid(const Field& o) const {
        if (!(grid_ == o.grid_)) throw std::invalid_argument("fields live on different grids");
    }

private:
    Grid grid_;
    std::vector<T> values_;
};

using RealField = Field<double>;
using ComplexField = Field<Complex>;
using VectorField = std::vector<RealField>;

inline RealField real_part(const ComplexField& f) {
    RealField out(f.grid());
    for (std::size_t n = 0; n < f.size(); ++n) out[n] = f[n].real();
    return out;
}

inline RealField imag_part(const ComplexField& f) {
    RealField out(f.grid());
    for (std::size_t n = 0; n < f.size(); ++n) out[n] = f[n].imag();
    return out;
}

inline ComplexField to_complex(const RealField& f) {
    ComplexField out(f.grid());
    for (std::size_t n = 0; n < f.size(); ++n) out[n] = f[n];
    return out;
}

inline ComplexField conj(const ComplexField& f) {
    ComplexField out(f.grid());
    for (std::size_t n = 0; n < f.size(); ++n) out[n] = std::conj(f[n]);
    return out;
}

}  // namespace kgh
