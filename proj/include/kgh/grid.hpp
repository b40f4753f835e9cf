#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace kgh {

namespace detail {
struct FftPlans;
}

/// Periodic rectilinear grid over a 1D or 2D box.
///
/// Samples sit at origin + j*spacing for j = 0..points-1, so the box is
/// [origin, origin + length) on every axis. Flat storage is row-major with
/// axis 0 slowest. Copies are cheap; the wavenumber tables and FFT plans are
/// shared by all copies.
class Grid {
public:
    static Grid create(int dims, std::vector<int> points, std::vector<double> lengths,
                       std::vector<double> origin = {});

    int dims() const noexcept;
    int points(int axis) const;
    double length(int axis) const;
    double origin(int axis) const;
    double spacing(int axis) const;
    double min_spacing() const noexcept;
    std::size_t size() const noexcept;
    double cell_volume() const noexcept;

    /// Signed DFT wavenumbers 2*pi*m/L with m in the signed Nyquist range.
    std::span<const double> wavenumbers(int axis) const;
    /// Integer mode numbers m matching wavenumbers(axis).
    std::span<const int> mode_numbers(int axis) const;

    double coordinate(int axis, int index) const;
    /// Per-axis index of a flat index.
    int axis_index(std::size_t flat, int axis) const;
    std::size_t flat_index(int i0, int i1 = 0) const;
    /// Periodic neighbour of a flat index shifted by `step` along `axis`.
    std::size_t shifted(std::size_t flat, int axis, int step) const;

    const detail::FftPlans& plans() const;

    friend bool operator==(const Grid& a, const Grid& b) noexcept;

private:
    struct Impl;
    explicit Grid(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<const Impl> impl_;
};

}  // namespace kgh
