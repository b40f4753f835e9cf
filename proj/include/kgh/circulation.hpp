#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "kgh/field.hpp"
#include "kgh/hydro.hpp"
#include "kgh/physics.hpp"

namespace kgh {

/// Closed loop of lattice points (i0, i1); consecutive points are periodic
/// nearest neighbours and the last point repeats the first.
class Contour {
public:
    using Point = std::array<int, 2>;

    Contour(const Grid& grid, std::vector<Point> points);

    /// Counter-clockwise rectangle with corners (lo0, lo1) and (hi0, hi1).
    static Contour rectangle(const Grid& grid, int lo0, int lo1, int hi0, int hi1);

    const std::vector<Point>& points() const noexcept { return points_; }

private:
    std::vector<Point> points_;
};

/// Integer winding of the wrapped phase around every plaquette of a 2D grid.
/// Cell (i, j) has corners (i, j), (i+1, j), (i+1, j+1), (i, j+1) taken
/// counter-clockwise, wrapping periodically. Cells with a corner below the
/// node threshold are indeterminate.
struct WindingMap {
    int rows = 0;
    int cols = 0;
    std::vector<int> winding;
    std::vector<std::uint8_t> determinate;

    int at(int i, int j) const { return winding[static_cast<std::size_t>(i * cols + j)]; }
    bool is_determinate(int i, int j) const { return determinate[static_cast<std::size_t>(i * cols + j)] != 0; }
    int total() const;
    int nonzero_count() const;
    /// |entry| > 1 marks an under-resolved phase.
    bool resolved() const;
};

WindingMap plaquette_winding(const ComplexField& psi, const NodePolicy& policy = {});

/// Writes "row,col,winding"; indeterminate cells leave the winding empty.
void write_winding_csv(const WindingMap& map, std::ostream& out);

struct Circulation {
    /// Sum of wrapped phase differences / 2 pi, rounded.
    long winding = 0;
    /// 2 pi hbar * winding.
    double gamma = 0.0;
    /// Unrounded hbar * sum of wrapped differences.
    double raw = 0.0;
};

/// Circulation from wrapped phase differences along the contour. Throws when
/// the contour touches a masked point.
Circulation contour_circulation(const ComplexField& psi, const Contour& contour, const PhysicalParams& params,
                                const NodePolicy& policy = {});

struct IrrotationalReport {
    /// max |curl(grad S / m)| over unmasked points from the smooth part.
    double smooth_curl_max = 0.0;
    /// max |2 pi hbar n / (m dx dy)| over plaquettes with winding n != 0.
    double vortex_curl_max = 0.0;
    double curl_max = 0.0;
    /// False when the winding map has vortices; the assertion then does not apply.
    bool applicable = true;
    bool passes = false;
    double tolerance = 1e-6;
};

/// Curl of the canonical velocity grad S / m on a 2D grid.
IrrotationalReport irrotational_check(const ComplexField& psi, const PhysicalParams& params,
                                      const NodePolicy& policy = {}, double tolerance = 1e-6);

/// ((x - x0) + i s (y - y0)) exp(-r^2 / (4 w^2)): a single vortex of charge s = +-1.
ComplexField vortex_field(const Grid& grid, double x0, double y0, double window, int charge);

}  // namespace kgh
