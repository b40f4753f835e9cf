#include "kgh/circulation.hpp"

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <ostream>
#include <set>
#include <stdexcept>

#include "kgh/spectral.hpp"

namespace kgh {

namespace {

double wrapped_difference(Complex from, Complex to) { return std::arg(to * std::conj(from)); }

void require_2d(const Grid& grid, const char* what) {
    if (grid.dims() != 2) throw std::invalid_argument(std::string(what) + " needs a 2D grid");
}

RealField amplitude_of(const ComplexField& f) {
    RealField out(f.grid());
    for (std::size_t n = 0; n < f.size(); ++n) out[n] = std::abs(f[n]);
    return out;
}

}  // namespace

Contour::Contour(const Grid& grid, std::vector<Point> points) : points_(std::move(points)) {
    require_2d(grid, "contour");
    if (points_.size() < 5) throw std::invalid_argument("contour needs at least four edges");
    if (points_.front() != points_.back()) throw std::invalid_argument("contour must be closed");
    const int n0 = grid.points(0);
    const int n1 = grid.points(1);
    std::set<Point> seen;
    for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
        auto& p = points_[i];
        p = {((p[0] % n0) + n0) % n0, ((p[1] % n1) + n1) % n1};
        if (!seen.insert(p).second) throw std::invalid_argument("contour repeats an interior point");
    }
    points_.back() = points_.front();
    for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
        const auto& a = points_[i];
        const auto& b = points_[i + 1];
        const int d0 = std::min(std::abs(a[0] - b[0]), n0 - std::abs(a[0] - b[0]));
        const int d1 = std::min(std::abs(a[1] - b[1]), n1 - std::abs(a[1] - b[1]));
        if (d0 + d1 != 1) throw std::invalid_argument("contour points must be nearest neighbours");
    }
}

Contour Contour::rectangle(const Grid& grid, int lo0, int lo1, int hi0, int hi1) {
    if (hi0 <= lo0 || hi1 <= lo1) throw std::invalid_argument("rectangle contour needs lo < hi on both axes");
    std::vector<Point> pts;
    for (int i = lo0; i < hi0; ++i) pts.push_back({i, lo1});
    for (int j = lo1; j < hi1; ++j) pts.push_back({hi0, j});
    for (int i = hi0; i > lo0; --i) pts.push_back({i, hi1});
    for (int j = hi1; j > lo1; --j) pts.push_back({lo0, j});
    pts.push_back({lo0, lo1});
    return Contour(grid, std::move(pts));
}

int WindingMap::total() const {
    int sum = 0;
    for (std::size_t n = 0; n < winding.size(); ++n) {
        if (determinate[n]) sum += winding[n];
    }
    return sum;
}

int WindingMap::nonzero_count() const {
    int count = 0;
    for (std::size_t n = 0; n < winding.size(); ++n) {
        if (determinate[n] && winding[n] != 0) ++count;
    }
    return count;
}

bool WindingMap::resolved() const {
    for (std::size_t n = 0; n < winding.size(); ++n) {
        if (determinate[n] && std::abs(winding[n]) > 1) return false;
    }
    return true;
}

WindingMap plaquette_winding(const ComplexField& psi, const NodePolicy& policy) {
    const Grid& grid = psi.grid();
    require_2d(grid, "plaquette winding");
    policy.validate();
    const double threshold = policy.epsilon_rel * max_abs(psi);

    WindingMap map;
    map.rows = grid.points(0);
    map.cols = grid.points(1);
    map.winding.assign(grid.size(), 0);
    map.determinate.assign(grid.size(), 0);
    for (int i = 0; i < map.rows; ++i) {
        for (int j = 0; j < map.cols; ++j) {
            const std::size_t a = grid.flat_index(i, j);
            const std::size_t b = grid.shifted(a, 0, 1);
            const std::size_t c = grid.shifted(b, 1, 1);
            const std::size_t d = grid.shifted(a, 1, 1);
            const std::size_t cell = static_cast<std::size_t>(i * map.cols + j);
            if (std::abs(psi[a]) < threshold || std::abs(psi[b]) < threshold || std::abs(psi[c]) < threshold ||
                std::abs(psi[d]) < threshold) {
                continue;
            }
            const double sum = wrapped_difference(psi[a], psi[b]) + wrapped_difference(psi[b], psi[c]) +
                               wrapped_difference(psi[c], psi[d]) + wrapped_difference(psi[d], psi[a]);
            map.winding[cell] = static_cast<int>(std::lround(sum / (2.0 * std::numbers::pi)));
            map.determinate[cell] = 1;
        }
    }
    return map;
}

void write_winding_csv(const WindingMap& map, std::ostream& out) {
    out << "row,col,winding\n";
    for (int i = 0; i < map.rows; ++i) {
        for (int j = 0; j < map.cols; ++j) {
            out << i << ',' << j << ',';
            if (map.is_determinate(i, j)) out << map.at(i, j);
            out << '\n';
        }
    }
}

Circulation contour_circulation(const ComplexField& psi, const Contour& contour, const PhysicalParams& params,
                                const NodePolicy& policy) {
    const Grid& grid = psi.grid();
    require_2d(grid, "contour circulation");
    const auto mask = node_mask(amplitude_of(psi), policy);
    const auto& pts = contour.points();
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const auto a = grid.flat_index(pts[i][0], pts[i][1]);
        const auto b = grid.flat_index(pts[i + 1][0], pts[i + 1][1]);
        if (mask[a] || mask[b]) throw std::invalid_argument("contour touches a masked (node) point");
        sum += wrapped_difference(psi[a], psi[b]);
    }
    Circulation out;
    out.winding = std::lround(sum / (2.0 * std::numbers::pi));
    out.gamma = 2.0 * std::numbers::pi * params.hbar * static_cast<double>(out.winding);
    out.raw = params.hbar * sum;
    return out;
}

IrrotationalReport irrotational_check(const ComplexField& psi, const PhysicalParams& params,
                                      const NodePolicy& policy, double tolerance) {
    const Grid& grid = psi.grid();
    require_2d(grid, "irrotational check");
    const auto mask = node_mask(amplitude_of(psi), policy);

    // v_i = (hbar/m) Im(d_i Psi / Psi), so
    // d_j v_i = (hbar/m) Im(d_j d_i Psi / Psi - d_i Psi d_j Psi / Psi^2).
    // The mixed second derivatives are taken in both orders.
    const auto dx = partial(psi, 0);
    const auto dy = partial(psi, 1);
    const auto dxdy = partial(dy, 0);
    const auto dydx = partial(dx, 1);
    const double scale = params.hbar / params.mass;

    IrrotationalReport report;
    report.tolerance = tolerance;
    for (std::size_t n = 0; n < psi.size(); ++n) {
        if (mask[n]) continue;
        const Complex p = psi[n];
        const Complex cross = dx[n] * dy[n] / (p * p);
        const double dvy_dx = (dxdy[n] / p - cross).imag();
        const double dvx_dy = (dydx[n] / p - cross).imag();
        report.smooth_curl_max = std::max(report.smooth_curl_max, std::abs(scale * (dvy_dx - dvx_dy)));
    }

    const auto windings = plaquette_winding(psi, policy);
    const double quantum = 2.0 * std::numbers::pi * params.hbar / (params.mass * grid.cell_volume());
    for (std::size_t n = 0; n < windings.winding.size(); ++n) {
        if (windings.determinate[n] && windings.winding[n] != 0) {
            report.vortex_curl_max = std::max(report.vortex_curl_max, std::abs(windings.winding[n]) * quantum);
            report.applicable = false;
        }
    }
    report.curl_max = std::max(report.smooth_curl_max, report.vortex_curl_max);
    report.passes = report.applicable && report.curl_max <= tolerance;
    return report;
}

ComplexField vortex_field(const Grid& grid, double x0, double y0, double window, int charge) {
    require_2d(grid, "vortex field");
    if (charge != 1 && charge != -1) throw std::invalid_argument("vortex charge must be +1 or -1");
    return ComplexField::sample(grid, [&](std::span<const double> x) {
        const double dx = x[0] - x0;
        const double dy = x[1] - y0;
        return Complex(dx, charge * dy) * std::exp(-(dx * dx + dy * dy) / (4.0 * window * window));
    });
}

}  // namespace kgh
