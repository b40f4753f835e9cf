#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include "doctest.h"

#include "kgh/circulation.hpp"
#include "kgh/kg_solver.hpp"
#include "kgh/schrodinger.hpp"
#include "test_support.hpp"

using namespace kgh;
using kgh::testing::pi;

namespace {

// 64 x 64 on [-8, 8)^2, dx = 0.25. A core at (0.125, 0.125) sits in the
// middle of cell (32, 32).
Grid box() { return Grid::create(2, {64, 64}, {16.0, 16.0}, {-8.0, -8.0}); }

constexpr double kCore = 0.125;
// On a torus the plaquette windings sum to zero, so a lone vortex needs a
// window narrow enough that the seam cells drop below the node threshold.
constexpr double kNarrow = 0.8;

ComplexField opposite_pair(const Grid& g) {
    auto a = vortex_field(g, -2.875, kCore, 2.0, +1);
    const auto b = vortex_field(g, 3.125, kCore, 2.0, -1);
    for (std::size_t n = 0; n < a.size(); ++n) a[n] *= b[n];
    return a;
}

int enclosed_sum(const WindingMap& map, int lo0, int lo1, int hi0, int hi1) {
    int sum = 0;
    for (int i = lo0; i < hi0; ++i) {
        for (int j = lo1; j < hi1; ++j) sum += map.at(i, j);
    }
    return sum;
}

}  // namespace

TEST_CASE("plane wave has no winding and zero circulation") {
    const Grid g = box();
    const PhysicalParams params;
    const std::array<double, 2> p{2.0 * pi * 3 / 16.0, -2.0 * pi * 2 / 16.0};
    const auto psi = plane_wave_state(g, params, p, Branch::matter).psi;

    const auto map = plaquette_winding(psi);
    CHECK(map.nonzero_count() == 0);
    CHECK(map.resolved());

    for (auto [lo0, lo1, hi0, hi1] : {std::array<int, 4>{0, 0, 10, 10}, {5, 20, 60, 30}, {50, 50, 70, 70}}) {
        const auto circ = contour_circulation(psi, Contour::rectangle(g, lo0, lo1, hi0, hi1), params);
        CHECK(circ.winding == 0);
        CHECK(circ.gamma == 0.0);
        CHECK(std::abs(circ.raw) < 1e-12);
    }

    const auto irr = irrotational_check(psi, params);
    CHECK(irr.applicable);
    CHECK(irr.passes);
    CHECK(irr.curl_max <= 1e-12);
}

TEST_CASE("single vortex winds once in the cell holding its core") {
    const Grid g = box();
    const auto psi = vortex_field(g, kCore, kCore, kNarrow, +1);
    const auto map = plaquette_winding(psi);
    CHECK_FALSE(map.is_determinate(0, 0));
    CHECK_FALSE(map.is_determinate(63, 10));
    CHECK(map.rows == 64);
    CHECK(map.cols == 64);
    CHECK(map.nonzero_count() == 1);
    CHECK(map.at(32, 32) == 1);
    CHECK(map.total() == 1);
    CHECK(map.resolved());

    // Direct oracle: the four corner angles of the analytic phase around the core.
    double sum = 0.0;
    const std::array<std::array<int, 2>, 5> corners{{{32, 32}, {33, 32}, {33, 33}, {32, 33}, {32, 32}}};
    for (std::size_t k = 0; k + 1 < corners.size(); ++k) {
        auto angle = [&](std::array<int, 2> c) {
            return std::atan2(g.coordinate(1, c[1]) - kCore, g.coordinate(0, c[0]) - kCore);
        };
        sum += std::remainder(angle(corners[k + 1]) - angle(corners[k]), 2.0 * pi);
    }
    CHECK(std::lround(sum / (2.0 * pi)) == 1);

    const auto anti = vortex_field(g, kCore, kCore, kNarrow, -1);
    const auto anti_map = plaquette_winding(anti);
    CHECK(anti_map.at(32, 32) == -1);
    CHECK(anti_map.nonzero_count() == 1);
}

TEST_CASE("conjugation flips every plaquette winding") {
    const Grid g = box();
    const auto psi = kgh::testing::random_band_limited(g, 7, 3);
    ComplexField conj(g);
    for (std::size_t n = 0; n < psi.size(); ++n) conj[n] = std::conj(psi[n]);
    const auto a = plaquette_winding(psi);
    const auto b = plaquette_winding(conj);
    CHECK(a.nonzero_count() > 0);
    for (std::size_t n = 0; n < a.winding.size(); ++n) {
        REQUIRE(a.determinate[n] == b.determinate[n]);
        CHECK(a.winding[n] == -b.winding[n]);
    }
}

TEST_CASE("contour around one vortex gives 2 pi hbar") {
    const Grid g = box();
    const auto psi = vortex_field(g, kCore, kCore, kNarrow, +1);
    for (double hbar : {1.0, 0.5}) {
        PhysicalParams params;
        params.hbar = hbar;
        const auto circ = contour_circulation(psi, Contour::rectangle(g, 24, 24, 40, 40), params);
        CHECK(circ.winding == 1);
        CHECK(std::abs(circ.gamma - 2.0 * pi * hbar) <= 1e-12);
        CHECK(std::abs(circ.raw - 2.0 * pi * hbar) <= 1e-12);
    }
    const PhysicalParams params;
    CHECK(contour_circulation(psi, Contour::rectangle(g, 34, 20, 44, 30), params).winding == 0);
    // Clockwise traversal reverses the sign.
    auto rect = Contour::rectangle(g, 24, 24, 40, 40).points();
    std::reverse(rect.begin(), rect.end());
    CHECK(contour_circulation(psi, Contour(g, rect), params).winding == -1);
}

TEST_CASE("opposite vortices cancel and loops add") {
    const Grid g = box();
    const PhysicalParams params;
    const auto psi = opposite_pair(g);
    const auto map = plaquette_winding(psi);
    CHECK(map.nonzero_count() == 2);
    CHECK(map.total() == 0);

    const auto both = contour_circulation(psi, Contour::rectangle(g, 10, 20, 56, 44), params);
    CHECK(both.winding == 0);
    CHECK(std::abs(both.gamma) <= 1e-12);

    const auto left = contour_circulation(psi, Contour::rectangle(g, 10, 20, 32, 44), params);
    const auto right = contour_circulation(psi, Contour::rectangle(g, 32, 20, 56, 44), params);
    CHECK(left.winding == 1);
    CHECK(right.winding == -1);
    CHECK(left.winding + right.winding == both.winding);
    // The shared edge is traversed in both directions, so raw sums add up to roundoff.
    CHECK(std::abs(left.raw + right.raw - both.raw) <= 1e-12);
}

TEST_CASE("circulation equals the enclosed plaquette windings") {
    const Grid g = box();
    const PhysicalParams params;
    const NodePolicy policy{1e-12, 0};
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> corner(0, 63);
    for (unsigned seed : {3u, 5u, 9u}) {
        const auto psi = kgh::testing::random_band_limited(g, seed, 4);
        const auto map = plaquette_winding(psi, policy);
        REQUIRE(map.resolved());
        for (int trial = 0; trial < 20; ++trial) {
            int a0 = corner(rng), b0 = corner(rng), a1 = corner(rng), b1 = corner(rng);
            if (a0 == b0 || a1 == b1) continue;
            const int lo0 = std::min(a0, b0), hi0 = std::max(a0, b0);
            const int lo1 = std::min(a1, b1), hi1 = std::max(a1, b1);
            const auto circ = contour_circulation(psi, Contour::rectangle(g, lo0, lo1, hi0, hi1), params, policy);
            CHECK(circ.winding == enclosed_sum(map, lo0, lo1, hi0, hi1));
            CHECK(std::abs(circ.raw - 2.0 * pi * static_cast<double>(circ.winding)) <= 1e-10);
        }
    }
}

TEST_CASE("nodes on lattice points are excluded") {
    const Grid g = box();
    const PhysicalParams params;
    // Core exactly on grid point (32, 32).
    const auto psi = vortex_field(g, 0.0, 0.0, kNarrow, +1);
    const auto map = plaquette_winding(psi);
    for (auto [i, j] : {std::array<int, 2>{31, 31}, {31, 32}, {32, 31}, {32, 32}}) {
        CHECK_FALSE(map.is_determinate(i, j));
    }
    CHECK(map.is_determinate(30, 30));
    CHECK(map.nonzero_count() == 0);
    CHECK_THROWS_AS(contour_circulation(psi, Contour::rectangle(g, 32, 32, 40, 40), params), std::invalid_argument);
    // The dilated mask also covers the neighbours of the node.
    CHECK_THROWS_AS(contour_circulation(psi, Contour::rectangle(g, 33, 20, 40, 40), params), std::invalid_argument);
    CHECK(contour_circulation(psi, Contour::rectangle(g, 20, 20, 40, 40), params).winding == 1);
}

TEST_CASE("contour validation") {
    const Grid g = box();
    using P = Contour::Point;
    CHECK_THROWS_AS(Contour(g, {P{0, 0}, P{1, 0}, P{1, 1}, P{0, 1}}), std::invalid_argument);
    CHECK_THROWS_AS(Contour(g, {P{0, 0}, P{2, 0}, P{2, 1}, P{0, 1}, P{0, 0}}), std::invalid_argument);
    CHECK_THROWS_AS(Contour(g, {P{0, 0}, P{1, 0}, P{1, 1}, P{1, 0}, P{0, 0}}), std::invalid_argument);
    CHECK_THROWS_AS(Contour::rectangle(g, 4, 4, 4, 8), std::invalid_argument);
    CHECK_THROWS_AS(Contour(Grid::create(1, {16}, {1.0}), {P{0, 0}, P{1, 0}, P{1, 1}, P{0, 1}, P{0, 0}}),
                    std::invalid_argument);
    // Periodic wrap: a loop crossing the box edge is legal.
    const Contour wrap = Contour::rectangle(g, 60, 60, 68, 68);
    CHECK(wrap.points()[4] == P{64 % 64, 60});
    CHECK(wrap.points().front() == wrap.points().back());
}

TEST_CASE("irrotational check on a spreading packet and a vortex") {
    const Grid g = box();
    PhysicalParams params;

    // Anisotropic, tilted Gaussian with a momentum kick, evolved freely.
    SchState state{ComplexField::sample(g,
                                        [](std::span<const double> x) {
                                            const double a = 0.8 * x[0] * x[0] + 0.5 * x[0] * x[1] + 1.3 * x[1] * x[1];
                                            return std::exp(Complex(-a / 2.0, 1.2 * x[0] - 0.7 * x[1]));
                                        }),
                   0.0};
    state = advance_schrodinger(state, params, StepControl::unchecked(0.01, 1), 100);
    const NodePolicy policy{1e-6, 1};
    const auto map = plaquette_winding(state.phi, policy);
    REQUIRE(map.nonzero_count() == 0);
    const auto spread = irrotational_check(state.phi, params, policy);
    MESSAGE("spreading packet curl max: " << spread.curl_max);
    CHECK(spread.applicable);
    CHECK(spread.curl_max <= 1e-6);
    CHECK(spread.passes);

    const auto vortex = irrotational_check(vortex_field(g, kCore, kCore, 2.0, +1), params);
    CHECK_FALSE(vortex.applicable);
    CHECK_FALSE(vortex.passes);
    CHECK(vortex.vortex_curl_max == doctest::Approx(2.0 * pi / (0.25 * 0.25)));
    CHECK(vortex.curl_max >= vortex.vortex_curl_max);

    CHECK_THROWS_AS(irrotational_check(ComplexField(Grid::create(1, {16}, {1.0})), params), std::invalid_argument);
}

TEST_CASE("winding map CSV") {
    const Grid g = Grid::create(2, {8, 8}, {8.0, 8.0}, {-4.0, -4.0});
    // Core inside cell (4, 4); a zero on grid point (0, 0) makes its four cells indeterminate.
    ComplexField psi = vortex_field(g, 0.5, 0.5, 10.0, +1);
    psi[g.flat_index(0, 0)] = 0.0;
    const auto map = plaquette_winding(psi);
    std::ostringstream out;
    write_winding_csv(map, out);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "row,col,winding");
    int lines = 0;
    int empty = 0;
    while (std::getline(in, line)) {
        ++lines;
        if (line.back() == ',') ++empty;
    }
    CHECK(lines == 64);
    CHECK(empty == 4);
    CHECK(out.str().find("\n4,4,1\n") != std::string::npos);
    CHECK(out.str().find("\n0,0,\n") != std::string::npos);
    CHECK(out.str().find("\n7,7,\n") != std::string::npos);
    CHECK(out.str().find("\n7,0,\n") != std::string::npos);
}
