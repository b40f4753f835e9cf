#include "doctest.h"

#include <cmath>

#include "kgh/hydro.hpp"
#include "kgh/kg_solver.hpp"
#include "kgh/spectral.hpp"
#include "test_support.hpp"

using namespace kgh;
using kgh::testing::pi;

namespace {

Grid ring(int n = 64) { return Grid::create(1, {n}, {2 * pi}); }

}  // namespace

TEST_CASE("plane wave decomposition") {
    const auto g = ring();
    PhysicalParams p;
    p.c = 2.0;
    for (double mom : {0.0, 1.0, 2.0}) {
        const std::vector<double> mv{mom};
        const double energy = p.energy(mv);
        const double gamma = energy / p.rest_energy();
        const auto s = init_plane_wave(g, p, mv, Branch::matter);
        const auto h = decompose(s.psi, s.pi, p);
        CHECK(h.energy_sign == EnergySign::matter);
        CHECK(h.masked_fraction() == 0.0);
        for (std::size_t n = 0; n < g.size(); ++n) {
            CHECK(h.amplitude[n] == doctest::Approx(1.0).epsilon(1e-14));
            CHECK(h.action_gradient[0][n] == doctest::Approx(mom).epsilon(1e-10).scale(1.0));
            CHECK((*h.action_rate)[n] == doctest::Approx(-energy).epsilon(1e-12));
            CHECK(h.rho[n] == doctest::Approx(gamma).epsilon(1e-8));
            CHECK(h.current[0][n] == doctest::Approx(mom / p.mass).epsilon(1e-10).scale(1.0));
            CHECK(h.vqu_nonrel[n] == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
        }
        const auto anti = init_plane_wave(g, p, mv, Branch::antimatter);
        const auto ha = decompose(anti.psi, anti.pi, p);
        CHECK(ha.energy_sign == EnergySign::antimatter);
        for (std::size_t n = 0; n < g.size(); ++n) CHECK(ha.rho[n] == doctest::Approx(-gamma).epsilon(1e-8));
    }
}

TEST_CASE("rho equals -|Psi|^2 dS/dt / mc^2 on unmasked points") {
    const auto g = Grid::create(1, {256}, {24.0}, {-12.0});
    PhysicalParams p;
    p.c = 4.0;
    const std::vector<double> x0{0.5};
    const std::vector<double> p0{1.0};
    const auto s = init_gaussian_packet(g, p, x0, 1.0, p0, Branch::matter);
    const auto h = decompose(s.psi, s.pi, p);
    const double scale = max_abs(h.rho);
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (h.node_mask[n]) continue;
        const double expected = -h.amplitude[n] * h.amplitude[n] * (*h.action_rate)[n] / p.rest_energy();
        CHECK(std::abs(h.rho[n] - expected) <= 1e-12 * scale);
    }
}

TEST_CASE("all-zero field is rejected") {
    const auto g = ring(16);
    PhysicalParams p;
    CHECK_THROWS_AS(decompose(ComplexField(g), ComplexField(g), p), std::invalid_argument);
    CHECK_THROWS_AS(decompose_schrodinger(ComplexField(g), p), std::invalid_argument);
}

TEST_CASE("node mask with dilation") {
    const auto g = ring(16);
    RealField amp(g);
    for (std::size_t n = 0; n < g.size(); ++n) amp[n] = 1.0;
    amp[5] = 0.0;
    const auto mask = node_mask(amp, NodePolicy{});
    for (std::size_t n = 0; n < g.size(); ++n) CHECK(mask[n] == ((n >= 4 && n <= 6) ? 1 : 0));
    amp[0] = 0.0;
    const auto wrapped = node_mask(amp, NodePolicy{1e-8, 2});
    CHECK(wrapped[14] == 1);
    CHECK(wrapped[2] == 1);
    CHECK(wrapped[8] == 0);
    CHECK_THROWS_AS(node_mask(amp, NodePolicy{0.0, 1}), std::invalid_argument);

    const auto g2 = Grid::create(2, {8, 8}, {1.0, 1.0});
    RealField amp2(g2);
    for (std::size_t n = 0; n < g2.size(); ++n) amp2[n] = 1.0;
    amp2[g2.flat_index(0, 0)] = 0.0;
    const auto m2 = node_mask(amp2, NodePolicy{});
    int count = 0;
    for (auto m : m2) count += m;
    CHECK(count == 9);
    CHECK(m2[g2.flat_index(7, 7)] == 1);
}

TEST_CASE("phase unwrapping") {
    const auto g = ring(64);
    const double hbar = 0.5;
    const auto psi = ComplexField::sample(g, [](auto x) { return std::exp(Complex(0.0, 3 * x[0])); });
    const auto s = unwrap_phase(wrapped_phase(psi, hbar), hbar);
    for (std::size_t n = 0; n < g.size(); ++n) {
        CHECK(s[n] / hbar == doctest::Approx(3 * g.coordinate(0, n)).epsilon(1e-12).scale(1.0));
    }

    const auto flat = ComplexField::sample(g, [](auto) { return std::exp(Complex(0.0, 1.2)); });
    const auto sf = unwrap_phase(wrapped_phase(flat, 1.0), 1.0);
    for (double v : sf.values()) CHECK(v == doctest::Approx(1.2).epsilon(1e-15));

    // 2D ramp: spine along axis 0, then rows along axis 1.
    const auto g2 = Grid::create(2, {32, 32}, {2 * pi, 2 * pi});
    const auto psi2 = ComplexField::sample(g2, [](auto x) { return std::exp(Complex(0.0, 2 * x[0] - 5 * x[1])); });
    const auto s2 = unwrap_phase(wrapped_phase(psi2, 1.0), 1.0);
    for (std::size_t n = 0; n < g2.size(); ++n) {
        const double x = g2.coordinate(0, g2.axis_index(n, 0));
        const double y = g2.coordinate(1, g2.axis_index(n, 1));
        CHECK(s2[n] == doctest::Approx(2 * x - 5 * y).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("nonrelativistic quantum potential") {
    PhysicalParams p;
    const auto g = Grid::create(1, {256}, {24.0}, {-12.0});
    const auto amp = RealField::sample(g, [](auto x) { return std::exp(-x[0] * x[0] / 4); });
    const auto mask = node_mask(amp, NodePolicy{});
    const auto vq = quantum_potential_nonrel(amp, mask, p);
    for (std::size_t n = 0; n < g.size(); ++n) {
        const double x = g.coordinate(0, n);
        if (std::abs(x) > 6.0) continue;
        CHECK(vq[n] == doctest::Approx(0.25 - x * x / 8).epsilon(1e-9).scale(1.0));
    }
    CHECK(vq[128] == doctest::Approx(0.25).epsilon(1e-10));
    CHECK(vq[128 + 2 * 256 / 24] == doctest::Approx(0.25 - std::pow(g.coordinate(0, 128 + 21), 2) / 8).epsilon(1e-9));

    const auto one = RealField::sample(g, [](auto) { return 1.0; });
    const auto zero = quantum_potential_nonrel(one, node_mask(one, {}), p);
    CHECK(max_abs(zero) == 0.0);

    // Small ripple: V = (hbar^2 k^2 / 2m) eps sin(kx) + O(eps^2).
    const auto gr = ring(64);
    const double eps = 1e-5;
    const int k = 3;
    const auto ripple = RealField::sample(gr, [&](auto x) { return 1.0 + eps * std::sin(k * x[0]); });
    const auto vr = quantum_potential_nonrel(ripple, node_mask(ripple, {}), p);
    for (std::size_t n = 0; n < gr.size(); ++n) {
        CHECK(std::abs(vr[n] - 0.5 * k * k * eps * std::sin(k * gr.coordinate(0, n))) < 10 * eps * eps * k * k);
    }

    // A node: masked points carry NaN.
    const auto noded = RealField::sample(gr, [](auto x) { return std::abs(std::sin(x[0])); });
    const auto vn = quantum_potential_nonrel(noded, node_mask(noded, {}), p);
    CHECK(std::isnan(vn[0]));
    CHECK(std::isnan(vn[1]));
}

TEST_CASE("relativistic quantum potential") {
    PhysicalParams p;
    p.c = 2.0;
    const auto g = Grid::create(1, {256}, {24.0}, {-12.0});

    // Exact plane wave snapshots.
    const std::vector<double> mv{1.0};
    const double dt = 0.01;
    const auto g0 = ring(64);
    const auto a = plane_wave_state(g0, p, mv, Branch::matter, 0.0);
    const auto b = plane_wave_state(g0, p, mv, Branch::matter, dt);
    const auto c = plane_wave_state(g0, p, mv, Branch::matter, 2 * dt);
    auto hb = decompose(b.psi, b.pi, p);
    attach_relativistic_potential(hb, decompose(a.psi, a.pi, p), decompose(c.psi, c.pi, p), dt, p);
    CHECK(max_abs(*hb.vqu_rel) <= 1e-9);

    // Static amplitude: -(hbar^2/m) lap|Psi| / |Psi|, twice the nonrelativistic value.
    const auto amp = RealField::sample(g, [](auto x) { return std::exp(-x[0] * x[0] / 4); });
    const auto mask = node_mask(amp, {});
    const auto vrel = quantum_potential_rel(amp, amp, amp, 0.1, mask, p);
    for (std::size_t n = 0; n < g.size(); ++n) {
        const double x = g.coordinate(0, n);
        if (std::abs(x) > 6.0) continue;
        CHECK(vrel[n] == doctest::Approx(2 * (0.25 - x * x / 8)).epsilon(1e-6).scale(1.0));
    }
    CHECK(vrel[128] == doctest::Approx(0.5).epsilon(1e-6));

    // |Psi| = cos(w t) f(x) at t = 0: ((-w^2/c^2) f - f'') (hbar^2/m) / f up to O(dt^2).
    const double w = 0.7;
    const double h = 1e-3;
    auto level = [&](double t) {
        return RealField::sample(g, [&](auto x) { return std::cos(w * t) * std::exp(-x[0] * x[0] / 4); });
    };
    const auto sep = quantum_potential_rel(level(-h), level(0.0), level(h), h, mask, p);
    for (std::size_t n = 0; n < g.size(); ++n) {
        const double x = g.coordinate(0, n);
        if (std::abs(x) > 6.0) continue;
        const double fpp_over_f = x * x / 4 - 0.5;
        CHECK(sep[n] == doctest::Approx(-w * w / (p.c * p.c) - fpp_over_f).epsilon(1e-6).scale(1.0));
    }
    CHECK_THROWS_AS(quantum_potential_rel(amp, amp, amp, 0.0, mask, p), std::invalid_argument);
}

TEST_CASE("velocity field") {
    const auto g = ring(32);
    PhysicalParams p;
    const std::vector<double> p1{1.0};
    const auto s = init_plane_wave(g, p, p1, Branch::matter);
    const auto v = velocity_field(decompose(s.psi, s.pi, p), p);
    for (double x : v[0].values()) CHECK(x == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));

    const std::vector<double> p0{0.0};
    const auto rest = init_plane_wave(g, p, p0, Branch::matter);
    const auto v_rest = velocity_field(decompose(rest.psi, rest.pi, p), p);
    for (double x : v_rest[0].values()) CHECK(std::abs(x) < 1e-13);

    PhysicalParams q;
    q.c = 3.0;
    q.mass = 2.0;
    const std::vector<double> p2{2.0};
    const auto s2 = init_plane_wave(g, q, p2, Branch::matter);
    const double expected = 2.0 * q.c * q.c / q.energy(p2);
    const auto v2 = velocity_field(decompose(s2.psi, s2.pi, q), q);
    for (double x : v2[0].values()) CHECK(x == doctest::Approx(expected).epsilon(1e-12));

    // Matter p=1 plus antimatter p=2: local -dS/dt takes both signs.
    const std::vector<double> p2b{2.0};
    const auto anti = init_plane_wave(g, p, p2b, Branch::antimatter);
    KgState mixed{s.psi + anti.psi * Complex(0.9), s.pi + anti.pi * Complex(0.9), 0.0};
    const auto hm = decompose(mixed.psi, mixed.pi, p);
    CHECK(hm.energy_sign == EnergySign::mixed);
    CHECK_THROWS_AS(velocity_field(hm, p), std::invalid_argument);
    CHECK_THROWS_AS(velocity_field(decompose_schrodinger(s.psi, p), p), std::invalid_argument);
}

TEST_CASE("recompose round trip") {
    PhysicalParams p;
    p.hbar = 0.7;
    const auto g = Grid::create(2, {32, 32}, {2 * pi, 2 * pi});
    const auto psi = ComplexField::sample(g, [](auto x) {
        return (2.0 + std::cos(x[0]) * std::sin(x[1])) * std::exp(Complex(0.0, 2 * x[0] + 0.4 * std::sin(x[1])));
    });
    const auto h = decompose_schrodinger(psi, p);
    const auto back = recompose(h.amplitude, h.action, p);
    for (std::size_t n = 0; n < g.size(); ++n) CHECK(std::abs(back[n] - psi[n]) <= 1e-10 * std::abs(psi[n]));

    const auto plane = recompose(RealField::sample(g, [](auto) { return 1.0; }),
                                 RealField::sample(g, [&](auto x) { return p.hbar * (x[0] - 2 * x[1]); }), p);
    for (std::size_t n = 0; n < g.size(); ++n) {
        const double x = g.coordinate(0, g.axis_index(n, 0));
        const double y = g.coordinate(1, g.axis_index(n, 1));
        CHECK(std::abs(plane[n] - std::exp(Complex(0.0, x - 2 * y))) < 1e-13);
    }

    // One node: agreement off the mask only.
    const auto g1 = ring(64);
    const auto noded = ComplexField::sample(g1, [](auto x) { return std::sin(x[0] / 2) * std::exp(Complex(0.0, x[0])); });
    const auto hn = decompose_schrodinger(noded, p);
    const auto rn = recompose(hn.amplitude, hn.action, p);
    const Complex global = rn[10] / noded[10];
    CHECK(std::abs(std::abs(global) - 1.0) < 1e-12);
    CHECK(hn.node_mask[0] == 1);
    for (std::size_t n = 0; n < g1.size(); ++n) {
        if (hn.node_mask[n]) continue;
        CHECK(std::abs(rn[n] - global * noded[n]) <= 1e-10 * std::abs(noded[n]));
    }
    RealField negative(g1);
    negative[3] = -1.0;
    CHECK_THROWS_AS(recompose(negative, RealField(g1), p), std::invalid_argument);
}

TEST_CASE("gradient of unwrapped action matches hbar Im(grad Psi / Psi)") {
    PhysicalParams p;
    p.hbar = 1.3;
    const auto g = Grid::create(2, {48, 48}, {2 * pi, 2 * pi});
    const auto psi = ComplexField::sample(g, [](auto x) {
        return (2.0 + 0.5 * std::cos(x[0] + x[1])) *
               std::exp(Complex(0.0, 3 * x[0] - x[1] + 0.5 * std::sin(x[0]) * std::cos(2 * x[1])));
    });
    const auto h = decompose_schrodinger(psi, p);
    const auto direct = action_gradient_from_psi(psi, p.hbar, h.node_mask);
    for (int axis = 0; axis < 2; ++axis) {
        const double scale = max_abs(direct[axis]);
        for (std::size_t n = 0; n < g.size(); ++n) {
            CHECK(std::abs(h.action_gradient[axis][n] - direct[axis][n]) <= 1e-8 * scale);
        }
    }

    // J = |Psi|^2 grad S / m, computed independently.
    const auto grad = gradient(psi);
    for (int axis = 0; axis < 2; ++axis) {
        for (std::size_t n = 0; n < g.size(); ++n) {
            const double from_psi = p.hbar * (std::conj(psi[n]) * grad[axis][n]).imag() / p.mass;
            const double from_hydro = h.amplitude[n] * h.amplitude[n] * h.action_gradient[axis][n] / p.mass;
            CHECK(std::abs(from_psi - from_hydro) <= 1e-10 * std::max(1.0, std::abs(from_psi)));
        }
    }
}
