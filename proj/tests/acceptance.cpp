// Acceptance harness: one PASS/FAIL line per criterion, exit status 0 only
// when every criterion passes.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "kgh/circulation.hpp"
#include "kgh/hydro.hpp"
#include "kgh/kg_solver.hpp"
#include "kgh/residual.hpp"
#include "kgh/scenario.hpp"
#include "kgh/schrodinger.hpp"
#include "kgh/snapshot_io.hpp"
#include "kgh/spectral.hpp"

using namespace kgh;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
    bool pass = true;
    std::vector<std::string> notes;

    void require(bool ok, std::string note) {
        pass = pass && ok;
        notes.push_back(std::move(note) + (ok ? "" : " [FAIL]"));
    }
};

std::string sci(double v) { return fmt::format("{:.2e}", v); }

double rel_l2(const ComplexField& a, const ComplexField& b) { return l2_norm(a - b) / l2_norm(b); }

SnapshotSeries plane_series(const Grid& g, const PhysicalParams& p, double mom, Branch b, double dt, double w0,
                            double a0, bool charged) {
    std::vector<KgState> states;
    const std::vector<double> mv{mom};
    const std::vector<double> av{a0};
    for (int k = 0; k < 3; ++k) states.push_back(plane_wave_state(g, p, mv, b, 0.3 + k * dt, w0, av));
    std::optional<EmPotential> pot;
    if (charged) pot = EmPotential::constant(w0, {a0});
    return SnapshotSeries::from_kg(states, p, pot);
}

Grid packet_grid() { return Grid::create(1, {256}, {22.0}, {-11.0}); }

// sigma = 1 packet with p0 = 1, three snapshots centred on t_mid.
SnapshotSeries evolved_packet(double dt_snap, double t_mid, const PhysicalParams& p, const EmPotential* pot = nullptr) {
    const auto g = packet_grid();
    const std::vector<double> x0{0.0};
    const std::vector<double> p0{1.0};
    const auto s0 = init_gaussian_packet(g, p, x0, 1.0, p0, Branch::matter, pot);
    const auto ctl = StepControl::make(dt_snap / 4, 4, 0.5, g, p);
    const auto start = advance_kg(s0, p, ctl, std::lround((t_mid - dt_snap) / ctl.dt), pot);
    std::optional<EmPotential> opt;
    if (pot) opt = *pot;
    return SnapshotSeries::from_kg(evolve_kg(start, p, ctl, 2, pot), p, opt);
}

// Free (or constant-potential) Schrodinger Gaussian, spread until t_mid with
// dt 0.01, then three snapshots dt_snap apart centred on t_mid.
SnapshotSeries schrodinger_series(double dt_snap, double t_mid, const PhysicalParams& p,
                                  const EmPotential* pot = nullptr, double length = 22.0,
                                  NodePolicy policy = {1e-5, 1}) {
    const auto g = Grid::create(1, {256}, {length}, {-length / 2});
    SchState s{ComplexField::sample(g, [](auto x) { return Complex(std::exp(-x[0] * x[0] / 4)); }), 0.0};
    s = advance_schrodinger(s, p, StepControl{0.01, 1, 0.5}, std::lround((t_mid - 0.01) / 0.01), nullptr, pot);
    s = advance_schrodinger(s, p, StepControl{0.01 - dt_snap, 1, 0.5}, 1, nullptr, pot);
    std::optional<EmPotential> opt;
    if (pot) opt = *pot;
    return SnapshotSeries::from_schrodinger(evolve_schrodinger(s, p, StepControl{dt_snap, 1, 0.5}, 2, nullptr, pot), p,
                                            std::nullopt, opt, policy);
}

Outcome manufactured_plane_waves() {
    Outcome out;
    const auto g = Grid::create(1, {256}, {2 * pi});
    double free_max = 0.0;
    for (double c : {1.0, 3.0}) {
        PhysicalParams p;
        p.c = c;
        for (double mom : {0.0, 1.0, 2.0, -3.0}) {
            for (auto b : {Branch::matter, Branch::antimatter}) {
                const auto s = plane_series(g, p, mom, b, 0.01, 0.0, 0.0, false);
                free_max = std::max({free_max, residual_continuity_free(s).max_abs, residual_action_free(s).max_abs});
            }
        }
    }
    double charged_max = 0.0;
    PhysicalParams p;
    p.charge = 0.6;
    for (double w0 : {0.8, -1.5}) {
        for (double a0 : {0.0, 0.4}) {
            for (auto b : {Branch::matter, Branch::antimatter}) {
                const auto s = plane_series(g, p, 2.0, b, 0.01, w0, a0, true);
                charged_max =
                    std::max({charged_max, residual_continuity_charged(s).max_abs, residual_action_charged(s).max_abs});
            }
        }
    }
    out.require(free_max <= 1e-9, "free max " + sci(free_max));
    out.require(charged_max <= 1e-9, "charged max " + sci(charged_max));
    return out;
}

Outcome dispersion() {
    Outcome out;
    const auto g = Grid::create(1, {32}, {2 * pi});
    PhysicalParams p;
    const auto ctl = StepControl::make(1e-3, 1, 0.5, g, p);
    const long steps = 2000;
    double worst = 0.0;
    bool signs = true;
    for (double mom : {0.0, 1.0, 2.0}) {
        const double energy = std::sqrt(p.mass * p.mass * std::pow(p.c, 4) + mom * mom * p.c * p.c);
        for (auto b : {Branch::matter, Branch::antimatter}) {
            const std::vector<double> mv{mom};
            auto state = init_plane_wave(g, p, mv, b);
            // Unwrapped phase rotation at one probe point.
            double total = 0.0;
            for (long s = 0; s < steps; ++s) {
                const Complex before = state.psi[3];
                state = kg_step_free(state, p, ctl);
                total += std::arg(state.psi[3] * std::conj(before));
            }
            const double omega = -total / (steps * ctl.dt) / p.hbar;
            const double expected = branch_sign(b) * energy / p.hbar;
            worst = std::max(worst, std::abs(omega - expected) / energy);
            signs = signs && (omega > 0) == (b == Branch::matter);
        }
    }
    out.require(worst <= 1e-6, "max relative frequency error " + sci(worst));
    out.require(signs, signs ? "antimatter rotates backwards" : "branch sign wrong");
    return out;
}

Outcome relativistic_quantum_potential() {
    Outcome out;
    const auto g = Grid::create(1, {256}, {2 * pi});
    double plane_max = 0.0;
    for (double c : {1.0, 2.0}) {
        PhysicalParams p;
        p.c = c;
        for (double mom : {0.0, 1.0, 2.0}) {
            const std::vector<double> mv{mom};
            std::vector<HydroState> h;
            for (int k = 0; k < 3; ++k) {
                const auto s = plane_wave_state(g, p, mv, Branch::matter, 0.01 * k);
                h.push_back(decompose(s.psi, s.pi, p));
            }
            attach_relativistic_potential(h[1], h[0], h[2], 0.01, p);
            plane_max = std::max(plane_max, max_abs(*h[1].vqu_rel));
        }
    }
    out.require(plane_max <= 1e-9, "plane-wave max " + sci(plane_max));

    // Static sigma = 1 Gaussian amplitude: the d'Alembertian reduces to -lap, so
    // V_rel = -(hbar^2/m) f''/f = (hbar^2/m) (1/(2 sigma^2) - x^2/(4 sigma^4)).
    PhysicalParams p;
    p.hbar = 0.8;
    p.mass = 1.3;
    const auto gg = Grid::create(1, {256}, {24.0}, {-12.0});
    const auto amp = RealField::sample(gg, [](auto x) { return std::exp(-x[0] * x[0] / 4); });
    const auto mask = node_mask(amp, {});
    const auto vrel = quantum_potential_rel(amp, amp, amp, 0.05, mask, p);
    const auto vnr = quantum_potential_nonrel(amp, mask, p);
    const double k = p.hbar * p.hbar / p.mass;
    double err = 0.0;
    double err_nr = 0.0;
    for (std::size_t n = 0; n < gg.size(); ++n) {
        const double x = gg.coordinate(0, static_cast<int>(n));
        if (std::abs(x) > 6.0) continue;
        const double oracle = k * (0.5 - x * x / 4);
        err = std::max(err, std::abs(vrel[n] - oracle));
        err_nr = std::max(err_nr, std::abs(vnr[n] - 0.5 * oracle));
    }
    const double v0 = vrel[gg.size() / 2];
    out.require(err <= 1e-6, "gaussian oracle max diff " + sci(err));
    out.require(err_nr <= 1e-6, "nonrel oracle max diff " + sci(err_nr));
    out.require(std::abs(v0 - 0.5 * k) <= 1e-6, fmt::format("V(0) = {:.9f}", v0));
    return out;
}

Outcome convergence_orders() {
    Outcome out;
    auto check_table = [&](const std::vector<ConvergenceRow>& table, const std::string& label) {
        for (const auto& row : table) {
            const bool ok = row.observed_order && std::abs(*row.observed_order - 2.0) <= 0.4 && !row.unstable;
            out.require(ok, fmt::format("{} {} order {}", label, to_string(row.equation_id),
                                        row.observed_order ? fmt::format("{:.3f}", *row.observed_order) : "n/a"));
        }
    };
    PhysicalParams p;
    p.c = 4.0;
    check_table(convergence_study(
                    [&](int level) {
                        const auto s = evolved_packet(0.02 / std::pow(2.0, level), 1.0, p);
                        return std::vector<ResidualReport>{residual_continuity_free(s), residual_action_free(s)};
                    },
                    3),
                "kg");

    PhysicalParams q = p;
    q.charge = 0.3;
    const auto pot = EmPotential::constant(0.5, {0.2});
    check_table(convergence_study(
                    [&](int level) {
                        const auto s = evolved_packet(0.02 / std::pow(2.0, level), 1.0, q, &pot);
                        return std::vector<ResidualReport>{residual_continuity_charged(s),
                                                           residual_action_charged(s)};
                    },
                    3),
                "charged");

    const PhysicalParams unit;
    check_table(convergence_study(
                    [&](int level) {
                        const auto s = schrodinger_series(0.004 / std::pow(2.0, level), 2.0, unit);
                        return std::vector<ResidualReport>{residual_madelung_continuity(s),
                                                           residual_madelung_action(s)};
                    },
                    3),
                "schrodinger");

    // Band-limited analytic data refined in dx stays at the roundoff floor.
    const auto spatial = convergence_study(
        [&](int level) {
            const auto g = Grid::create(1, {32 << level}, {2 * pi});
            const auto s = plane_series(g, unit, 2.0, Branch::matter, 0.01, 0.0, 0.0, false);
            return std::vector<ResidualReport>{residual_continuity_free(s), residual_action_free(s)};
        },
        3);
    double floor = 0.0;
    bool limited = true;
    for (const auto& row : spatial) {
        limited = limited && row.floor_limited;
        for (const auto& lv : row.levels) floor = std::max(floor, lv.report ? lv.report->max_abs : 1.0);
    }
    out.require(limited && floor <= 1e-10, "spatial refinement at floor " + sci(floor));
    return out;
}

Outcome classical_limit() {
    Outcome out;
    const auto g = packet_grid();
    const std::vector<double> cs{5.0, 10.0, 20.0};
    const std::vector<double> x0{0.0};
    const std::vector<double> p0{1.0};
    const double time = 1.0;
    std::vector<KgState> kg;
    std::vector<SchState> sch;
    PhysicalParams base;
    for (double c : cs) {
        PhysicalParams p = base;
        p.c = c;
        const auto s0 = init_gaussian_packet(g, p, x0, 1.0, p0, Branch::matter);
        const double bound = std::min(StepControl::cfl_limit(g, p, 0.5), 0.02 / p.rest_frequency());
        const long steps = std::lround(std::ceil(time / bound));
        kg.push_back(advance_kg(s0, p, StepControl::make(time / steps, 1, 0.5, g, p), steps));
        sch.push_back(advance_schrodinger(SchState{s0.psi, 0.0}, p, StepControl{time / 100, 1, 0.5}, 100));
    }
    const auto report = classical_limit_compare(cs, kg, sch, Branch::matter, base);
    std::string errs;
    for (const auto& pt : report.points) errs += fmt::format(" {:.3e}", pt.l2_error);
    out.require(report.monotone, "l2 errors" + errs);
    out.require(std::abs(report.slope + 2.0) <= 0.3, fmt::format("slope {:.3f}", report.slope));

    const auto s = schrodinger_series(5e-4, 2.0, PhysicalParams{});
    const auto act = residual_madelung_action(s);
    const auto cont = residual_madelung_continuity(s);
    out.require(act.valid() && act.max_abs <= 1e-6,
                fmt::format("madelung action {} (masked {:.3f})", sci(act.max_abs), act.masked_fraction));
    out.require(cont.max_abs <= 1e-6, "madelung continuity " + sci(cont.max_abs));
    return out;
}

Outcome charged_classical_limit() {
    Outcome out;
    PhysicalParams p;
    p.charge = 0.5;
    const auto pot = EmPotential::constant(0.7, {0.3});
    // Rephasing roundoff reaches every point through the spectral Laplacian and
    // is divided by |phi| at the mask edge, so the node threshold sits at 1e-4
    // on a box narrow enough to keep the masked fraction under 0.2.
    const auto series = schrodinger_series(5e-4, 2.0, p, &pot, 20.0, NodePolicy{1e-4, 1});
    const auto a = residual_madelung_action(series);
    const auto c = residual_madelung_continuity(series);
    out.require(a.valid() && a.max_abs <= 1e-6,
                fmt::format("charged madelung action {} (masked {:.3f})", sci(a.max_abs), a.masked_fraction));
    out.require(c.max_abs <= 1e-6, "charged madelung continuity " + sci(c.max_abs));

    PhysicalParams q;
    q.c = 4.0;
    q.charge = 0.7;
    const auto kpot = EmPotential::constant(0.5, {0.2});
    // Late enough that the packet has spread and nothing is masked.
    const auto kg = evolved_packet(0.01, 4.0, q, &kpot);
    auto norms = [](const SnapshotSeries& s, bool relativistic) {
        if (relativistic) return std::vector<ResidualReport>{residual_continuity_charged(s), residual_action_charged(s)};
        return std::vector<ResidualReport>{residual_madelung_continuity(s), residual_madelung_action(s)};
    };
    double worst = 0.0;
    for (bool relativistic : {true, false}) {
        const auto& s = relativistic ? kg : series;
        const auto ref = norms(s, relativistic);
        for (double k : {0.3, -2.0, 5.0}) {
            const auto shifted = norms(gauge_shift(s, k), relativistic);
            for (std::size_t i = 0; i < ref.size(); ++i) {
                worst = std::max({worst, std::abs(shifted[i].max_abs - ref[i].max_abs),
                                  std::abs(shifted[i].rms - ref[i].rms)});
            }
        }
    }
    out.require(worst <= 1e-9, "gauge shift max norm change " + sci(worst));
    return out;
}

Outcome circulation() {
    Outcome out;
    // 128 x 128 on [-16, 16)^2, dx = 0.25.
    const auto g = Grid::create(2, {128, 128}, {32.0, 32.0}, {-16.0, -16.0});
    PhysicalParams params;
    params.hbar = 0.7;

    const std::array<double, 2> mom{2 * pi * params.hbar * 3 / 32.0, -2 * pi * params.hbar * 2 / 32.0};
    const auto plane = plane_wave_state(g, params, mom, Branch::matter).psi;
    bool plane_zero = plaquette_winding(plane).nonzero_count() == 0;
    for (auto [a, b, c, d] : {std::array<int, 4>{0, 0, 20, 20}, {10, 40, 120, 90}, {100, 100, 140, 140}}) {
        plane_zero = plane_zero && contour_circulation(plane, Contour::rectangle(g, a, b, c, d), params).gamma == 0.0;
    }
    out.require(plane_zero, "plane wave gamma 0");

    // A lone vortex on the torus needs a narrow window so the seam cells are nodes.
    const auto single = vortex_field(g, 0.125, 0.125, 0.8, +1);
    const auto map = plaquette_winding(single);
    const auto circ = contour_circulation(single, Contour::rectangle(g, 48, 48, 80, 80), params);
    out.require(map.nonzero_count() == 1 && map.at(64, 64) == 1 && circ.winding == 1 &&
                    circ.gamma == 2 * pi * params.hbar,
                fmt::format("single vortex winding {} gamma/(2 pi hbar) {:.17g}", circ.winding,
                            circ.gamma / (2 * pi * params.hbar)));

    auto pair = vortex_field(g, -2.875, 0.125, 2.0, +1);
    const auto other = vortex_field(g, 3.125, 0.125, 2.0, -1);
    for (std::size_t n = 0; n < pair.size(); ++n) pair[n] *= other[n];
    const auto both = contour_circulation(pair, Contour::rectangle(g, 40, 52, 88, 76), params);
    const auto left = contour_circulation(pair, Contour::rectangle(g, 40, 52, 64, 76), params);
    out.require(both.winding == 0 && both.gamma == 0.0 && left.winding == 1,
                fmt::format("opposite pair gamma {} (left loop {})", both.gamma, left.winding));

    SchState packet{ComplexField::sample(g,
                                         [](std::span<const double> x) {
                                             const double a = 0.8 * x[0] * x[0] + 0.5 * x[0] * x[1] + 1.3 * x[1] * x[1];
                                             return std::exp(Complex(-a / 2.0, 1.2 * x[0] - 0.7 * x[1]));
                                         }),
                    0.0};
    packet = advance_schrodinger(packet, params, StepControl::unchecked(0.01, 1), 100);
    const NodePolicy policy{1e-6, 1};
    const auto irr = irrotational_check(packet.phi, params, policy);
    const auto irr_plane = irrotational_check(plane, params);
    out.require(irr.applicable && irr.curl_max <= 1e-6 && irr_plane.curl_max <= 1e-6,
                fmt::format("curl max {} packet, {} plane", sci(irr.curl_max), sci(irr_plane.curl_max)));
    return out;
}

Outcome norm_and_reversibility() {
    Outcome out;
    const auto g = Grid::create(1, {128}, {30.0}, {-15.0});
    PhysicalParams p;
    const std::vector<double> x0{0.0};
    const std::vector<double> p0{1.0};
    const auto s0 = init_gaussian_packet(g, p, x0, 1.0, p0, Branch::matter);
    const auto ctl = StepControl::make(0.01, 1, 0.5, g, p);
    const double q0 = volume_integral(kg_density(s0.psi, s0.pi, p));
    const auto there = advance_kg(s0, p, ctl, 1000);
    const double q1 = volume_integral(kg_density(there.psi, there.pi, p));
    out.require(std::abs(q1 - q0) <= 1e-8 * std::abs(q0), "charge drift " + sci(std::abs(q1 - q0)));
    const auto back = advance_kg(there, p, StepControl::unchecked(-0.01, 1), 1000);
    const double err = rel_l2(back.psi, s0.psi);
    out.require(err <= 1e-8, "round trip relative l2 " + sci(err));
    return out;
}

Outcome determinism_and_round_trip() {
    Outcome out;
    const auto root = fs::temp_directory_path() / "kgh_acceptance";
    fs::remove_all(root);
    const auto config = parse_config(json::parse(R"({
        "scenario": "free_kg",
        "grid": {"points": [256], "lengths": [22.0], "origin": [-11.0]},
        "physics": {"c": 4.0},
        "initial": {"kind": "gaussian", "sigma": 1.0, "momentum": [1.0]},
        "steps": {"dt": 0.005, "steps_per_snapshot": 4, "snapshots": 4}
    })"));
    const auto ma = run_scenario(config, root / "a");
    const auto mb = run_scenario(config, root / "b");
    out.require(ma.status == "ok" && mb.status == "ok", "runs " + ma.status);

    int files = 0;
    int differing = 0;
    for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
        if (!entry.is_regular_file()) continue;
        const auto rel = fs::relative(entry.path(), root / "a");
        if (rel == "manifest.json") {
            // Wall-clock stamps are the only run-dependent fields.
            auto ja = json::parse(read_text(root / "a" / rel));
            auto jb = json::parse(read_text(root / "b" / rel));
            for (auto* j : {&ja, &jb}) {
                j->erase("start_time");
                j->erase("end_time");
            }
            differing += ja != jb;
        } else {
            differing += read_text(root / "a" / rel) != read_text(root / "b" / rel);
        }
        ++files;
    }
    out.require(files > 0 && differing == 0, fmt::format("{} files, {} differ", files, differing));

    // Re-imported snapshots match an independent in-memory evolution bit for bit.
    const auto g = config.grid.build();
    const std::vector<double> x0{0.0};
    const auto s0 = init_gaussian_packet(g, config.physics, x0, 1.0, config.initial.momentum, Branch::matter);
    const auto states =
        evolve_kg(s0, config.physics, StepControl::make(0.005, 4, 0.5, g, config.physics), config.steps.snapshots);
    std::size_t mismatched = 0;
    double recompose_err = 0.0;
    for (std::size_t k = 0; k < states.size(); ++k) {
        const auto back = import_snapshot(root / "a" / fmt::format("snapshots/snapshot_{:04d}", k));
        for (std::size_t n = 0; n < g.size(); ++n) mismatched += back.psi[n] != states[k].psi[n];
        recompose_err = std::max(recompose_err, max_abs(recompose(back.amplitude, back.action, config.physics) -
                                                        states[k].psi));
    }
    out.require(mismatched == 0, fmt::format("{} snapshots re-imported, {} values differ", states.size(), mismatched));
    out.require(recompose_err <= 1e-14, "amp/action recompose max diff " + sci(recompose_err));
    fs::remove_all(root);
    return out;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"manufactured plane-wave residuals", manufactured_plane_waves},
        {"dispersion on both branches", dispersion},
        {"relativistic quantum potential", relativistic_quantum_potential},
        {"second-order time convergence", convergence_orders},
        {"classical limit", classical_limit},
        {"charged classical limit and gauge invariance", charged_classical_limit},
        {"circulation quantization", circulation},
        {"charge conservation and reversibility", norm_and_reversibility},
        {"determinism and CSV round trip", determinism_and_round_trip},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.require(false, std::string("threw: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::string detail;
        for (const auto& n : o.notes) detail += (detail.empty() ? "" : "; ") + n;
        std::cout << fmt::format("criterion {}: {} {} ({:.1f} s): {}\n", i + 1, o.pass ? "PASS" : "FAIL",
                                 criteria[i].first, secs, detail)
                  << std::flush;
        failures += !o.pass;
    }
    std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
