#include "kgh/kg_solver.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "kgh/spectral.hpp"

namespace kgh {

namespace {

constexpr double kGrowthLimit = 1e3;

// Right-hand side of dPi/dt for the free equation:
// c^2 lap Psi - (m c^2 / hbar)^2 Psi.
ComplexField free_acceleration(const ComplexField& psi, const PhysicalParams& p) {
    auto acc = laplacian(psi);
    const double c2 = p.c * p.c;
    const double w2 = p.rest_frequency() * p.rest_frequency();
    for (std::size_t n = 0; n < acc.size(); ++n) acc[n] = c2 * acc[n] - w2 * psi[n];
    return acc;
}

// Charged right-hand side with D_t = d_t + i(e/hbar)W, D = grad - i(e/hbar)A:
//   Pi_t = c^2 [lap Psi - i eps (div A) Psi - 2 i eps A.grad Psi - eps^2 |A|^2 Psi]
//          - (m c^2/hbar)^2 Psi
//          + [-2 i eps W Pi - i eps W_t Psi + eps^2 W^2 Psi]
// with eps = e/hbar. With e = 0 every gauge term is an exact zero, so the
// result is bit-identical to free_acceleration.
ComplexField charged_acceleration(const ComplexField& psi, const ComplexField& pi, double t,
                                  const PhysicalParams& p, const EmPotential& pot) {
    const Grid& grid = psi.grid();
    const double eps = p.charge / p.hbar;
    const Complex i_eps(0.0, eps);
    const double c2 = p.c * p.c;
    const double w2 = p.rest_frequency() * p.rest_frequency();

    const auto W = pot.sample_scalar(grid, t);
    const auto Wt = pot.scalar_time_derivative(grid, t);
    const auto A = pot.sample_vector(grid, t);
    const auto divA = pot.vector_divergence(grid, t);
    const auto grad_psi = gradient(psi);
    auto acc = laplacian(psi);

    for (std::size_t n = 0; n < acc.size(); ++n) {
        Complex a_dot_grad{};
        double a2 = 0.0;
        for (std::size_t ax = 0; ax < A.size(); ++ax) {
            a_dot_grad += A[ax][n] * grad_psi[ax][n];
            a2 += A[ax][n] * A[ax][n];
        }
        const Complex gauged_lap = acc[n] - i_eps * divA[n] * psi[n] - 2.0 * i_eps * a_dot_grad -
                                   eps * eps * a2 * psi[n];
        const Complex time_terms =
            -2.0 * i_eps * W[n] * pi[n] - i_eps * Wt[n] * psi[n] + eps * eps * W[n] * W[n] * psi[n];
        acc[n] = c2 * gauged_lap - w2 * psi[n] + time_terms;
    }
    return acc;
}

template <class Accel>
KgState rk4_step(const KgState& s, double dt, Accel&& accel) {
    const double t = s.time;
    const double half = 0.5 * dt;

    auto axpy = [](const ComplexField& base, const ComplexField& dir, double h) {
        ComplexField out(base.grid());
        for (std::size_t n = 0; n < base.size(); ++n) out[n] = base[n] + h * dir[n];
        return out;
    };

    const ComplexField& k1x = s.pi;
    const ComplexField k1v = accel(s.psi, s.pi, t);

    const ComplexField x2 = axpy(s.psi, k1x, half);
    const ComplexField k2x = axpy(s.pi, k1v, half);
    const ComplexField k2v = accel(x2, k2x, t + half);

    const ComplexField x3 = axpy(s.psi, k2x, half);
    const ComplexField k3x = axpy(s.pi, k2v, half);
    const ComplexField k3v = accel(x3, k3x, t + half);

    const ComplexField x4 = axpy(s.psi, k3x, dt);
    const ComplexField k4x = axpy(s.pi, k3v, dt);
    const ComplexField k4v = accel(x4, k4x, t + dt);

    KgState out{ComplexField(s.psi.grid()), ComplexField(s.psi.grid()), t + dt};
    const double w = dt / 6.0;
    for (std::size_t n = 0; n < s.psi.size(); ++n) {
        out.psi[n] = s.psi[n] + w * (k1x[n] + 2.0 * k2x[n] + 2.0 * k3x[n] + k4x[n]);
        out.pi[n] = s.pi[n] + w * (k1v[n] + 2.0 * k2v[n] + 2.0 * k3v[n] + k4v[n]);
    }
    if (!out.psi.all_finite() || !out.pi.all_finite()) {
        throw InstabilityError("non-finite values at t = " + std::to_string(out.time), s);
    }
    return out;
}

}  // namespace

double StepControl::cfl_limit(const Grid& grid, const PhysicalParams& params, double safety) {
    return safety * grid.min_spacing() / params.c;
}

StepControl StepControl::make(double dt, int steps_per_snapshot, double cfl_safety, const Grid& grid,
                              const PhysicalParams& params) {
    if (!(cfl_safety > 0.0) || cfl_safety > 1.0) throw std::invalid_argument("cfl_safety must be in (0, 1]");
    if (steps_per_snapshot < 1) throw std::invalid_argument("steps_per_snapshot must be positive");
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    const double limit = cfl_limit(grid, params, cfl_safety);
    if (dt > limit) {
        throw std::invalid_argument("dt = " + std::to_string(dt) + " exceeds the CFL bound " +
                                    std::to_string(limit));
    }
    return StepControl{dt, steps_per_snapshot, cfl_safety};
}

StepControl StepControl::unchecked(double dt, int steps_per_snapshot, double cfl_safety) {
    return StepControl{dt, steps_per_snapshot, cfl_safety};
}

bool momentum_is_commensurate(const Grid& grid, const PhysicalParams& params,
                              std::span<const double> momentum) {
    if (static_cast<int>(momentum.size()) != grid.dims()) return false;
    for (int a = 0; a < grid.dims(); ++a) {
        const double cycles = momentum[static_cast<std::size_t>(a)] * grid.length(a) /
                              (2.0 * std::numbers::pi * params.hbar);
        if (std::abs(cycles - std::round(cycles)) > 1e-9) return false;
    }
    return true;
}

KgState plane_wave_state(const Grid& grid, const PhysicalParams& params, std::span<const double> momentum,
                         Branch branch, double time, double scalar_potential,
                         std::span<const double> vector_potential) {
    params.validate();
    if (!momentum_is_commensurate(grid, params, momentum)) {
        throw std::invalid_argument("plane-wave momentum is not commensurate with the box");
    }
    std::vector<double> kinetic(momentum.begin(), momentum.end());
    for (std::size_t a = 0; a < vector_potential.size() && a < kinetic.size(); ++a) {
        kinetic[a] -= params.charge * vector_potential[a];
    }
    const double energy = params.energy(kinetic);
    // S_t + e W0 = -s E, so S_t = -s E - e W0.
    const double action_rate = -branch_sign(branch) * energy - params.charge * scalar_potential;
    const double hbar = params.hbar;

    auto psi = ComplexField::sample(grid, [&](std::span<const double> x) {
        double px = 0.0;
        for (std::size_t a = 0; a < x.size(); ++a) px += momentum[a] * x[a];
        return std::exp(Complex(0.0, (px + action_rate * time) / hbar));
    });
    ComplexField pi = psi * Complex(0.0, action_rate / hbar);
    return KgState{std::move(psi), std::move(pi), time};
}

KgState init_plane_wave(const Grid& grid, const PhysicalParams& params, std::span<const double> momentum,
                        Branch branch) {
    return plane_wave_state(grid, params, momentum, branch);
}

double gaussian_tail_level(const Grid& grid, std::span<const double> center, double sigma) {
    double worst = 0.0;
    for (int a = 0; a < grid.dims(); ++a) {
        const double x0 = center[static_cast<std::size_t>(a)];
        const double lo = grid.origin(a);
        const double hi = grid.origin(a) + grid.length(a);
        const double d = std::min(std::abs(x0 - lo), std::abs(hi - x0));
        worst = std::max(worst, std::exp(-d * d / (4.0 * sigma * sigma)));
    }
    return worst;
}

ComplexField single_branch_rate(const ComplexField& psi, const PhysicalParams& params, Branch branch,
                                const EmPotential* potential, double time) {
    const double s = branch_sign(branch);
    const double mc2 = params.rest_energy();
    const Grid& grid = psi.grid();
    const bool charged = potential != nullptr && params.charge != 0.0;
    std::vector<double> shift(static_cast<std::size_t>(grid.dims()), 0.0);
    if (charged) {
        if (!potential->vector_is_uniform(grid, time)) {
            throw std::invalid_argument("single-branch initial data needs a spatially uniform vector potential");
        }
        const auto A = potential->sample_vector(grid, time);
        for (std::size_t a = 0; a < A.size() && a < shift.size(); ++a) shift[a] = params.charge * A[a][0] / params.hbar;
    }
    auto rate = apply_spectral_multiplier(psi, [&](std::span<const double> k) {
        double k2 = 0.0;
        for (std::size_t a = 0; a < k.size(); ++a) k2 += (k[a] - shift[a]) * (k[a] - shift[a]);
        const double energy = std::sqrt(mc2 * mc2 + k2 * params.hbar * params.hbar * params.c * params.c);
        return Complex(0.0, -s * energy / params.hbar);
    });
    if (charged) {
        const auto W = potential->sample_scalar(grid, time);
        for (std::size_t n = 0; n < rate.size(); ++n) {
            rate[n] -= Complex(0.0, params.charge * W[n] / params.hbar) * psi[n];
        }
    }
    return rate;
}

KgState init_gaussian_packet(const Grid& grid, const PhysicalParams& params, std::span<const double> center,
                             double sigma, std::span<const double> mean_momentum, Branch branch,
                             const EmPotential* potential) {
    params.validate();
    if (static_cast<int>(center.size()) != grid.dims() || static_cast<int>(mean_momentum.size()) != grid.dims()) {
        throw std::invalid_argument("packet center and momentum need one entry per axis");
    }
    for (int a = 0; a < grid.dims(); ++a) {
        if (sigma < 4.0 * grid.spacing(a)) {
            throw std::invalid_argument("packet width " + std::to_string(sigma) +
                                        " is below 4 grid spacings on axis " + std::to_string(a));
        }
    }
    auto psi = ComplexField::sample(grid, [&](std::span<const double> x) {
        double r2 = 0.0;
        double px = 0.0;
        for (std::size_t a = 0; a < x.size(); ++a) {
            const double d = x[a] - center[a];
            r2 += d * d;
            px += mean_momentum[a] * x[a];
        }
        return std::exp(-r2 / (4.0 * sigma * sigma)) * std::exp(Complex(0.0, px / params.hbar));
    });
    auto pi = single_branch_rate(psi, params, branch, potential, 0.0);
    std::optional<RealField> W;
    if (potential != nullptr) W = potential->sample_scalar(grid, 0.0);
    const double charge = std::abs(volume_integral(kg_density(psi, pi, params, W ? &*W : nullptr)));
    const double scale = 1.0 / std::sqrt(charge);
    psi *= Complex(scale);
    pi *= Complex(scale);
    return KgState{std::move(psi), std::move(pi), 0.0};
}

RealField kg_density(const ComplexField& psi, const ComplexField& pi, const PhysicalParams& params,
                     const RealField* scalar_potential) {
    RealField rho(psi.grid());
    const double scale = -1.0 / params.rest_energy();
    for (std::size_t n = 0; n < rho.size(); ++n) {
        double energy_density = params.hbar * (std::conj(psi[n]) * pi[n]).imag();
        if (scalar_potential != nullptr) energy_density += params.charge * (*scalar_potential)[n] * std::norm(psi[n]);
        rho[n] = scale * energy_density;
    }
    return rho;
}

KgState kg_step_free(const KgState& state, const PhysicalParams& params, const StepControl& control) {
    return rk4_step(state, control.dt, [&](const ComplexField& psi, const ComplexField&, double) {
        return free_acceleration(psi, params);
    });
}

KgState kg_step_charged(const KgState& state, const PhysicalParams& params, const EmPotential& potential,
                        const StepControl& control) {
    return rk4_step(state, control.dt, [&](const ComplexField& psi, const ComplexField& pi, double t) {
        return charged_acceleration(psi, pi, t, params, potential);
    });
}

namespace {

KgState step_any(const KgState& s, const PhysicalParams& params, const StepControl& control,
                 const EmPotential* potential) {
    return potential != nullptr ? kg_step_charged(s, params, *potential, control)
                                : kg_step_free(s, params, control);
}

void check_growth(const KgState& next, const KgState& prev, double reference) {
    if (max_abs(next.psi) > kGrowthLimit * reference) {
        throw InstabilityError("runaway growth at t = " + std::to_string(next.time), prev);
    }
}

}  // namespace

KgState advance_kg(KgState state, const PhysicalParams& params, const StepControl& control, long steps,
                   const EmPotential* potential) {
    const double reference = std::max(max_abs(state.psi), 1e-300);
    for (long s = 0; s < steps; ++s) {
        KgState next = step_any(state, params, control, potential);
        check_growth(next, state, reference);
        state = std::move(next);
    }
    return state;
}

std::vector<KgState> evolve_kg(const KgState& initial, const PhysicalParams& params, const StepControl& control,
                               int snapshots, const EmPotential* potential) {
    std::vector<KgState> out{initial};
    const double reference = std::max(max_abs(initial.psi), 1e-300);
    KgState state = initial;
    for (int k = 0; k < snapshots; ++k) {
        for (int s = 0; s < control.steps_per_snapshot; ++s) {
            KgState next = step_any(state, params, control, potential);
            check_growth(next, out.back(), reference);
            state = std::move(next);
        }
        out.push_back(state);
    }
    return out;
}

}  // namespace kgh
