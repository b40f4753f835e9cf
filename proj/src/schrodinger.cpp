#include "kgh/schrodinger.hpp"

#include <cmath>
#include <string>

#include "kgh/spectral.hpp"

namespace kgh {

namespace {

// Shared split-step: the free step is this with W = 0, A = 0.
SchState split_step(const SchState& s, const PhysicalParams& p, const RealField* external,
                    const RealField* scalar, std::span<const double> uniform_a, double dt) {
    const double half = 0.5 * dt;
    ComplexField phi = s.phi;

    auto apply_potential = [&](ComplexField& f) {
        if (external == nullptr && scalar == nullptr) return;
        for (std::size_t n = 0; n < f.size(); ++n) {
            double v = 0.0;
            if (external != nullptr) v += (*external)[n];
            if (scalar != nullptr) v += p.charge * (*scalar)[n];
            f[n] *= std::exp(Complex(0.0, -v * half / p.hbar));
        }
    };

    apply_potential(phi);
    phi = apply_spectral_multiplier(phi, [&](std::span<const double> k) {
        double kinetic = 0.0;
        for (std::size_t a = 0; a < k.size(); ++a) {
            const double a_shift = a < uniform_a.size() ? p.charge * uniform_a[a] : 0.0;
            const double q = p.hbar * k[a] - a_shift;
            kinetic += q * q;
        }
        kinetic /= 2.0 * p.mass;
        return std::exp(Complex(0.0, -kinetic * dt / p.hbar));
    });
    apply_potential(phi);

    if (!phi.all_finite()) {
        throw std::runtime_error("non-finite Schrodinger state at t = " + std::to_string(s.time + dt));
    }
    return SchState{std::move(phi), s.time + dt};
}

}  // namespace

double schrodinger_step_limit(const Grid& grid, const PhysicalParams& params, double safety) {
    const double dx = grid.min_spacing();
    return safety * 2.0 * params.mass * dx * dx / params.hbar;
}

SchState schrodinger_step(const SchState& state, const PhysicalParams& params, const RealField* external,
                          const StepControl& control) {
    return split_step(state, params, external, nullptr, {}, control.dt);
}

SchState schrodinger_step_charged(const SchState& state, const PhysicalParams& params,
                                  const EmPotential& potential, const RealField* external,
                                  const StepControl& control) {
    if (params.charge == 0.0) return schrodinger_step(state, params, external, control);
    const Grid& grid = state.phi.grid();
    const double t_mid = state.time + 0.5 * control.dt;
    if (!potential.vector_is_uniform(grid, t_mid)) {
        throw std::invalid_argument("split-step Schrodinger needs a spatially uniform vector potential");
    }
    const auto A = potential.sample_vector(grid, t_mid);
    std::vector<double> a_uniform;
    for (const auto& comp : A) a_uniform.push_back(comp[0]);
    const auto W = potential.sample_scalar(grid, t_mid);
    return split_step(state, params, external, &W, a_uniform, control.dt);
}

SchState advance_schrodinger(SchState state, const PhysicalParams& params, const StepControl& control,
                             long steps, const RealField* external, const EmPotential* potential) {
    for (long s = 0; s < steps; ++s) {
        state = potential != nullptr ? schrodinger_step_charged(state, params, *potential, external, control)
                                     : schrodinger_step(state, params, external, control);
    }
    return state;
}

std::vector<SchState> evolve_schrodinger(const SchState& initial, const PhysicalParams& params,
                                         const StepControl& control, int snapshots, const RealField* external,
                                         const EmPotential* potential) {
    std::vector<SchState> out{initial};
    for (int k = 0; k < snapshots; ++k) {
        out.push_back(advance_schrodinger(out.back(), params, control, control.steps_per_snapshot, external,
                                          potential));
    }
    return out;
}

ComplexField strip_mass_phase(const KgState& state, const PhysicalParams& params, Branch branch) {
    const double phase = branch_sign(branch) * params.rest_frequency() * state.time;
    return state.psi * std::exp(Complex(0.0, phase));
}

}  // namespace kgh
