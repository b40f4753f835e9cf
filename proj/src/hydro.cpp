#include "kgh/hydro.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "kgh/spectral.hpp"

namespace kgh {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double wrap_to_pi(double angle) {
    double w = std::remainder(angle, 2.0 * std::numbers::pi);
    if (w <= -std::numbers::pi) w += 2.0 * std::numbers::pi;
    return w;
}

RealField amplitude_of(const ComplexField& psi) {
    RealField amp(psi.grid());
    for (std::size_t n = 0; n < psi.size(); ++n) amp[n] = std::abs(psi[n]);
    return amp;
}

VectorField probability_current(const ComplexField& psi, const PhysicalParams& params) {
    const auto grad = gradient(psi);
    VectorField out;
    for (const auto& g : grad) {
        RealField j(psi.grid());
        for (std::size_t n = 0; n < psi.size(); ++n) {
            j[n] = params.hbar * (std::conj(psi[n]) * g[n]).imag() / params.mass;
        }
        out.push_back(std::move(j));
    }
    return out;
}

}  // namespace

void NodePolicy::validate() const {
    if (!(epsilon_rel > 0.0)) throw std::invalid_argument("node epsilon_rel must be positive");
    if (dilation_radius < 0) throw std::invalid_argument("node dilation_radius must be non-negative");
}

double HydroState::masked_fraction() const {
    std::size_t masked = 0;
    for (auto m : node_mask) masked += m;
    return node_mask.empty() ? 0.0 : static_cast<double>(masked) / static_cast<double>(node_mask.size());
}

NodeMask node_mask(const RealField& amplitude, const NodePolicy& policy) {
    policy.validate();
    const Grid& grid = amplitude.grid();
    const double peak = max_abs(amplitude);
    if (!(peak > 0.0)) throw std::invalid_argument("wavefunction vanishes everywhere");
    const double threshold = policy.epsilon_rel * peak;

    NodeMask mask(grid.size(), 0);
    const int r = policy.dilation_radius;
    for (std::size_t n = 0; n < grid.size(); ++n) {
        if (amplitude[n] >= threshold) continue;
        if (grid.dims() == 1) {
            for (int d = -r; d <= r; ++d) mask[grid.shifted(n, 0, d)] = 1;
        } else {
            for (int d0 = -r; d0 <= r; ++d0) {
                const auto row = grid.shifted(n, 0, d0);
                for (int d1 = -r; d1 <= r; ++d1) mask[grid.shifted(row, 1, d1)] = 1;
            }
        }
    }
    return mask;
}

RealField wrapped_phase(const ComplexField& psi, double hbar) {
    RealField out(psi.grid());
    for (std::size_t n = 0; n < psi.size(); ++n) {
        double angle = std::atan2(psi[n].imag(), psi[n].real());
        if (angle <= -std::numbers::pi) angle = std::numbers::pi;
        out[n] = hbar * angle;
    }
    return out;
}

RealField unwrap_phase(const RealField& wrapped, double hbar) {
    const Grid& grid = wrapped.grid();
    RealField out(grid);
    auto step = [&](std::size_t from, std::size_t to) {
        out[to] = out[from] + hbar * wrap_to_pi((wrapped[to] - wrapped[from]) / hbar);
    };
    out[0] = wrapped[0];
    const int n0 = grid.points(0);
    if (grid.dims() == 1) {
        for (int i = 1; i < n0; ++i) step(static_cast<std::size_t>(i - 1), static_cast<std::size_t>(i));
        return out;
    }
    const int n1 = grid.points(1);
    for (int i = 1; i < n0; ++i) step(grid.flat_index(i - 1, 0), grid.flat_index(i, 0));
    for (int i = 0; i < n0; ++i) {
        for (int j = 1; j < n1; ++j) step(grid.flat_index(i, j - 1), grid.flat_index(i, j));
    }
    return out;
}

VectorField action_gradient_from_unwrapped(const RealField& action, double hbar) {
    const Grid& grid = action.grid();
    VectorField out;
    for (int axis = 0; axis < grid.dims(); ++axis) {
        const int n = grid.points(axis);
        const double length = grid.length(axis);
        RealField periodic = action;
        RealField slope(grid);
        for (std::size_t flat = 0; flat < grid.size(); ++flat) {
            if (grid.axis_index(flat, axis) != 0) continue;
            // Walk one line along `axis` starting at its first point.
            const std::size_t last = grid.shifted(flat, axis, n - 1);
            const double across = action[last] - action[flat];
            const double closing = hbar * wrap_to_pi((action[flat] - action[last]) / hbar);
            const double winding = across + closing;
            std::size_t p = flat;
            for (int j = 0; j < n; ++j) {
                periodic[p] -= winding * j / n;
                slope[p] = winding / length;
                p = grid.shifted(p, axis, 1);
            }
        }
        out.push_back(partial(periodic, axis) + slope);
    }
    return out;
}

VectorField action_gradient_from_psi(const ComplexField& psi, double hbar, const NodeMask& mask) {
    VectorField out;
    for (const auto& g : gradient(psi)) {
        RealField comp(psi.grid());
        for (std::size_t n = 0; n < psi.size(); ++n) {
            comp[n] = mask[n] ? kNaN : hbar * (g[n] / psi[n]).imag();
        }
        out.push_back(std::move(comp));
    }
    return out;
}

RealField quantum_potential_nonrel(const RealField& amplitude, const NodeMask& mask, const PhysicalParams& params) {
    const auto lap = laplacian(amplitude);
    const double scale = -params.hbar * params.hbar / (2.0 * params.mass);
    RealField out(amplitude.grid());
    for (std::size_t n = 0; n < out.size(); ++n) {
        out[n] = mask[n] ? kNaN : scale * lap[n] / amplitude[n];
    }
    return out;
}

RealField quantum_potential_rel(const RealField& amplitude_prev, const RealField& amplitude_mid,
                                const RealField& amplitude_next, double dt, const NodeMask& mask,
                                const PhysicalParams& params) {
    if (!(dt > 0.0)) throw std::invalid_argument("quantum_potential_rel needs a positive time step");
    const auto lap = laplacian(amplitude_mid);
    const double inv_c2dt2 = 1.0 / (params.c * params.c * dt * dt);
    const double scale = params.hbar * params.hbar / params.mass;
    RealField out(amplitude_mid.grid());
    for (std::size_t n = 0; n < out.size(); ++n) {
        if (mask[n]) {
            out[n] = kNaN;
            continue;
        }
        const double tt = (amplitude_next[n] - 2.0 * amplitude_mid[n] + amplitude_prev[n]) * inv_c2dt2;
        out[n] = scale * (tt - lap[n]) / amplitude_mid[n];
    }
    return out;
}

void attach_relativistic_potential(HydroState& mid, const HydroState& prev, const HydroState& next, double dt,
                                   const PhysicalParams& params) {
    mid.vqu_rel = quantum_potential_rel(prev.amplitude, mid.amplitude, next.amplitude, dt, mid.node_mask, params);
}

HydroState decompose(const ComplexField& psi, const ComplexField& pi, const PhysicalParams& params,
                     const NodePolicy& policy) {
    params.validate();
    psi.check_same_grid(pi);
    if (!psi.all_finite() || !pi.all_finite()) throw std::invalid_argument("decompose needs finite fields");

    auto amplitude = amplitude_of(psi);
    auto mask = node_mask(amplitude, policy);

    RealField rate(psi.grid());
    RealField rho(psi.grid());
    const double mc2 = params.rest_energy();
    double rate_sum = 0.0;
    std::size_t unmasked = 0;
    bool any_positive = false;
    bool any_negative = false;
    for (std::size_t n = 0; n < psi.size(); ++n) {
        rho[n] = -params.hbar * (std::conj(psi[n]) * pi[n]).imag() / mc2;
        if (mask[n]) {
            rate[n] = kNaN;
            continue;
        }
        rate[n] = params.hbar * (pi[n] / psi[n]).imag();
        rate_sum += rate[n];
        ++unmasked;
        if (-rate[n] > 0.0) any_positive = true;
        if (-rate[n] < 0.0) any_negative = true;
    }

    EnergySign sign = EnergySign::mixed;
    if (unmasked > 0 && !(any_positive && any_negative)) {
        const double mean_energy = -rate_sum / static_cast<double>(unmasked);
        if (mean_energy > 0.0) sign = EnergySign::matter;
        if (mean_energy < 0.0) sign = EnergySign::antimatter;
    }

    auto action = unwrap_phase(wrapped_phase(psi, params.hbar), params.hbar);
    auto vqu = quantum_potential_nonrel(amplitude, mask, params);
    return HydroState{std::move(amplitude),
                      std::move(action),
                      std::move(rho),
                      probability_current(psi, params),
                      action_gradient_from_psi(psi, params.hbar, mask),
                      std::move(rate),
                      std::nullopt,
                      std::move(vqu),
                      std::move(mask),
                      sign};
}

HydroState decompose_schrodinger(const ComplexField& phi, const PhysicalParams& params, const NodePolicy& policy) {
    params.validate();
    if (!phi.all_finite()) throw std::invalid_argument("decompose needs finite fields");
    auto amplitude = amplitude_of(phi);
    auto mask = node_mask(amplitude, policy);
    RealField rho(phi.grid());
    for (std::size_t n = 0; n < phi.size(); ++n) rho[n] = std::norm(phi[n]);
    auto action = unwrap_phase(wrapped_phase(phi, params.hbar), params.hbar);
    auto vqu = quantum_potential_nonrel(amplitude, mask, params);
    return HydroState{std::move(amplitude),
                      std::move(action),
                      std::move(rho),
                      probability_current(phi, params),
                      action_gradient_from_psi(phi, params.hbar, mask),
                      std::nullopt,
                      std::nullopt,
                      std::move(vqu),
                      std::move(mask),
                      EnergySign::matter};
}

VectorField velocity_field(const HydroState& hydro, const PhysicalParams& params) {
    if (hydro.energy_sign == EnergySign::mixed) {
        throw std::invalid_argument("velocity field is defined only for pure-branch states");
    }
    if (!hydro.action_rate) throw std::invalid_argument("velocity field needs dS/dt (relativistic state)");
    const double c2 = params.c * params.c;
    VectorField out;
    for (const auto& g : hydro.action_gradient) {
        RealField v(g.grid());
        for (std::size_t n = 0; n < v.size(); ++n) {
            v[n] = hydro.node_mask[n] ? kNaN : -c2 * g[n] / (*hydro.action_rate)[n];
        }
        out.push_back(std::move(v));
    }
    return out;
}

ComplexField recompose(const RealField& amplitude, const RealField& action, const PhysicalParams& params) {
    amplitude.check_same_grid(action);
    ComplexField out(amplitude.grid());
    for (std::size_t n = 0; n < out.size(); ++n) {
        if (amplitude[n] < 0.0) throw std::invalid_argument("recompose needs a non-negative amplitude");
        out[n] = amplitude[n] * std::exp(Complex(0.0, action[n] / params.hbar));
    }
    return out;
}

}  // namespace kgh
