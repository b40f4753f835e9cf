#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "kgh/field.hpp"
#include "kgh/physics.hpp"

namespace kgh {

/// Node masking: points with |Psi| < epsilon_rel * max|Psi| are nodes, and
/// a square ring of dilation_radius cells around each node is masked too.
struct NodePolicy {
    double epsilon_rel = 1e-8;
    int dilation_radius = 1;

    void validate() const;
};

using NodeMask = std::vector<std::uint8_t>;

enum class EnergySign { antimatter = -1, mixed = 0, matter = 1 };

/// Amplitude/action representation of a wavefunction snapshot.
///
/// `action_rate` (dS/dt) and `rho` follow the relativistic definitions when
/// the state came from the Klein-Gordon solver; for Schrodinger states
/// action_rate is absent and rho is |phi|^2. `vqu_rel` needs three time
/// levels and is attached separately (attach_relativistic_potential).
/// Masked entries of vqu_* and velocity fields hold NaN.
struct HydroState {
    RealField amplitude;
    RealField action;
    RealField rho;
    VectorField current;
    VectorField action_gradient;
    std::optional<RealField> action_rate;
    std::optional<RealField> vqu_rel;
    RealField vqu_nonrel;
    NodeMask node_mask;
    EnergySign energy_sign = EnergySign::mixed;

    double masked_fraction() const;
};

NodeMask node_mask(const RealField& amplitude, const NodePolicy& policy);

/// Relativistic decomposition of (Psi, dPsi/dt). Throws when Psi vanishes everywhere.
HydroState decompose(const ComplexField& psi, const ComplexField& pi, const PhysicalParams& params,
                     const NodePolicy& policy = {});

/// Nonrelativistic decomposition: rho = |phi|^2, J = |phi|^2 grad S / m.
HydroState decompose_schrodinger(const ComplexField& phi, const PhysicalParams& params,
                                 const NodePolicy& policy = {});

/// hbar * atan2(Im, Re), in (-pi hbar, pi hbar].
RealField wrapped_phase(const ComplexField& psi, double hbar);

/// Integrates nearest-branch phase differences: along axis 0 at the first
/// column (the spine), then along axis 1 on every row.
RealField unwrap_phase(const RealField& wrapped, double hbar);

/// Spectral gradient of an unwrapped action. The per-line 2 pi hbar winding
/// across the periodic box is removed as a linear ramp before
/// differentiating and its slope added back.
VectorField action_gradient_from_unwrapped(const RealField& action, double hbar);

/// hbar Im(grad Psi / Psi); NaN on masked points.
VectorField action_gradient_from_psi(const ComplexField& psi, double hbar, const NodeMask& mask);

/// -(hbar^2 / 2m) lap|Psi| / |Psi| on unmasked points.
RealField quantum_potential_nonrel(const RealField& amplitude, const NodeMask& mask, const PhysicalParams& params);

/// (hbar^2 / m) [(1/c^2) d_t^2 - lap] |Psi| / |Psi| at the middle level, with
/// a centered three-point stencil in time.
RealField quantum_potential_rel(const RealField& amplitude_prev, const RealField& amplitude_mid,
                                const RealField& amplitude_next, double dt, const NodeMask& mask,
                                const PhysicalParams& params);

void attach_relativistic_potential(HydroState& mid, const HydroState& prev, const HydroState& next, double dt,
                                   const PhysicalParams& params);

/// Relativistic velocity J / rho = -c^2 grad S / (dS/dt). Rejects mixed-branch states.
VectorField velocity_field(const HydroState& hydro, const PhysicalParams& params);

ComplexField recompose(const RealField& amplitude, const RealField& action, const PhysicalParams& params);

}  // namespace kgh
