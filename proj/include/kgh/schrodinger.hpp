#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "kgh/field.hpp"
#include "kgh/kg_solver.hpp"
#include "kgh/physics.hpp"

namespace kgh {

/// Nonrelativistic wavefunction: the K-G field with the mass phase factor removed.
struct SchState {
    ComplexField phi;
    double time = 0.0;
};

/// Advisory splitting bound safety * 2 m dx^2 / hbar.
double schrodinger_step_limit(const Grid& grid, const PhysicalParams& params, double safety);

/// Strang split step (half potential, full kinetic, half potential) of
/// i hbar phi_t = -(hbar^2/2m) lap phi + V phi. `external` may be null (V = 0).
SchState schrodinger_step(const SchState& state, const PhysicalParams& params, const RealField* external,
                          const StepControl& control);

/// Minimally coupled step of i hbar phi_t = (1/2m)(-i hbar grad - eA)^2 phi + (eW + V) phi.
/// The kinetic factor is exact in Fourier space, which requires A to be
/// uniform in space (it may depend on time); non-uniform A is rejected.
SchState schrodinger_step_charged(const SchState& state, const PhysicalParams& params,
                                  const EmPotential& potential, const RealField* external,
                                  const StepControl& control);

std::vector<SchState> evolve_schrodinger(const SchState& initial, const PhysicalParams& params,
                                         const StepControl& control, int snapshots,
                                         const RealField* external = nullptr,
                                         const EmPotential* potential = nullptr);

SchState advance_schrodinger(SchState state, const PhysicalParams& params, const StepControl& control,
                             long steps, const RealField* external = nullptr,
                             const EmPotential* potential = nullptr);

/// Strips the mass phase: E = Psi exp(+- i m c^2 t / hbar) for the given branch.
ComplexField strip_mass_phase(const KgState& state, const PhysicalParams& params, Branch branch);

}  // namespace kgh
