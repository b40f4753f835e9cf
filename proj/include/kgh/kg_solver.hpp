#pragma once

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "kgh/field.hpp"
#include "kgh/physics.hpp"

namespace kgh {

/// (Psi, dPsi/dt, t): the second-order Klein-Gordon equation as a first-order system.
struct KgState {
    ComplexField psi;
    ComplexField pi;
    double time = 0.0;
};

/// Time stepping parameters. make() enforces dt <= cfl_safety * dx / c.
struct StepControl {
    double dt = 0.0;
    int steps_per_snapshot = 1;
    double cfl_safety = 0.5;

    static double cfl_limit(const Grid& grid, const PhysicalParams& params, double safety);
    static StepControl make(double dt, int steps_per_snapshot, double cfl_safety, const Grid& grid,
                            const PhysicalParams& params);
    /// Skips the CFL bound; used for deliberately unstable negative controls.
    static StepControl unchecked(double dt, int steps_per_snapshot, double cfl_safety = 0.5);
};

/// Thrown when a run produces non-finite values or runaway growth.
class InstabilityError : public std::runtime_error {
public:
    InstabilityError(const std::string& what, KgState last_stable)
        : std::runtime_error(what), last_stable_(std::move(last_stable)) {}
    const KgState& last_stable() const noexcept { return last_stable_; }

private:
    KgState last_stable_;
};

/// True when every p_j L_j / (2 pi hbar) is an integer (to 1e-9).
bool momentum_is_commensurate(const Grid& grid, const PhysicalParams& params,
                              std::span<const double> momentum);

/// Exact plane wave exp[i(p.x - s E t)/hbar] with its analytic time
/// derivative. With constant potentials (W0, A0) the dispersion becomes
/// (S_t + eW0)^2 = c^2 (p - eA0)^2 + m^2 c^4.
KgState plane_wave_state(const Grid& grid, const PhysicalParams& params, std::span<const double> momentum,
                         Branch branch, double time = 0.0, double scalar_potential = 0.0,
                         std::span<const double> vector_potential = {});

KgState init_plane_wave(const Grid& grid, const PhysicalParams& params, std::span<const double> momentum,
                        Branch branch);

/// Largest |Psi| / max|Psi| of an unnormalized packet on the box boundary.
double gaussian_tail_level(const Grid& grid, std::span<const double> center, double sigma);

/// Single-branch Gaussian packet normalized to |integral rho dV| = 1. With a
/// potential the branch is taken with respect to the gauged operator at t = 0.
KgState init_gaussian_packet(const Grid& grid, const PhysicalParams& params, std::span<const double> center,
                             double sigma, std::span<const double> mean_momentum, Branch branch,
                             const EmPotential* potential = nullptr);

/// Applies dPsi/dt = -+ (i/hbar) E(hbar k - eA) Psi mode by mode, then
/// -(i e W / hbar) Psi pointwise. A must be uniform in space.
ComplexField single_branch_rate(const ComplexField& psi, const PhysicalParams& params, Branch branch,
                                const EmPotential* potential = nullptr, double time = 0.0);

/// rho = -(hbar / m c^2) Im(Psi* Pi) [- e W |Psi|^2 / (m c^2) when charged].
RealField kg_density(const ComplexField& psi, const ComplexField& pi, const PhysicalParams& params,
                     const RealField* scalar_potential = nullptr);

KgState kg_step_free(const KgState& state, const PhysicalParams& params, const StepControl& control);
KgState kg_step_charged(const KgState& state, const PhysicalParams& params, const EmPotential& potential,
                        const StepControl& control);

/// Runs `snapshots` snapshot intervals and returns the initial state plus one
/// state per interval. Throws InstabilityError carrying the last stable state.
std::vector<KgState> evolve_kg(const KgState& initial, const PhysicalParams& params, const StepControl& control,
                               int snapshots, const EmPotential* potential = nullptr);

/// Advances by `steps` steps without storing intermediates.
KgState advance_kg(KgState state, const PhysicalParams& params, const StepControl& control, long steps,
                   const EmPotential* potential = nullptr);

}  // namespace kgh
