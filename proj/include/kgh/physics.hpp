#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "kgh/field.hpp"

namespace kgh {

/// hbar, mass and c are threaded through every operation; natural units by default.
struct PhysicalParams {
    double hbar = 1.0;
    double mass = 1.0;
    double c = 1.0;
    double charge = 0.0;

    void validate() const;
    double rest_energy() const noexcept { return mass * c * c; }
    /// Rest-energy angular frequency m c^2 / hbar.
    double rest_frequency() const noexcept { return rest_energy() / hbar; }
    /// Positive-branch energy sqrt(m^2 c^4 + |p|^2 c^2).
    double energy(std::span<const double> momentum) const;
};

/// Matter (+1) or antimatter (-1) branch; the phase evolves as exp(-+ i E t / hbar).
enum class Branch { matter = 1, antimatter = -1 };

inline double branch_sign(Branch b) noexcept { return b == Branch::matter ? 1.0 : -1.0; }

/// Closed-form electromagnetic potentials. The scalar W and each vector
/// component A_j are evaluated on demand at (x, t); empty evaluators are zero.
/// Time derivatives are taken with a sixth-order central difference of the
/// closed form, spatial derivatives spectrally on the sampled field.
struct EmPotential {
    using Evaluator = std::function<double(std::span<const double> x, double t)>;

    Evaluator scalar;
    std::vector<Evaluator> vector;
    double time_step = 1e-3;

    static EmPotential constant(double scalar_value, std::vector<double> vector_value);

    /// True when A(x, t) does not depend on x (checked by sampling).
    bool vector_is_uniform(const Grid& grid, double t) const;

    RealField sample_scalar(const Grid& grid, double t) const;
    VectorField sample_vector(const Grid& grid, double t) const;
    RealField scalar_time_derivative(const Grid& grid, double t) const;
    /// Spectral divergence of the sampled vector potential.
    RealField vector_divergence(const Grid& grid, double t) const;
};

/// (1/c^2) dW/dt + div A, sampled on the grid; zero for Lorenz-gauge potentials.
RealField lorenz_gauge_defect(const EmPotential& potential, const Grid& grid, double t,
                              const PhysicalParams& params);

}  // namespace kgh
