#include "kgh/physics.hpp"

#include <cmath>

#include "kgh/spectral.hpp"

namespace kgh {

void PhysicalParams::validate() const {
    if (!(hbar > 0.0) || !(mass > 0.0) || !(c > 0.0)) {
        throw std::invalid_argument("hbar, mass and c must be positive");
    }
    if (!std::isfinite(hbar) || !std::isfinite(mass) || !std::isfinite(c) || !std::isfinite(charge)) {
        throw std::invalid_argument("physical parameters must be finite");
    }
}

double PhysicalParams::energy(std::span<const double> momentum) const {
    double p2 = 0.0;
    for (double p : momentum) p2 += p * p;
    return std::sqrt(rest_energy() * rest_energy() + p2 * c * c);
}

EmPotential EmPotential::constant(double scalar_value, std::vector<double> vector_value) {
    EmPotential pot;
    pot.scalar = [scalar_value](std::span<const double>, double) { return scalar_value; };
    for (double a : vector_value) {
        pot.vector.push_back([a](std::span<const double>, double) { return a; });
    }
    return pot;
}

bool EmPotential::vector_is_uniform(const Grid& grid, double t) const {
    for (const auto& comp : sample_vector(grid, t)) {
        const double first = comp[0];
        for (double v : comp.values()) {
            if (v != first) return false;
        }
    }
    return true;
}

RealField EmPotential::sample_scalar(const Grid& grid, double t) const {
    if (!scalar) return RealField(grid);
    return RealField::sample(grid, [&](std::span<const double> x) { return scalar(x, t); });
}

VectorField EmPotential::sample_vector(const Grid& grid, double t) const {
    VectorField out;
    for (int a = 0; a < grid.dims(); ++a) {
        const auto idx = static_cast<std::size_t>(a);
        if (idx < vector.size() && vector[idx]) {
            out.push_back(RealField::sample(grid, [&](std::span<const double> x) { return vector[idx](x, t); }));
        } else {
            out.emplace_back(grid);
        }
    }
    return out;
}

RealField EmPotential::scalar_time_derivative(const Grid& grid, double t) const {
    if (!scalar) return RealField(grid);
    const double h = time_step;
    return RealField::sample(grid, [&](std::span<const double> x) {
        const double d = -scalar(x, t - 3 * h) + 9 * scalar(x, t - 2 * h) - 45 * scalar(x, t - h) +
                         45 * scalar(x, t + h) - 9 * scalar(x, t + 2 * h) + scalar(x, t + 3 * h);
        return d / (60.0 * h);
    });
}

RealField EmPotential::vector_divergence(const Grid& grid, double t) const {
    if (vector.empty()) return RealField(grid);
    return divergence(sample_vector(grid, t));
}

RealField lorenz_gauge_defect(const EmPotential& potential, const Grid& grid, double t,
                              const PhysicalParams& params) {
    auto out = potential.scalar_time_derivative(grid, t);
    out *= 1.0 / (params.c * params.c);
    out += potential.vector_divergence(grid, t);
    return out;
}

}  // namespace kgh
