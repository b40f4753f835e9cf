#pragma once

#include <functional>
#include <span>

#include "kgh/field.hpp"

namespace kgh {

/// Unnormalized forward DFT (FFTW sign convention e^{-ikx}).
ComplexField forward_dft(const ComplexField& f);
/// Inverse DFT including the 1/N normalization.
ComplexField inverse_dft(const ComplexField& spectrum);

/// Multiplies every Fourier mode by multiplier(k), k holding one wavenumber
/// per axis, and transforms back.
ComplexField apply_spectral_multiplier(const ComplexField& f,
                                       const std::function<Complex(std::span<const double>)>& multiplier);

/// Spectral first derivative along one axis. The Nyquist mode is zeroed.
ComplexField partial(const ComplexField& f, int axis);
RealField partial(const RealField& f, int axis);

std::vector<ComplexField> gradient(const ComplexField& f);
VectorField gradient(const RealField& f);

ComplexField laplacian(const ComplexField& f);
RealField laplacian(const RealField& f);

RealField divergence(const VectorField& components);

/// Sum of samples times the cell volume (spectrally exact for periodic
/// band-limited integrands).
double volume_integral(const RealField& f);
/// sqrt(integral |f|^2 dV).
double l2_norm(const ComplexField& f);
double l2_norm(const RealField& f);
double max_abs(const ComplexField& f);
double max_abs(const RealField& f);

}  // namespace kgh
