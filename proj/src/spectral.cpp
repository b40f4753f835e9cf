#include "kgh/spectral.hpp"

#include <cmath>
#include <stdexcept>

#include "fft_plans.hpp"

namespace kgh {

namespace {

const fftw_complex* as_fftw(const Complex* p) { return reinterpret_cast<const fftw_complex*>(p); }
fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }

// Mode-wise multiply in place on a spectrum.
template <class Fn>
void for_each_mode(const Grid& grid, ComplexField& spectrum, Fn&& fn) {
    std::vector<double> k(static_cast<std::size_t>(grid.dims()));
    std::vector<int> m(static_cast<std::size_t>(grid.dims()));
    for (std::size_t n = 0; n < grid.size(); ++n) {
        for (int a = 0; a < grid.dims(); ++a) {
            const int j = grid.axis_index(n, a);
            k[static_cast<std::size_t>(a)] = grid.wavenumbers(a)[static_cast<std::size_t>(j)];
            m[static_cast<std::size_t>(a)] = j;
        }
        spectrum[n] = fn(spectrum[n], k, m);
    }
}

bool is_nyquist(const Grid& grid, int axis, int j) {
    const int n = grid.points(axis);
    return n % 2 == 0 && j == n / 2;
}

}  // namespace

ComplexField forward_dft(const ComplexField& f) {
    ComplexField out(f.grid());
    f.grid().plans().forward(as_fftw(f.values().data()), as_fftw(out.values().data()));
    return out;
}

ComplexField inverse_dft(const ComplexField& spectrum) {
    ComplexField out(spectrum.grid());
    spectrum.grid().plans().backward(as_fftw(spectrum.values().data()), as_fftw(out.values().data()));
    const double scale = 1.0 / static_cast<double>(spectrum.size());
    for (auto& v : out.values()) v *= scale;
    return out;
}

ComplexField apply_spectral_multiplier(const ComplexField& f,
                                       const std::function<Complex(std::span<const double>)>& multiplier) {
    auto spec = forward_dft(f);
    for_each_mode(f.grid(), spec, [&](Complex c, const std::vector<double>& k, const std::vector<int>&) {
        return c * multiplier(std::span<const double>(k));
    });
    return inverse_dft(spec);
}

ComplexField partial(const ComplexField& f, int axis) {
    const Grid& grid = f.grid();
    if (axis < 0 || axis >= grid.dims()) throw std::invalid_argument("derivative axis out of range");
    auto spec = forward_dft(f);
    const auto a = static_cast<std::size_t>(axis);
    for_each_mode(grid, spec, [&](Complex c, const std::vector<double>& k, const std::vector<int>& m) {
        if (is_nyquist(grid, axis, m[a])) return Complex{};
        return c * Complex(0.0, k[a]);
    });
    return inverse_dft(spec);
}

RealField partial(const RealField& f, int axis) { return real_part(partial(to_complex(f), axis)); }

std::vector<ComplexField> gradient(const ComplexField& f) {
    std::vector<ComplexField> out;
    for (int a = 0; a < f.grid().dims(); ++a) out.push_back(partial(f, a));
    return out;
}

VectorField gradient(const RealField& f) {
    VectorField out;
    for (int a = 0; a < f.grid().dims(); ++a) out.push_back(partial(f, a));
    return out;
}

ComplexField laplacian(const ComplexField& f) {
    auto spec = forward_dft(f);
    for_each_mode(f.grid(), spec, [](Complex c, const std::vector<double>& k, const std::vector<int>&) {
        double k2 = 0.0;
        for (double kj : k) k2 += kj * kj;
        return -k2 * c;
    });
    return inverse_dft(spec);
}

RealField laplacian(const RealField& f) { return real_part(laplacian(to_complex(f))); }

RealField divergence(const VectorField& components) {
    if (components.empty()) throw std::invalid_argument("divergence of an empty vector field");
    const Grid& grid = components.front().grid();
    if (static_cast<int>(components.size()) != grid.dims()) {
        throw std::invalid_argument("divergence needs one component per axis");
    }
    RealField out(grid);
    for (int a = 0; a < grid.dims(); ++a) out += partial(components[static_cast<std::size_t>(a)], a);
    return out;
}

double volume_integral(const RealField& f) {
    double sum = 0.0;
    for (double v : f.values()) sum += v;
    return sum * f.grid().cell_volume();
}

double l2_norm(const ComplexField& f) {
    double sum = 0.0;
    for (const auto& v : f.values()) sum += std::norm(v);
    return std::sqrt(sum * f.grid().cell_volume());
}

double l2_norm(const RealField& f) {
    double sum = 0.0;
    for (double v : f.values()) sum += v * v;
    return std::sqrt(sum * f.grid().cell_volume());
}

double max_abs(const ComplexField& f) {
    double m = 0.0;
    for (const auto& v : f.values()) m = std::max(m, std::abs(v));
    return m;
}

double max_abs(const RealField& f) {
    double m = 0.0;
    for (double v : f.values()) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace kgh
