#include "kgh/grid.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

#include "fft_plans.hpp"

namespace kgh {

namespace detail {

namespace {
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

FftPlans::FftPlans(const std::vector<int>& points) {
    std::size_t total = 1;
    for (int p : points) total *= static_cast<std::size_t>(p);
    std::lock_guard lock(planner_mutex());
    auto* in = fftw_alloc_complex(total);
    auto* out = fftw_alloc_complex(total);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    const int rank = static_cast<int>(points.size());
    fwd = fftw_plan_dft(rank, points.data(), in, out, FFTW_FORWARD, flags);
    bwd = fftw_plan_dft(rank, points.data(), in, out, FFTW_BACKWARD, flags);
    fftw_free(in);
    fftw_free(out);
    if (fwd == nullptr || bwd == nullptr) throw std::runtime_error("FFTW planning failed");
}

FftPlans::~FftPlans() {
    std::lock_guard lock(planner_mutex());
    if (fwd != nullptr) fftw_destroy_plan(fwd);
    if (bwd != nullptr) fftw_destroy_plan(bwd);
}

void FftPlans::forward(const fftw_complex* in, fftw_complex* out) const {
    fftw_execute_dft(fwd, const_cast<fftw_complex*>(in), out);
}

void FftPlans::backward(const fftw_complex* in, fftw_complex* out) const {
    fftw_execute_dft(bwd, const_cast<fftw_complex*>(in), out);
}

}  // namespace detail

struct Grid::Impl {
    int dims = 0;
    std::vector<int> points;
    std::vector<double> lengths;
    std::vector<double> origin;
    std::vector<double> spacing;
    std::vector<std::vector<double>> wavenumbers;
    std::vector<std::vector<int>> modes;
    std::size_t size = 0;
    std::unique_ptr<detail::FftPlans> plans;
};

Grid Grid::create(int dims, std::vector<int> points, std::vector<double> lengths,
                  std::vector<double> origin) {
    if (dims != 1 && dims != 2) {
        throw std::invalid_argument("grid dims must be 1 or 2, got " + std::to_string(dims));
    }
    const auto d = static_cast<std::size_t>(dims);
    if (points.size() != d || lengths.size() != d) {
        throw std::invalid_argument("grid needs one point count and one length per axis");
    }
    if (origin.empty()) origin.assign(d, 0.0);
    if (origin.size() != d) throw std::invalid_argument("grid origin needs one entry per axis");
    for (std::size_t a = 0; a < d; ++a) {
        if (points[a] < 8) {
            throw std::invalid_argument("grid needs at least 8 points per axis, axis " +
                                        std::to_string(a) + " has " + std::to_string(points[a]));
        }
        if (!(lengths[a] > 0.0) || !std::isfinite(lengths[a])) {
            throw std::invalid_argument("grid length must be positive on axis " + std::to_string(a));
        }
        if (!std::isfinite(origin[a])) throw std::invalid_argument("grid origin must be finite");
    }

    auto impl = std::make_shared<Impl>();
    impl->dims = dims;
    impl->points = points;
    impl->lengths = lengths;
    impl->origin = origin;
    impl->size = 1;
    for (std::size_t a = 0; a < d; ++a) {
        const int n = points[a];
        impl->size *= static_cast<std::size_t>(n);
        impl->spacing.push_back(lengths[a] / n);
        std::vector<double> k(static_cast<std::size_t>(n));
        std::vector<int> m(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j) {
            const int mode = (j < (n + 1) / 2) ? j : j - n;
            m[static_cast<std::size_t>(j)] = mode;
            k[static_cast<std::size_t>(j)] = 2.0 * std::numbers::pi * mode / lengths[a];
        }
        impl->wavenumbers.push_back(std::move(k));
        impl->modes.push_back(std::move(m));
    }
    impl->plans = std::make_unique<detail::FftPlans>(points);
    return Grid(std::move(impl));
}

int Grid::dims() const noexcept { return impl_->dims; }
int Grid::points(int axis) const { return impl_->points.at(static_cast<std::size_t>(axis)); }
double Grid::length(int axis) const { return impl_->lengths.at(static_cast<std::size_t>(axis)); }
double Grid::origin(int axis) const { return impl_->origin.at(static_cast<std::size_t>(axis)); }
double Grid::spacing(int axis) const { return impl_->spacing.at(static_cast<std::size_t>(axis)); }
double Grid::min_spacing() const noexcept {
    return *std::min_element(impl_->spacing.begin(), impl_->spacing.end());
}
std::size_t Grid::size() const noexcept { return impl_->size; }

double Grid::cell_volume() const noexcept {
    double v = 1.0;
    for (double h : impl_->spacing) v *= h;
    return v;
}

std::span<const double> Grid::wavenumbers(int axis) const {
    return impl_->wavenumbers.at(static_cast<std::size_t>(axis));
}

std::span<const int> Grid::mode_numbers(int axis) const {
    return impl_->modes.at(static_cast<std::size_t>(axis));
}

double Grid::coordinate(int axis, int index) const {
    return origin(axis) + index * spacing(axis);
}

int Grid::axis_index(std::size_t flat, int axis) const {
    if (impl_->dims == 1) return static_cast<int>(flat);
    const auto n1 = static_cast<std::size_t>(impl_->points[1]);
    return axis == 0 ? static_cast<int>(flat / n1) : static_cast<int>(flat % n1);
}

std::size_t Grid::flat_index(int i0, int i1) const {
    if (impl_->dims == 1) return static_cast<std::size_t>(i0);
    return static_cast<std::size_t>(i0) * static_cast<std::size_t>(impl_->points[1]) +
           static_cast<std::size_t>(i1);
}

std::size_t Grid::shifted(std::size_t flat, int axis, int step) const {
    const int n = points(axis);
    auto wrap = [n](int i) { return ((i % n) + n) % n; };
    if (impl_->dims == 1) return static_cast<std::size_t>(wrap(static_cast<int>(flat) + step));
    int i0 = axis_index(flat, 0);
    int i1 = axis_index(flat, 1);
    if (axis == 0) {
        i0 = wrap(i0 + step);
    } else {
        i1 = wrap(i1 + step);
    }
    return flat_index(i0, i1);
}

const detail::FftPlans& Grid::plans() const { return *impl_->plans; }

bool operator==(const Grid& a, const Grid& b) noexcept {
    if (a.impl_ == b.impl_) return true;
    return a.impl_->dims == b.impl_->dims && a.impl_->points == b.impl_->points &&
           a.impl_->lengths == b.impl_->lengths && a.impl_->origin == b.impl_->origin;
}

}  // namespace kgh
