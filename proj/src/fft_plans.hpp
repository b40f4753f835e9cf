#pragma once

#include <fftw3.h>

#include <vector>

namespace kgh::detail {

// Plans are created once per grid and executed with the new-array interface,
// which FFTW documents as thread-safe. Creation and destruction go through a
// global mutex because the FFTW planner is not.
struct FftPlans {
    FftPlans(const std::vector<int>& points);
    ~FftPlans();
    FftPlans(const FftPlans&) = delete;
    FftPlans& operator=(const FftPlans&) = delete;

    void forward(const fftw_complex* in, fftw_complex* out) const;
    void backward(const fftw_complex* in, fftw_complex* out) const;

    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
};

}  // namespace kgh::detail
