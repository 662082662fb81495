#pragma once

#include <cstdint>

#include "akpz/kernel_params.hpp"
#include "akpz/wavenumber.hpp"

namespace akpz {

// Compensated (Kahan) accumulator. All log-divergent sums use it with a fixed
// row-major summation order, so single-threaded results are bit-reproducible;
// the partitioned parallel path keeps a fixed block decomposition and reduces
// blocks in order, which makes it independent of the thread count as well.
class KahanSum {
  public:
    void add(double x) {
        double y = x - comp_;
        double t = sum_ + y;
        comp_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const { return sum_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// c(l,m) = l2 m2 - l1 m1, the symmetric bilinear form behind the AKPZ
// nonlinearity; exact in 64-bit integers for every cutoff we simulate.
inline std::int64_t c_form(Wavenumber l, Wavenumber m) {
    return std::int64_t(l.k2) * m.k2 - std::int64_t(l.k1) * m.k1;
}

// Test-only fault injection: flips the sign of kernel_K for one orbit member
// class, which breaks the orbit cancellation and must make the exact
// verification suites fail. Never set outside mutation tests.
void set_kernel_sign_flip_for_tests(bool enabled);
bool kernel_sign_flip_for_tests();

// K^N_{l,m} = |l+m| c(l,m) / (|l| |m|) restricted to |l|_inf, |m|_inf,
// |l+m|_inf <= N. Zero when l+m = 0.
double kernel_K(Wavenumber l, Wavenumber m, const KernelParams& params);

// K^N_{m,l} + K^N_{-m-l,l} + K^N_{m,-m-l}: vanishes identically, which is
// what makes the nonlinearity dissipative and white noise invariant.
double orbit_sum(Wavenumber m, Wavenumber l, const KernelParams& params);

// Per-mode normalized energy sum
//   sum_l c(l,k-l)^2 / ( |k-l|^2 (|l|^2+|k-l|^2)^2 ),
// over l with l, k-l != 0 and |l|_inf, |k-l|_inf <= N. Under wolf scaling
// lambda^2 nu^{-1} * sigma_energy -> C pi/4.
double sigma_energy(Wavenumber k, const KernelParams& params, int threads = 1);

// Variational-bound weight
//   sum_l c(l,k-l)^2 / ( |l|^2 |k-l|^2 (|l|^2+|k-l|^2) ).
// Symmetrizing the sigma_energy summand in l <-> m shows this equals
// 2 * sigma_energy identically, so lambda^2 * sigma_variational -> C pi/2
// under wolf scaling with nu = 1.
double sigma_variational(Wavenumber k, const KernelParams& params, int threads = 1);

// sum_{l != 0, |l|_inf <= N} (l1^2-l2^2)^2 / |l|^6; divided by log N this
// converges to pi.
double sigma_zero_mode(const KernelParams& params, int threads = 1);

// Signed inner sum of the chaos-lowering kernel at k:
//   sum_l c(k,-l) c(l,k-l) / ( |l|^2 (|l|^2+|k-l|^2) ),
// same triple cutoff indicator as kernel_K products. |result| stays within
// a constant times |k|^2 log N.
double sigma_a_minus(Wavenumber k, const KernelParams& params, int threads = 1);

}  // namespace akpz
