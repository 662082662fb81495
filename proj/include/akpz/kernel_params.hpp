#pragma once

#include <cmath>

#include "akpz/errors.hpp"

namespace akpz {

enum class ScalingMode { fixed, wolf_scaling };

// Cutoff and coupling constants. In wolf_scaling mode the couplings obey
// lambda * nu^{-1/2} = sqrt(C / log N) exactly, the regime in which the
// log-divergent kernel sums stay order one.
struct KernelParams {
    int n = 0;           // Fourier cutoff, sup-norm
    double c_scale = 1;  // the constant C in the scaling law
    double lambda = 0;
    double nu = 1;
    ScalingMode mode = ScalingMode::fixed;

    static KernelParams fixed(int n, double lambda, double nu = 1.0, double c_scale = 1.0) {
        if (n < 1) throw DomainError("KernelParams: N must be >= 1");
        if (nu <= 0) throw DomainError("KernelParams: nu must be positive");
        if (lambda < 0) throw DomainError("KernelParams: lambda must be >= 0");
        if (c_scale <= 0) throw DomainError("KernelParams: C must be positive");
        return {n, c_scale, lambda, nu, ScalingMode::fixed};
    }

    static KernelParams wolf(int n, double c_scale = 1.0, double nu = 1.0) {
        if (n < 2) throw DomainError("KernelParams: wolf scaling needs N >= 2");
        if (nu <= 0) throw DomainError("KernelParams: nu must be positive");
        if (c_scale <= 0) throw DomainError("KernelParams: C must be positive");
        double lambda = std::sqrt(nu * c_scale / std::log(double(n)));
        return {n, c_scale, lambda, nu, ScalingMode::wolf_scaling};
    }

    double lambda_sq_over_nu() const { return lambda * lambda / nu; }
};

}  // namespace akpz
