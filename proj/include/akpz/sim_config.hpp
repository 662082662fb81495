#pragma once

#include <cmath>
#include <cstdint>

#include "akpz/errors.hpp"
#include "akpz/kernel_params.hpp"

namespace akpz {

enum class Integrator { exp_euler, exp_midpoint };
enum class Dealias { padding_2x, padding_3_2, direct };
enum class FieldForm { u_form, h_form };

struct SimConfig {
    KernelParams params;
    double dt = 0.01;
    double t_final = 1.0;
    Integrator integrator = Integrator::exp_euler;
    std::uint64_t seed = 1;
    Dealias dealias = Dealias::padding_2x;
    int record_stride = 1;
    FieldForm form = FieldForm::u_form;

    // Budget for dt * nu * N^2. The OU part is integrated exactly, so this
    // guards only the explicit nonlinear substep; experiment configs may
    // raise it (their dt-refinement columns check the consequences).
    double stability_budget = 0.5;

    // 0 = derive the dealiasing grid from the cutoff; a nonzero value is
    // validated against the alias-free minimum.
    int grid_size_override = 0;

    long num_steps() const { return std::lround(t_final / dt); }

    void validate() const {
        if (dt <= 0) throw ConfigError("SimConfig: dt must be positive");
        if (t_final <= 0) throw ConfigError("SimConfig: T must be positive");
        if (record_stride < 1) throw ConfigError("SimConfig: record_stride must be >= 1");
        if (num_steps() < 1) throw ConfigError("SimConfig: T under one step");
        double load = dt * params.nu * double(params.n) * double(params.n);
        if (load > stability_budget)
            throw ConfigError("SimConfig: dt_nu_N2 = " + std::to_string(load) +
                              " exceeds stability budget " + std::to_string(stability_budget));
    }
};

}  // namespace akpz
