#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "akpz/chaos_ops.hpp"
#include "akpz/dynamics.hpp"
#include "akpz/stats.hpp"

namespace akpz {

// Tolerance bands for the quantitative verdicts. The shipped defaults are
// the pinned acceptance values; configs/acceptance.cfg carries the same
// numbers in versioned form for CLI runs.
struct Tolerances {
    std::string version = "1";
    double mc_sigmas = 4.0;              // MC agreement bands
    double qv_ratio_band = 0.10;         // QV constant at the largest cutoff
    double log_ratio_band = 0.05;        // sigma/log N increment fits
    double var_term1_band = 0.10;        // variational term (I)
    double var_term_growth = 1.25;       // terms (II)-(IV): last <= growth * max(prev)
    double short_time_slope_lo = 0.8;
    double short_time_slope_hi = 1.2;
    double energy_exponent_band = 0.30;  // fixed-coupling (log N)^{1/2} exponent
    double energy_flat_band = 0.20;      // wolf-scaling drift of E[sup|B|^2]^{1/2}
    double cg_rel_tolerance = 1e-8;
    double exact_rel = 1e-12;            // exact identity suites
    double conclusive_fraction = 0.25;   // stderr < fraction * band for a verdict
};

Tolerances load_tolerances(const std::string& path);  // key = value, [tolerances] section

struct EstimateRow {
    std::string label;
    double value = 0;
    double stderr_ = 0;
    double n_samples = 0;
    double target = std::nan("");
};

enum class VerdictStatus { pass, fail, inconclusive };

struct Verdict {
    std::string criterion;
    VerdictStatus status = VerdictStatus::inconclusive;
    double value = 0;
    std::string band;
    std::string note;
};

struct ExperimentReport {
    std::string name;
    std::vector<std::string> grid;
    std::vector<EstimateRow> estimates;
    std::map<std::string, double> fitted;
    std::vector<Verdict> verdicts;
    double runtime_seconds = 0;
    std::uint64_t seed = 0;
    std::string tolerances_version;
    int threads = 1;

    bool passed() const;
    void add(EstimateRow row) { estimates.push_back(std::move(row)); }
    void verdict(const std::string& criterion, bool ok, double value, const std::string& band,
                 const std::string& note = "");
    void verdict_status(const std::string& criterion, VerdictStatus st, double value,
                        const std::string& band, const std::string& note = "");

    std::string to_json() const;
    std::string estimates_csv() const;  // label,value,stderr,n,target
    std::string plot_csv() const;       // x,y,yerr,target per estimate index
    void write_bundle(const std::string& dir) const;
    void print_summary(std::ostream& os) const;
};

// Deterministic ensemble map: trajectory i runs with seed derived from
// (seed, i); results are reduced in index order, so estimates are identical
// for any thread count.
std::vector<std::vector<double>> run_ensemble(int n_traj, std::uint64_t seed, int threads,
                                              const std::function<std::vector<double>(
                                                  int, std::uint64_t)>& per_trajectory);

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

struct QvLimitOptions {
    std::vector<int> det_grid = {256, 512, 1024, 2048, 4096, 8192, 16384};
    int mc_cutoff = 16;
    int mc_trajectories = 500;
    double mc_t_final = 0.5;
    double mc_dt = 0.0;  // 0: from the stability policy
    std::vector<int> remainder_grid = {8, 16, 32, 64};
    double c_scale = 1.0;
    double nu = 1.0;
    std::uint64_t seed = 20240801;
    int threads = 1;
};
ExperimentReport exp_qv_limit(const TestFunction& phi, const QvLimitOptions& opts,
                              const Tolerances& tol = {});

struct LaplaceOptions {
    std::vector<int> n_grid = {8, 16, 32};
    std::vector<double> lambda_grid = {0.5, 1.0, 2.0, 4.0};
    double t_final = 14.0;  // e^{-lambda T} < 1e-3 at the smallest lambda
    double dt = 0.0;  // 0: from the stability policy
    int trajectories = 120;
    double tail_budget = 1e-3;
    double c_scale = 1.0;
    // OU closed-form regression
    int ou_cutoff = 4;
    double ou_dt = 0.02;
    int ou_trajectories = 400;
    std::uint64_t seed = 20240802;
    int threads = 1;
};
ExperimentReport exp_laplace_sandwich(const TestFunction& phi, const LaplaceOptions& opts,
                                      const Tolerances& tol = {});

struct VariationalOptions {
    std::vector<int> term1_grid = {256, 1024, 4096};
    std::vector<int> term_grid = {8, 16, 32, 48};
    std::vector<int> cg_grid = {8, 16};
    double lambda_resolvent = 1.0;
    double c_scale = 1.0;
    int cg_max_iters = 500;
    std::uint64_t seed = 20240803;
    int threads = 1;
};
ExperimentReport exp_variational_bound(const TestFunction& phi, const VariationalOptions& opts,
                                       const Tolerances& tol = {});

struct ZeroModeOptions {
    std::vector<int> n_grid = {8, 16, 32};
    double t_final = 1.0;
    double dt = 0.0;  // 0: from the stability policy
    int trajectories = 400;
    double c_scale = 1.0;
    std::uint64_t seed = 20240804;
    int threads = 1;
};
ExperimentReport exp_zero_mode(const ZeroModeOptions& opts, const Tolerances& tol = {});

struct ShortTimeOptions {
    int cutoff = 32;
    double t_final = 0.5;
    double dt = 0.0;        // 0: from the stability policy
    double fit_t_min = 0.05;  // fit over [max(10 dt, fit_t_min), T]
    int trajectories = 400;
    double c_scale = 1.0;
    bool fixed_coupling_companion = true;
    std::uint64_t seed = 20240805;
    int threads = 1;
};
ExperimentReport exp_short_time_energy(const TestFunction& phi, const ShortTimeOptions& opts,
                                       const Tolerances& tol = {});

struct EnergyEstimateOptions {
    std::vector<int> n_grid = {4, 8, 16, 32};
    double t_final = 0.5;
    double fixed_lambda = 1.0;
    double nu = 1.0;
    int trajectories = 300;
    double c_scale = 1.0;
    std::uint64_t seed = 20240806;
    int threads = 1;
};
ExperimentReport exp_energy_estimate(const TestFunction& phi, const EnergyEstimateOptions& opts,
                                     const Tolerances& tol = {});

struct SheCherryOptions {
    std::vector<int> n_grid = {64, 256};
    double t_final = 0.25;
    double dt = 0.01;
    int trajectories = 100;
    double c_scale = 1.0;
    std::uint64_t seed = 20240807;
    int threads = 1;
};
ExperimentReport exp_she_cherry(const TestFunction& phi, const SheCherryOptions& opts,
                                const Tolerances& tol = {});

struct InvarianceOptions {
    std::vector<int> n_grid = {4, 8, 16};
    double t_final = 0.12;
    double dt = 0.0;  // 0: from the stability policy
    int trajectories = 10000;
    bool dt_halving = true;
    double c_scale = 1.0;
    double nu = 1.0;
    std::uint64_t seed = 20240808;
    int threads = 1;
};
// Full-dynamics invariance of white noise: dihedral-orbit mode variances and
// a basket of ten degree-2 Wick observables, stationary within the MC band.
ExperimentReport exp_invariance(const InvarianceOptions& opts, const Tolerances& tol = {});

// Conjugate-gradient maximizer of 2<F,G> - <MG,G> over degree-2 kernels,
// M = (lambda - L0) - A-(lambda - L0)^{-1}A+ - A+(lambda - L0)^{-1}A-.
struct CgResult {
    CylinderFunctional g;
    double objective = 0;
    int iterations = 0;
    double rel_residual = 0;
};
CgResult cg_maximize(const CylinderFunctional& f, const KernelParams& params,
                     double lambda_resolvent, double rel_tol, int max_iters);

}  // namespace akpz
