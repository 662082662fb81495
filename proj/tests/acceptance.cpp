// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// criterion fails. Criteria A1..A12 with their tolerance bands are pinned
// here; configs/acceptance.cfg mirrors the same numbers for CLI runs.
//
// Known red: A8's first clause compares term (I) against delta C pi ||phi||^2.
// The pinned variational sum is identically twice the QV sum, so the measured
// constant is 2 C pi and the clause fails at ratio ~ 2. It is reported
// honestly together with a diagnostic row for the corrected constant; see the
// project notes for the analysis.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "akpz/experiments.hpp"
#include "akpz/kernels.hpp"
#include "akpz/martingale.hpp"
#include "akpz/spectral_ops.hpp"

using namespace akpz;

namespace {

constexpr double kPi = 3.14159265358979323846;
int g_failures = 0;

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double s() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

void report(const std::string& id, bool pass, const std::string& detail, double seconds) {
    std::printf("[%s] %s: %s (%.1f s)\n", pass ? "PASS" : "FAIL", id.c_str(), detail.c_str(),
                seconds);
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

ChaosKernel random_real_kernel(int degree, int extent, int entries, Rng& rng) {
    ChaosKernel k(degree);
    for (int i = 0; i < entries; ++i) {
        KernelTuple t;
        t.degree = degree;
        for (int d = 0; d < degree; ++d) {
            Wavenumber w{0, 0};
            while (w.is_zero()) {
                w.k1 = int(rng.next_u64() % (2 * extent + 1)) - extent;
                w.k2 = int(rng.next_u64() % (2 * extent + 1)) - extent;
            }
            t.k[std::size_t(d)] = w;
        }
        t.normalize();
        Complex v{rng.normal(), rng.normal()};
        k.add(t, v);
        k.add(t.negated(), std::conj(v));
    }
    return k;
}

const TestFunction kPhi = TestFunction::mode_pair({1, 0});

// A1: orbit cancellation, exhaustive over |m|,|l|,|m+l| <= 8 (sup norm)
void a1() {
    Timer t;
    auto p = KernelParams::fixed(8, 1.0, 1.0);
    double worst = 0;
    long pairs = 0;
    for (int m1 = -8; m1 <= 8; ++m1)
        for (int m2 = -8; m2 <= 8; ++m2)
            for (int l1 = -8; l1 <= 8; ++l1)
                for (int l2 = -8; l2 <= 8; ++l2) {
                    Wavenumber m{m1, m2}, l{l1, l2};
                    if (m.is_zero() || l.is_zero() || (m + l).is_zero()) continue;
                    if ((m + l).norm_inf() > 8) continue;
                    double scale = std::max({std::abs(kernel_K(m, l, p)),
                                             std::abs(kernel_K(-(m + l), l, p)),
                                             std::abs(kernel_K(m, -(m + l), p)), 1.0});
                    worst = std::max(worst, std::abs(orbit_sum(m, l, p)) / scale);
                    ++pairs;
                }
    report("A1 orbit identity", worst <= 1e-12,
           fmt(double(pairs)) + " pairs, worst rel " + fmt(worst) + " <= 1e-12", t.s());
}

// A2: Poisson residual identically zero for 50 random phi at N = 8
void a2() {
    Timer t;
    Rng rng(802);
    double worst = 0;
    for (int trial = 0; trial < 50; ++trial) {
        TestFunction phi;
        int modes = 1 + int(rng.next_u64() % 3);
        for (int q = 0; q < modes; ++q) {
            Wavenumber k{int(rng.next_u64() % 17) - 8, int(rng.next_u64() % 17) - 8};
            if (k.is_zero()) k = {1, 1};
            phi.set_coeff(k, Complex{rng.normal(), rng.normal()});
        }
        auto p = KernelParams::fixed(8, 0.5 + rng.uniform(), 0.5 + rng.uniform());
        auto h = poisson_solve_nonlinearity(phi, p);
        auto resid = apply_L0(h, p);
        auto target = nonlinearity_kernel(phi, p);
        double scale = std::max(p.lambda * target.max_abs_entry(), 1e-300);
        double err = 0;
        target.for_each([&](const KernelTuple& tt, Complex v) {
            err = std::max(err, std::abs(resid.kernel(2).entry(tt) - p.lambda * v));
        });
        resid.kernel(2).for_each([&](const KernelTuple& tt, Complex v) {
            err = std::max(err, std::abs(v - p.lambda * target.entry(tt)));
        });
        worst = std::max(worst, err / scale);
    }
    report("A2 poisson residual", worst <= 1e-14, "50 random phi at N=8, worst rel " + fmt(worst),
           t.s());
}

// A3: adjointness and E[LF] = 0 on 100 random degree <= 2 pairs
void a3() {
    Timer t;
    Rng rng(803);
    auto p = KernelParams::fixed(6, 0.9, 1.1);
    double worst_adj = 0, worst_mean = 0;
    for (int trial = 0; trial < 100; ++trial) {
        int deg = 1 + int(rng.next_u64() % 2);
        auto f = CylinderFunctional::from_kernel(random_real_kernel(deg, 6, 6, rng));
        auto g = CylinderFunctional::from_kernel(random_real_kernel(deg + 1, 6, 6, rng));
        double scale = std::sqrt(f.l2_sq() * g.l2_sq());
        worst_adj = std::max(worst_adj, std::abs(adjointness_check(f, g, p)) / scale);

        auto f2 = CylinderFunctional::from_kernel(random_real_kernel(2, 6, 5, rng));
        f2.constant = Complex{rng.normal(), 0};
        auto lf = apply_L0(f2, p);
        lf.accumulate(apply_Aplus(f2, p));
        lf.accumulate(apply_Aminus(f2, p));
        worst_mean = std::max(worst_mean, std::abs(wick_expectation({&lf})));
    }
    report("A3 adjointness + stationarity", worst_adj <= 1e-12 && worst_mean <= 1e-12,
           "worst adjointness " + fmt(worst_adj) + ", worst E[LF] " + fmt(worst_mean), t.s());
}

// A4 + A5 share the deterministic sweeps.
void a4_a5() {
    Timer t45;
    const std::vector<int> grid = {256, 512, 1024, 2048, 4096, 8192, 16384};
    std::vector<double> se, s0, logn;
    for (int n : grid) {
        auto p = KernelParams::fixed(n, 1.0, 1.0);
        se.push_back(sigma_energy({1, 0}, p));
        s0.push_back(sigma_zero_mode(p));
        logn.push_back(std::log(double(n)));
    }
    double sweep_seconds = t45.s();

    {  // A4 deterministic route: ratio to 4 C pi ||phi||^2, monotone approach
        Timer t;
        std::vector<double> ratios;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            double lam2 = 1.0 / logn[i];  // wolf scaling, C = nu = 1
            double q = 16.0 * lam2 * 2.0 * se[i];  // phi = e_(1,0)+e_(-1,0): 2 |k|^2 |phi_k|^2
            ratios.push_back(q / (4.0 * kPi * 2.0));
        }
        bool monotone = true;
        for (std::size_t i = 1; i < ratios.size(); ++i)
            if (std::abs(ratios[i] - 1.0) > std::abs(ratios[i - 1] - 1.0) + 1e-9) monotone = false;
        bool ok_det = monotone && std::abs(ratios.back() - 1.0) <= 0.10;

        QvLimitOptions o;
        o.det_grid = {16};  // deterministic part handled above; keep the MC route
        o.mc_cutoff = 16;
        o.mc_trajectories = 500;
        o.mc_t_final = 0.5;
        o.remainder_grid = {8, 16, 32, 64};
        auto rep = exp_qv_limit(kPhi, o);
        double z = rep.fitted.at("qv_mc_z");
        bool ok_mc = z <= 4.0;

        report("A4 qv constant", ok_det && ok_mc,
               "det ratio(2^14) = " + fmt(ratios.back()) + " (band 0.10, monotone " +
                   (monotone ? "yes" : "NO") + "), MC z = " + fmt(z) + " <= 4 at N=16",
               t.s() + sweep_seconds * 0.5);
    }

    {  // A5 log asymptotics by increment fit
        Timer t;
        auto inc_fit = [&](const std::vector<double>& v) {
            std::vector<double> x(v.size()), y(v.size());
            for (std::size_t i = 0; i < v.size(); ++i) {
                x[i] = logn[i];
                y[i] = v[i];
            }
            return linear_fit(x, y).slope;
        };
        double slope_e = inc_fit(se);
        double slope_0 = inc_fit(s0);
        bool ok = std::abs(slope_e - kPi / 4) <= 0.05 * kPi / 4 &&
                  std::abs(slope_0 - kPi) <= 0.05 * kPi;
        report("A5 log asymptotics", ok,
               "sigma_energy slope " + fmt(slope_e) + " vs pi/4 = " + fmt(kPi / 4) +
                   ", sigma_zero_mode slope " + fmt(slope_0) + " vs pi = " + fmt(kPi) +
                   " (band 5%)",
               t.s() + sweep_seconds * 0.5);
    }
}

// A6: invariance of white noise under the full dynamics
void a6() {
    Timer t;
    InvarianceOptions o;
    o.n_grid = {4, 8, 16};
    o.trajectories = 10000;
    o.t_final = 0.12;
    o.dt_halving = true;
    auto rep = exp_invariance(o);
    report("A6 white-noise invariance", rep.passed(),
           "N in {4,8,16}, 10^4 trajectories, dt and dt/2, worst z = " +
               fmt(rep.fitted.at("worst_z")) + " <= 4",
           t.s());
}

// A7: Laplace sandwich
void a7() {
    Timer t;
    LaplaceOptions o;  // defaults: N in {8,16,32}, lambda in {0.5,1,2,4}, T = 14
    o.trajectories = 100;
    auto rep = exp_laplace_sandwich(kPhi, o);
    report("A7 laplace sandwich", rep.passed(),
           "delta_hat = " + fmt(rep.fitted.at("delta_hat")) + " > 0, ratios in [" +
               fmt(rep.fitted.at("ratio_min")) + ", " + fmt(rep.fitted.at("ratio_max")) +
               "], routes agree, OU closed form",
           t.s());
}

// A8: variational lower bound
void a8() {
    Timer t;
    VariationalOptions o;
    o.term1_grid = {256, 1024, 4096};
    o.term_grid = {8, 16, 32};
    o.cg_grid = {8, 16};
    auto rep = exp_variational_bound(kPhi, o);
    double stated = 0, corrected = 0;
    for (const auto& e : rep.estimates) {
        if (e.label == "term1_ratio_N4096") stated = e.value;
        if (e.label == "term1_ratio_corrected_N4096") corrected = e.value;
    }
    report("A8 variational bound", rep.passed(),
           "(I)/(delta C pi ||phi||^2) = " + fmt(stated) +
               " vs band 0.10 around 1 [stated constant unattainable: the sum is exactly twice "
               "the QV sum; corrected-constant ratio = " +
               fmt(corrected) + "]; terms (II)-(IV) bounded and CG >= line: " +
               (rep.passed() ? "yes" : "see subresults"),
           t.s());
    for (const auto& v : rep.verdicts)
        std::printf("    [%s] %s (value %.4g, band %s)\n",
                    v.status == VerdictStatus::pass ? "pass" : "fail", v.criterion.c_str(),
                    v.value, v.band.c_str());
    std::fflush(stdout);
}

// A9: zero-mode nontriviality
void a9() {
    Timer t;
    ZeroModeOptions o;  // N in {8,16,32}, t = 1
    auto rep = exp_zero_mode(o);
    std::string detail = "E[h0(1)^2] CI excludes 0 at N in {8,16,32}, SHE baseline exactly 0";
    report("A9 zero-mode nontriviality", rep.passed(), detail, t.s());
}

// A10: short-time energy slope
void a10() {
    Timer t;
    ShortTimeOptions o;  // N = 32
    auto rep = exp_short_time_energy(kPhi, o);
    double slope = 0;
    for (const auto& e : rep.estimates)
        if (e.label.rfind("loglog_slope_N", 0) == 0) slope = e.value;
    report("A10 short-time energy slope", rep.passed(),
           "log-log slope " + fmt(slope) + " in [0.8, 1.2] at N=32", t.s());
}

// A11: oracle equivalences
void a11() {
    Timer t;
    auto p = KernelParams::fixed(8, 1.0, 1.0);
    Rng rng(811);
    double worst_fft = 0, worst_chaos = 0;
    for (int rep_i = 0; rep_i < 5; ++rep_i) {
        auto u = sample_white_noise(8, rng);
        auto direct = nonlinearity_u(u, p, Dealias::direct);
        for (auto mode : {Dealias::padding_2x, Dealias::padding_3_2}) {
            auto fft = nonlinearity_u(u, p, mode);
            for (std::size_t i = 0; i < fft.half_count(); ++i)
                worst_fft = std::max(worst_fft,
                                     std::abs(fft.half_entry(i) - direct.half_entry(i)));
        }
        TestFunction phi = TestFunction::mode_pair({1, 1}, {0.8, -0.3});
        auto kernel = nonlinearity_kernel(phi, p);
        auto f = CylinderFunctional::from_kernel(kernel);
        double via_chaos = evaluate_real(f, u);
        double via_fft = pair_real(nonlinearity_u(u, p), phi);
        worst_chaos = std::max(worst_chaos, std::abs(via_chaos - via_fft));
    }
    report("A11 oracle equivalence", worst_fft <= 1e-12 && worst_chaos <= 1e-10,
           "fft vs direct " + fmt(worst_fft) + " <= 1e-12; chaos vs pairing " + fmt(worst_chaos) +
               " <= 1e-10",
           t.s());
}

// A12: energy-estimate scaling
void a12() {
    Timer t;
    EnergyEstimateOptions o;  // N in {4..32}, fixed lambda = 1 and wolf
    auto rep = exp_energy_estimate(kPhi, o);
    report("A12 energy-estimate scaling", rep.passed(),
           "fixed-coupling exponent " + fmt(rep.fitted.at("fixed_coupling_exponent")) +
               " (band 0.30 around 1), wolf drift " + fmt(rep.fitted.at("wolf_drift")) +
               " <= 0.20",
           t.s());
}

}  // namespace

int main() {
    Timer total;
    std::printf("acceptance suite (tolerances version 1)\n");
    a1();
    a2();
    a3();
    a11();
    a4_a5();
    a8();
    a10();
    a9();
    a6();
    a12();
    a7();
    std::printf("%d/12 criteria passed, total %.0f s\n", 12 - g_failures, total.s());
    return g_failures == 0 ? 0 : 1;
}
