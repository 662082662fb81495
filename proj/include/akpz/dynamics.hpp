#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "akpz/chaos_ops.hpp"
#include "akpz/fft_grid.hpp"
#include "akpz/fourier_field.hpp"
#include "akpz/rng.hpp"
#include "akpz/sim_config.hpp"

namespace akpz {

// Real L^2 pairing sum_k f_k phi_{-k} (zero modes included).
double pair_real(const FourierField& f, const TestFunction& phi);

// Quadratic AKPZ nonlinearity, pseudospectral with dealiasing or by direct
// convolution. One instance per thread of execution (it owns FFT buffers).
class NonlinearityOp {
  public:
    NonlinearityOp(const KernelParams& params, Dealias dealias, FieldForm form,
                   int grid_override = 0);

    // u-form: N_k = sum_{l+m=k} K^N_{l,m} u_l u_m on 0 < |k|_inf <= N.
    // h-form: N_k = sum_{l+m=k} c(l,m) h_l h_m (projected factors), zero
    // mode retained.
    FourierField apply(const FourierField& f);

    int grid_size() const { return grid_ ? grid_->size() : 0; }
    static int min_grid_size(int cutoff, Dealias dealias);

  private:
    FourierField apply_fft(const FourierField& f);
    FourierField apply_direct(const FourierField& f) const;

    KernelParams params_;
    Dealias dealias_;
    FieldForm form_;
    std::unique_ptr<FftGrid> grid_;
};

// Convenience single-shot wrappers (tests, oracles).
FourierField nonlinearity_u(const FourierField& u, const KernelParams& params,
                            Dealias dealias = Dealias::padding_2x);
FourierField nonlinearity_h(const FourierField& h, const KernelParams& params,
                            Dealias dealias = Dealias::padding_2x);

// One trajectory of the truncated system. The linear/noise part uses the
// exact OU transition per mode; the nonlinearity enters through the chosen
// exponential integrator. Hermitian symmetry is structural (half-lattice
// state), so it survives every step exactly.
class Simulator {
  public:
    explicit Simulator(const SimConfig& cfg);

    const SimConfig& config() const { return cfg_; }
    const FourierField& field() const { return field_; }
    void set_field(const FourierField& f);
    double time() const { return double(step_) * cfg_.dt; }
    long step_index() const { return step_; }
    Rng& rng() { return rng_; }

    // N[u(t)] at the current state; cached until the next step.
    const FourierField& nonlinearity();

    void step();

    void save_state(std::ostream& os) const;
    void load_state(std::istream& is);

  private:
    void init_tables();
    void sample_initial_condition();

    SimConfig cfg_;
    FourierField field_;
    Rng rng_;
    long step_ = 0;
    NonlinearityOp op_;
    std::optional<FourierField> nl_cache_;

    // per half-lattice index
    std::vector<double> decay_, decay_half_, phi1_, phi1_half_, noise_std_;
};

struct Observables {
    // Time-integrated nonlinearity B_t(phi); weight defaults to the dynamics
    // lambda but can differ (e.g. accumulating wolf-scaled B along a
    // lambda = 0 stochastic-heat trajectory).
    std::vector<std::pair<std::string, TestFunction>> b_integrals;
    double b_lambda = -1.0;  // -1: use cfg.params.lambda

    // (nu/2) int u(Delta phi) ds, the linear-part companion.
    std::vector<std::pair<std::string, TestFunction>> linear_integrals;

    // Dynkin-residual martingales M_t(F) with quadratic variation
    // nu * int E^N(F)(u_s) ds; degree(F) <= 2.
    std::vector<std::pair<std::string, CylinderFunctional>> martingales;

    int snapshot_stride = 0;  // 0: none
    bool record_zero_mode = false;
    bool record_b_integrands = false;  // per-node integrand values alongside B

    bool needs_nonlinearity(double dynamics_lambda) const;
};

struct MartingalePath {
    std::vector<double> m;
    std::vector<double> qv;

    bool operator==(const MartingalePath&) const = default;
};

struct TrajectoryRecord {
    std::vector<double> times;  // all integrator nodes
    std::vector<double> snapshot_times;
    std::vector<FourierField> snapshots;
    std::map<std::string, std::vector<double>> b_paths;
    std::map<std::string, std::vector<double>> b_integrand_paths;
    std::map<std::string, std::vector<double>> linear_paths;
    std::map<std::string, MartingalePath> martingale_paths;
    std::vector<double> zero_mode_path;
    std::array<std::uint64_t, 4> final_rng_state{};

    bool operator==(const TrajectoryRecord&) const = default;
};

TrajectoryRecord run(const SimConfig& cfg, const Observables& obs);

// Same trajectory with periodic checkpointing; if checkpoint_path exists the
// run resumes from it and the final record is bit-identical to an
// uninterrupted run. stop_after >= 0 aborts early after that many further
// steps (used to exercise the resume path).
TrajectoryRecord run_resumable(const SimConfig& cfg, const Observables& obs,
                               const std::string& checkpoint_path, long checkpoint_every,
                               long stop_after = -1);

}  // namespace akpz
