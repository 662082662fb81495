#include "akpz/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "akpz/field_io.hpp"
#include "akpz/kernels.hpp"
#include "akpz/spectral_ops.hpp"

namespace akpz {

double pair_real(const FourierField& f, const TestFunction& phi) {
    Complex s{f.zero_mode() * phi.zero_mode(), 0.0};
    for (const auto& [k, v] : phi.canonical_coeffs()) {
        // f_k phi_{-k} + f_{-k} phi_k = 2 Re(f_k conj(phi_k))
        s += f.coeff(k) * std::conj(v) + f.coeff(-k) * v;
    }
    return s.real();
}

int NonlinearityOp::min_grid_size(int cutoff, Dealias dealias) {
    switch (dealias) {
        case Dealias::padding_2x: return 4 * cutoff + 2;   // full product alias-free
        case Dealias::padding_3_2: return 3 * cutoff + 2;  // retained modes alias-free
        case Dealias::direct: return 0;
    }
    return 0;
}

NonlinearityOp::NonlinearityOp(const KernelParams& params, Dealias dealias, FieldForm form,
                               int grid_override)
    : params_(params), dealias_(dealias), form_(form) {
    if (dealias == Dealias::direct) {
        if (grid_override != 0) throw ConfigError("NonlinearityOp: direct mode takes no grid");
        return;
    }
    int need = min_grid_size(params.n, dealias);
    int size = grid_override == 0 ? FftGrid::next_fast_size(need) : grid_override;
    if (size < need)
        throw ConfigError("NonlinearityOp: grid " + std::to_string(size) +
                          " below alias-free minimum " + std::to_string(need));
    grid_ = std::make_unique<FftGrid>(size);
}

FourierField NonlinearityOp::apply(const FourierField& f) {
    return dealias_ == Dealias::direct ? apply_direct(f) : apply_fft(f);
}

FourierField NonlinearityOp::apply_fft(const FourierField& f) {
    const int n = params_.n;
    const int L = grid_->size();
    grid_->clear_a();
    Complex* w = grid_->buf_a();

    // Pack both gradient-like factors into one complex transform: the fields
    // v_i(k) = k_i f_k (/|k| in u-form) are anti-Hermitian, so their physical
    // transforms are purely imaginary and v1 + i v2 separates as Im/-Re.
    f.for_each_canonical([&](Wavenumber k, Complex c) {
        if (k.norm_inf() > n || c == Complex{0, 0}) return;
        double inv = form_ == FieldForm::u_form ? 1.0 / k.norm() : 1.0;
        Complex v1 = double(k.k1) * inv * c;
        Complex v2 = double(k.k2) * inv * c;
        w[grid_->wrap_index(k)] = v1 + Complex{0, 1} * v2;
        w[grid_->wrap_index(-k)] = -std::conj(v1) - Complex{0, 1} * std::conj(v2);
    });

    grid_->backward_a();
    const std::size_t total = std::size_t(L) * L;
    for (std::size_t i = 0; i < total; ++i) {
        double p = w[i].imag(), q = w[i].real();
        w[i] = Complex{p * p - q * q, 0.0};  // conv(v2,v2) - conv(v1,v1)
    }
    grid_->forward_a();

    const double scale = 1.0 / (double(L) * double(L));
    FourierField out(f.cutoff());
    for (std::size_t i = 0; i < out.half_count(); ++i) {
        Wavenumber k = out.half_wavenumber(i);
        if (k.norm_inf() > n) continue;
        Complex c = w[grid_->wrap_index(k)] * scale;
        out.set_half_entry(i, form_ == FieldForm::u_form ? c * k.norm() : c);
    }
    if (form_ == FieldForm::h_form) out.set_zero_mode(w[0].real() * scale);
    return out;
}

FourierField NonlinearityOp::apply_direct(const FourierField& f) const {
    const int n = params_.n;
    FourierField out(f.cutoff());
    auto conv_at = [&](Wavenumber k) -> Complex {
        Complex s{0, 0};
        const int lo1 = std::max(-n, k.k1 - n), hi1 = std::min(n, k.k1 + n);
        const int lo2 = std::max(-n, k.k2 - n), hi2 = std::min(n, k.k2 + n);
        for (int a = lo1; a <= hi1; ++a)
            for (int b = lo2; b <= hi2; ++b) {
                Wavenumber l{a, b};
                Wavenumber m = k - l;
                if (l.is_zero() || m.is_zero()) continue;
                if (form_ == FieldForm::u_form) {
                    s += kernel_K(l, m, params_) * f.coeff(l) * f.coeff(m);
                } else {
                    s += double(c_form(l, m)) * f.coeff(l) * f.coeff(m);
                }
            }
        return s;
    };
    for (std::size_t i = 0; i < out.half_count(); ++i) {
        Wavenumber k = out.half_wavenumber(i);
        if (k.norm_inf() > n) continue;
        out.set_half_entry(i, conv_at(k));
    }
    if (form_ == FieldForm::h_form) out.set_zero_mode(conv_at({0, 0}).real());
    return out;
}

FourierField nonlinearity_u(const FourierField& u, const KernelParams& params, Dealias dealias) {
    NonlinearityOp op(params, dealias, FieldForm::u_form);
    return op.apply(u);
}

FourierField nonlinearity_h(const FourierField& h, const KernelParams& params, Dealias dealias) {
    NonlinearityOp op(params, dealias, FieldForm::h_form);
    return op.apply(h);
}

Simulator::Simulator(const SimConfig& cfg)
    : cfg_(cfg),
      field_(cfg.params.n),
      rng_(cfg.seed),
      op_(cfg.params, cfg.dealias, cfg.form, cfg.grid_size_override) {
    cfg_.validate();
    init_tables();
    sample_initial_condition();
}

void Simulator::init_tables() {
    const double dt = cfg_.dt, nu = cfg_.params.nu;
    const std::size_t n = field_.half_count();
    decay_.resize(n);
    decay_half_.resize(n);
    phi1_.resize(n);
    phi1_half_.resize(n);
    noise_std_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double k2 = field_.half_wavenumber(i).norm_sq();
        double a = 0.5 * nu * k2;
        decay_[i] = std::exp(-a * dt);
        decay_half_[i] = std::exp(-0.5 * a * dt);
        phi1_[i] = (1.0 - decay_[i]) / (a * dt);
        phi1_half_[i] = (1.0 - decay_half_[i]) / (0.5 * a * dt);
        double var = 1.0 - decay_[i] * decay_[i];  // stationary-normalized OU variance
        if (cfg_.form == FieldForm::h_form) var /= k2;
        noise_std_[i] = std::sqrt(0.5 * var);
    }
}

void Simulator::sample_initial_condition() {
    field_ = cfg_.form == FieldForm::u_form ? sample_white_noise(cfg_.params.n, rng_)
                                            : sample_gff(cfg_.params.n, rng_);
}

void Simulator::set_field(const FourierField& f) {
    if (f.cutoff() != cfg_.params.n) throw DomainError("Simulator::set_field: cutoff mismatch");
    field_ = f;
    nl_cache_.reset();
}

const FourierField& Simulator::nonlinearity() {
    if (!nl_cache_) nl_cache_ = op_.apply(field_);
    return *nl_cache_;
}

void Simulator::step() {
    const double dt = cfg_.dt;
    const double lam = cfg_.params.lambda;
    const bool nonlinear = lam != 0.0;

    const FourierField* drift = nullptr;
    FourierField drift_mid;
    if (nonlinear) {
        drift = &nonlinearity();
        if (cfg_.integrator == Integrator::exp_midpoint) {
            FourierField mid(field_.cutoff());
            for (std::size_t i = 0; i < field_.half_count(); ++i) {
                Complex v = decay_half_[i] * field_.half_entry(i) +
                            (0.5 * dt) * phi1_half_[i] * lam * drift->half_entry(i);
                mid.set_half_entry(i, v);
            }
            if (cfg_.form == FieldForm::h_form)
                mid.set_zero_mode(field_.zero_mode() + 0.5 * dt * lam * drift->zero_mode());
            drift_mid = op_.apply(mid);
            drift = &drift_mid;
        }
    }

    double max_abs = 0.0;
    for (std::size_t i = 0; i < field_.half_count(); ++i) {
        Complex v = decay_[i] * field_.half_entry(i);
        if (nonlinear) {
            double w = cfg_.integrator == Integrator::exp_midpoint ? decay_half_[i] : phi1_[i];
            v += dt * w * lam * drift->half_entry(i);
        }
        double s = noise_std_[i];
        v += Complex{s * rng_.normal(), s * rng_.normal()};
        field_.set_half_entry(i, v);
        max_abs = std::max(max_abs, std::max(std::abs(v.real()), std::abs(v.imag())));
    }
    if (cfg_.form == FieldForm::h_form && nonlinear)
        field_.set_zero_mode(field_.zero_mode() + dt * lam * drift->zero_mode());

    ++step_;
    nl_cache_.reset();
    if (!std::isfinite(max_abs) || max_abs > 1e8)
        throw BlowupError("integration blew up (mode amplitude " + std::to_string(max_abs) + ")",
                          time(), step_, max_abs);
}

void Simulator::save_state(std::ostream& os) const {
    os.write("AKPZSIM1", 8);
    auto put_u64 = [&](std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); };
    put_u64(std::uint64_t(step_));
    for (auto w : rng_.state()) put_u64(w);
    write_field_binary(os, field_);
}

void Simulator::load_state(std::istream& is) {
    char magic[8];
    is.read(magic, 8);
    if (!is || std::string(magic, 8) != "AKPZSIM1") throw IoError("simulator state: bad magic");
    auto get_u64 = [&]() {
        std::uint64_t v;
        is.read(reinterpret_cast<char*>(&v), 8);
        if (!is) throw IoError("simulator state: truncated");
        return v;
    };
    step_ = long(get_u64());
    std::array<std::uint64_t, 4> st{};
    for (auto& w : st) w = get_u64();
    rng_.set_state(st);
    field_ = read_field_binary(is);
    if (field_.cutoff() != cfg_.params.n) throw IoError("simulator state: cutoff mismatch");
    nl_cache_.reset();
}

bool Observables::needs_nonlinearity(double dynamics_lambda) const {
    double eff = b_lambda < 0 ? dynamics_lambda : b_lambda;
    return !b_integrals.empty() && eff != 0.0;
}

namespace {

struct PathAccum {
    double prev = 0;
    double integral = 0;
    void start(double v) { prev = v; }
    void advance(double dt, double v) {
        integral += 0.5 * dt * (prev + v);
        prev = v;
    }
};

struct MartAccum {
    CylinderFunctional f;
    CylinderFunctional l0f;
    EnergyEvaluator energy;
    NonlinearGeneratorEvaluator gen_rows;
    double f0 = 0;
    PathAccum gen, qv;

    MartAccum(const CylinderFunctional& functional, const KernelParams& params)
        : f(functional), l0f(apply_L0(functional, params)), energy(functional),
          gen_rows(functional, params.n) {
        if (functional.max_degree() > 2)
            throw CapacityError("martingale observable: degree must be <= 2");
    }
};

struct RunState {
    Simulator sim;
    TrajectoryRecord record;
    std::vector<PathAccum> b_acc;
    std::vector<PathAccum> lin_acc;
    std::vector<MartAccum> mart_acc;
    double b_lambda;
    bool need_nl;

    RunState(const SimConfig& cfg, const Observables& obs) : sim(cfg) {
        b_lambda = obs.b_lambda < 0 ? cfg.params.lambda : obs.b_lambda;
        need_nl = obs.needs_nonlinearity(cfg.params.lambda);
        b_acc.resize(obs.b_integrals.size());
        lin_acc.resize(obs.linear_integrals.size());
        mart_acc.reserve(obs.martingales.size());
        for (const auto& [name, f] : obs.martingales) {
            (void)name;
            mart_acc.emplace_back(f, cfg.params);
        }
        for (const auto& [name, phi] : obs.b_integrals) {
            record.b_paths[name] = {};
            if (obs.record_b_integrands) record.b_integrand_paths[name] = {};
        }
        for (const auto& [name, phi] : obs.linear_integrals) record.linear_paths[name] = {};
        for (const auto& [name, f] : obs.martingales) record.martingale_paths[name] = {};
    }

    void observe_node(const SimConfig& cfg, const Observables& obs, long node) {
        const double dt = cfg.dt;
        const FourierField& u = sim.field();
        const FourierField* nl = nullptr;
        if (need_nl || (cfg.params.lambda != 0.0 && !mart_acc.empty())) nl = &sim.nonlinearity();

        record.times.push_back(double(node) * dt);

        for (std::size_t i = 0; i < obs.b_integrals.size(); ++i) {
            double v = b_lambda == 0.0 ? 0.0 : b_lambda * pair_real(*nl, obs.b_integrals[i].second);
            if (node == 0)
                b_acc[i].start(v);
            else
                b_acc[i].advance(dt, v);
            record.b_paths[obs.b_integrals[i].first].push_back(b_acc[i].integral);
            if (obs.record_b_integrands)
                record.b_integrand_paths[obs.b_integrals[i].first].push_back(v);
        }
        for (std::size_t i = 0; i < obs.linear_integrals.size(); ++i) {
            const auto& phi = obs.linear_integrals[i].second;
            Complex s{0, 0};
            for (const auto& [k, v] : phi.canonical_coeffs())
                s += -k.norm_sq() * (u.coeff(k) * std::conj(v) + u.coeff(-k) * v);
            double val = 0.5 * cfg.params.nu * s.real();
            if (node == 0)
                lin_acc[i].start(val);
            else
                lin_acc[i].advance(dt, val);
            record.linear_paths[obs.linear_integrals[i].first].push_back(lin_acc[i].integral);
        }
        for (std::size_t i = 0; i < mart_acc.size(); ++i) {
            auto& ma = mart_acc[i];
            double f_val = evaluate_real(ma.f, u);
            double gen = evaluate_real(ma.l0f, u);
            if (cfg.params.lambda != 0.0) gen += cfg.params.lambda * ma.gen_rows(*nl, u);
            double e_val = ma.energy(u);
            if (node == 0) {
                ma.f0 = f_val;
                ma.gen.start(gen);
                ma.qv.start(e_val);
            } else {
                ma.gen.advance(dt, gen);
                ma.qv.advance(dt, e_val);
            }
            auto& path = record.martingale_paths[obs.martingales[i].first];
            path.m.push_back(f_val - ma.f0 - ma.gen.integral);
            path.qv.push_back(cfg.params.nu * ma.qv.integral);
        }
        if (obs.record_zero_mode) record.zero_mode_path.push_back(u.zero_mode());
        if (obs.snapshot_stride > 0 && node % obs.snapshot_stride == 0) {
            record.snapshot_times.push_back(double(node) * dt);
            record.snapshots.push_back(u);
        }
    }

    void save(std::ostream& os, long node) const {
        os.write("AKPZRUN1", 8);
        auto put = [&](double v) { os.write(reinterpret_cast<const char*>(&v), 8); };
        auto put_u64 = [&](std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); };
        put_u64(std::uint64_t(node));
        sim.save_state(os);
        auto put_accum = [&](const PathAccum& a) {
            put(a.prev);
            put(a.integral);
        };
        for (const auto& a : b_acc) put_accum(a);
        for (const auto& a : lin_acc) put_accum(a);
        for (const auto& m : mart_acc) {
            put(m.f0);
            put_accum(m.gen);
            put_accum(m.qv);
        }
        auto put_vec = [&](const std::vector<double>& v) {
            put_u64(v.size());
            for (double x : v) put(x);
        };
        put_vec(record.times);
        for (const auto& [name, v] : record.b_paths) put_vec(v);
        for (const auto& [name, v] : record.b_integrand_paths) put_vec(v);
        for (const auto& [name, v] : record.linear_paths) put_vec(v);
        for (const auto& [name, p] : record.martingale_paths) {
            put_vec(p.m);
            put_vec(p.qv);
        }
        put_vec(record.zero_mode_path);
        put_vec(record.snapshot_times);
        put_u64(record.snapshots.size());
        for (const auto& s : record.snapshots) write_field_binary(os, s);
    }

    long load(std::istream& is) {
        char magic[8];
        is.read(magic, 8);
        if (!is || std::string(magic, 8) != "AKPZRUN1") throw IoError("run checkpoint: bad magic");
        auto get = [&]() {
            double v;
            is.read(reinterpret_cast<char*>(&v), 8);
            if (!is) throw IoError("run checkpoint: truncated");
            return v;
        };
        auto get_u64 = [&]() {
            std::uint64_t v;
            is.read(reinterpret_cast<char*>(&v), 8);
            if (!is) throw IoError("run checkpoint: truncated");
            return v;
        };
        long node = long(get_u64());
        sim.load_state(is);
        auto get_accum = [&](PathAccum& a) {
            a.prev = get();
            a.integral = get();
        };
        for (auto& a : b_acc) get_accum(a);
        for (auto& a : lin_acc) get_accum(a);
        for (auto& m : mart_acc) {
            m.f0 = get();
            get_accum(m.gen);
            get_accum(m.qv);
        }
        auto get_vec = [&](std::vector<double>& v) {
            v.resize(get_u64());
            for (double& x : v) x = get();
        };
        get_vec(record.times);
        for (auto& [name, v] : record.b_paths) get_vec(v);
        for (auto& [name, v] : record.b_integrand_paths) get_vec(v);
        for (auto& [name, v] : record.linear_paths) get_vec(v);
        for (auto& [name, p] : record.martingale_paths) {
            get_vec(p.m);
            get_vec(p.qv);
        }
        get_vec(record.zero_mode_path);
        get_vec(record.snapshot_times);
        record.snapshots.resize(get_u64(), FourierField(sim.config().params.n));
        for (auto& s : record.snapshots) s = read_field_binary(is);
        return node;
    }
};

}  // namespace

TrajectoryRecord run(const SimConfig& cfg, const Observables& obs) {
    cfg.validate();
    RunState state(cfg, obs);
    const long steps = cfg.num_steps();
    state.observe_node(cfg, obs, 0);
    for (long node = 1; node <= steps; ++node) {
        state.sim.step();
        state.observe_node(cfg, obs, node);
    }
    state.record.final_rng_state = state.sim.rng().state();
    return std::move(state.record);
}

TrajectoryRecord run_resumable(const SimConfig& cfg, const Observables& obs,
                               const std::string& checkpoint_path, long checkpoint_every,
                               long stop_after) {
    cfg.validate();
    if (checkpoint_every < 1) throw ConfigError("run_resumable: checkpoint_every must be >= 1");
    RunState state(cfg, obs);
    const long steps = cfg.num_steps();
    long start_node = 0;

    if (std::filesystem::exists(checkpoint_path)) {
        std::ifstream is(checkpoint_path, std::ios::binary);
        start_node = state.load(is);
    } else {
        state.observe_node(cfg, obs, 0);
    }

    auto write_checkpoint = [&](long node) {
        std::string tmp = checkpoint_path + ".tmp";
        {
            std::ofstream os(tmp, std::ios::binary);
            if (!os) throw IoError("cannot write checkpoint: " + tmp);
            state.save(os, node);
        }
        std::filesystem::rename(tmp, checkpoint_path);
    };

    long done_since = 0;
    for (long node = start_node + 1; node <= steps; ++node) {
        state.sim.step();
        state.observe_node(cfg, obs, node);
        if (node % checkpoint_every == 0 || node == steps) write_checkpoint(node);
        if (stop_after >= 0 && ++done_since >= stop_after && node < steps) {
            if (node % checkpoint_every != 0) write_checkpoint(node);
            state.record.final_rng_state = state.sim.rng().state();
            return std::move(state.record);
        }
    }
    state.record.final_rng_state = state.sim.rng().state();
    return std::move(state.record);
}

}  // namespace akpz
