#include "akpz/martingale.hpp"

#include <cmath>

namespace akpz {

namespace {

struct NodeValues {
    std::vector<double> f;    // F(u(t_j))
    std::vector<double> l0f;  // (L0 F)(u(t_j))
    std::vector<double> af;   // (A F)(u(t_j))
    std::vector<double> energy;
};

NodeValues node_values(const CylinderFunctional& f, const TrajectoryRecord& record,
                       const SimConfig& cfg) {
    const std::size_t nodes = record.times.size();
    if (record.snapshots.size() != nodes)
        throw ResolutionError("backward residual needs snapshots at every integrator node");
    if (f.max_degree() > 2) throw CapacityError("residuals: degree(F) must be <= 2");

    CylinderFunctional l0f = apply_L0(f, cfg.params);
    EnergyEvaluator energy(f);
    NonlinearGeneratorEvaluator gen(f, cfg.params.n);
    NonlinearityOp op(cfg.params, cfg.dealias, cfg.form, cfg.grid_size_override);

    NodeValues out;
    out.f.reserve(nodes);
    out.l0f.reserve(nodes);
    out.af.reserve(nodes);
    out.energy.reserve(nodes);
    const double lam = cfg.params.lambda;
    for (std::size_t j = 0; j < nodes; ++j) {
        const FourierField& u = record.snapshots[j];
        out.f.push_back(evaluate_real(f, u));
        out.l0f.push_back(evaluate_real(l0f, u));
        if (lam != 0.0) {
            FourierField nl = op.apply(u);
            out.af.push_back(lam * gen(nl, u));
        } else {
            out.af.push_back(0.0);
        }
        out.energy.push_back(energy(u));
    }
    return out;
}

std::vector<double> trapezoid(const std::vector<double>& v, double dt) {
    std::vector<double> out(v.size(), 0.0);
    for (std::size_t j = 1; j < v.size(); ++j) out[j] = out[j - 1] + 0.5 * dt * (v[j - 1] + v[j]);
    return out;
}

}  // namespace

MartingalePath forward_residual(const CylinderFunctional& f, const TrajectoryRecord& record,
                                const SimConfig& cfg) {
    NodeValues vals = node_values(f, record, cfg);
    std::vector<double> gen(vals.f.size());
    for (std::size_t j = 0; j < gen.size(); ++j) gen[j] = vals.l0f[j] + vals.af[j];
    auto gen_int = trapezoid(gen, cfg.dt);
    auto qv_int = trapezoid(vals.energy, cfg.dt);
    MartingalePath path;
    path.m.resize(vals.f.size());
    path.qv.resize(vals.f.size());
    for (std::size_t j = 0; j < vals.f.size(); ++j) {
        path.m[j] = vals.f[j] - vals.f[0] - gen_int[j];
        path.qv[j] = cfg.params.nu * qv_int[j];
    }
    return path;
}

std::vector<double> backward_residual(const CylinderFunctional& f, const TrajectoryRecord& record,
                                      const SimConfig& cfg) {
    NodeValues vals = node_values(f, record, cfg);
    const std::size_t n = vals.f.size();
    std::vector<double> gen_rev(n);
    for (std::size_t j = 0; j < n; ++j) {
        std::size_t r = n - 1 - j;  // reversed path
        gen_rev[j] = vals.l0f[r] - vals.af[r];
    }
    auto gen_int = trapezoid(gen_rev, cfg.dt);
    std::vector<double> mhat(n);
    for (std::size_t j = 0; j < n; ++j) mhat[j] = vals.f[n - 1 - j] - vals.f[n - 1] - gen_int[j];
    return mhat;
}

MartingalePath weighted_forward_residual(const CylinderFunctional& f, double a,
                                         const TrajectoryRecord& record, const SimConfig& cfg) {
    NodeValues vals = node_values(f, record, cfg);
    const std::size_t n = vals.f.size();
    const double t_final = record.times.back();
    std::vector<double> gen(n), weighted_f(n), energy(n);
    for (std::size_t j = 0; j < n; ++j) {
        double w = std::exp(a * (t_final - record.times[j]));
        weighted_f[j] = w * vals.f[j];
        // (d_s + L) e^{a(T-s)} F~ = e^{a(T-s)} ( (L0 + A) F~ - a F~ )
        gen[j] = w * (vals.l0f[j] + vals.af[j] - a * vals.f[j]);
        energy[j] = w * w * vals.energy[j];
    }
    auto gen_int = trapezoid(gen, cfg.dt);
    auto qv_int = trapezoid(energy, cfg.dt);
    MartingalePath path;
    path.m.resize(n);
    path.qv.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        path.m[j] = weighted_f[j] - weighted_f[0] - gen_int[j];
        path.qv[j] = cfg.params.nu * qv_int[j];
    }
    return path;
}

double forward_backward_identity_error(const CylinderFunctional& f, const TrajectoryRecord& record,
                                       const SimConfig& cfg) {
    NodeValues vals = node_values(f, record, cfg);
    const std::size_t n = vals.f.size();
    auto fwd = forward_residual(f, record, cfg);
    auto bwd = backward_residual(f, record, cfg);
    auto l0_int = trapezoid(vals.l0f, cfg.dt);
    double err = 0.0, scale = 1e-30;
    for (std::size_t j = 0; j < n; ++j) {
        double lhs = 2.0 * l0_int[j];
        double rhs = -fwd.m[j] + bwd[n - 1 - j] - bwd[n - 1];
        err = std::max(err, std::abs(lhs - rhs));
        scale = std::max(scale, std::abs(lhs));
    }
    return err / scale;
}

}  // namespace akpz
