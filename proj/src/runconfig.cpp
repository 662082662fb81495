#include "akpz/runconfig.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "akpz/experiments.hpp"
#include "akpz/field_io.hpp"
#include "akpz/kernels.hpp"
#include "akpz/martingale.hpp"

namespace akpz {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string trim(const std::string& s) {
    auto a = s.find_first_not_of(" \t\r");
    auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

}  // namespace

ConfigFile ConfigFile::parse_string(const std::string& text, const std::string& origin) {
    ConfigFile cfg;
    cfg.origin_ = origin;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section");
            section = trim(line.substr(1, line.size() - 2));
            cfg.sections_[section];
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (section.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": key outside any section");
        auto& sec = cfg.sections_[section];
        if (sec.count(key))
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
        sec[key] = value;
    }
    return cfg;
}

ConfigFile ConfigFile::parse_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_string(ss.str(), path);
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
}

std::string ConfigFile::get(const std::string& section, const std::string& key,
                            const std::string& fallback) const {
    auto s = sections_.find(section);
    if (s == sections_.end()) return fallback;
    auto k = s->second.find(key);
    return k == s->second.end() ? fallback : k->second;
}

double ConfigFile::get_double(const std::string& section, const std::string& key,
                              double fallback) const {
    if (!has(section, key)) return fallback;
    try {
        return std::stod(get(section, key, ""));
    } catch (const std::exception&) {
        throw ConfigError("config: " + section + "." + key + " is not a number");
    }
}

long ConfigFile::get_long(const std::string& section, const std::string& key, long fallback) const {
    if (!has(section, key)) return fallback;
    try {
        return std::stol(get(section, key, ""));
    } catch (const std::exception&) {
        throw ConfigError("config: " + section + "." + key + " is not an integer");
    }
}

namespace {
template <class T, class Conv>
std::vector<T> parse_list(const std::string& text, Conv conv, const std::string& what) {
    std::vector<T> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        try {
            out.push_back(conv(item));
        } catch (const std::exception&) {
            throw ConfigError("config: bad list element '" + item + "' in " + what);
        }
    }
    return out;
}
}  // namespace

std::vector<long> ConfigFile::get_long_list(const std::string& section, const std::string& key,
                                            const std::vector<long>& fallback) const {
    if (!has(section, key)) return fallback;
    return parse_list<long>(get(section, key, ""), [](const std::string& s) { return std::stol(s); },
                            section + "." + key);
}

std::vector<double> ConfigFile::get_double_list(const std::string& section, const std::string& key,
                                                const std::vector<double>& fallback) const {
    if (!has(section, key)) return fallback;
    return parse_list<double>(get(section, key, ""),
                              [](const std::string& s) { return std::stod(s); }, section + "." + key);
}

void ConfigFile::validate(const std::map<std::string, std::vector<std::string>>& schema) const {
    for (const auto& [section, keys] : sections_) {
        auto it = schema.find(section);
        if (it == schema.end()) throw ConfigError("config: unknown section [" + section + "]");
        for (const auto& [key, value] : keys) {
            (void)value;
            if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
                throw ConfigError("config: unknown key '" + key + "' in [" + section + "]");
        }
    }
}

namespace {

const std::map<std::string, std::vector<std::string>> kSchema = {
    {"run", {"seed", "threads", "out", "tolerances"}},
    {"verify", {"n", "trials", "adjoint_n", "poisson_trials"}},
    {"asymptotics", {"n_max", "k1", "k2", "max_seconds"}},
    {"simulate",
     {"form", "n", "scaling", "lambda", "nu", "c", "dt", "t_final", "integrator", "dealias",
      "record_stride", "checkpoint_every", "stability_budget", "phi_k1", "phi_k2"}},
    {"experiment",
     {"name", "trajectories", "t_final", "dt", "n_grid", "lambda_grid", "det_grid", "term_grid",
      "term1_grid", "cg_grid", "remainder_grid", "c", "nu", "mc_cutoff", "cutoff",
      "lambda_resolvent", "fit_t_min", "dt_halving", "fixed_lambda"}},
    {"tolerances", {"version"}},  // full tolerance files are read separately
};

struct CliOptions {
    std::string command;
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<std::string> out_dir;
    bool dry_run = false;
    bool inject_sign_flip = false;
};

TestFunction default_phi(const ConfigFile& cfg, const std::string& section) {
    Wavenumber k{int(cfg.get_long(section, "phi_k1", 1)), int(cfg.get_long(section, "phi_k2", 0))};
    if (k.is_zero()) throw ConfigError("config: phi mode must be nonzero");
    return TestFunction::mode_pair(k);
}

// --- verify-kernels ---------------------------------------------------------

struct SuiteResult {
    std::string name;
    bool pass;
    double worst;
    std::string note;
};

ChaosKernel random_kernel(int degree, int extent, int entries, Rng& rng) {
    ChaosKernel k(degree);
    auto rand_wn = [&](Wavenumber& w) {
        do {
            w.k1 = int(rng.next_u64() % (2 * extent + 1)) - extent;
            w.k2 = int(rng.next_u64() % (2 * extent + 1)) - extent;
        } while (w.is_zero());
    };
    for (int i = 0; i < entries; ++i) {
        KernelTuple t;
        t.degree = degree;
        for (int d = 0; d < degree; ++d) rand_wn(t.k[std::size_t(d)]);
        t.normalize();
        Complex v{rng.normal(), rng.normal()};
        k.add(t, v);
        k.add(t.negated(), std::conj(v));  // keep the functional real
    }
    return k;
}

int cmd_verify_kernels(const ConfigFile& cfg, const CliOptions& cli, std::uint64_t seed,
                       int threads, const std::string& out_dir) {
    (void)threads;
    const int n = int(cfg.get_long("verify", "n", 8));
    const int trials = int(cfg.get_long("verify", "trials", 100));
    const int adjoint_n = int(cfg.get_long("verify", "adjoint_n", 6));
    const int poisson_trials = int(cfg.get_long("verify", "poisson_trials", 50));
    if (n < 1 || trials < 1) return 2;

    if (cli.inject_sign_flip) set_kernel_sign_flip_for_tests(true);

    std::vector<SuiteResult> suites;
    auto params = KernelParams::fixed(n, 1.0, 1.0);
    Rng rng(seed);

    {  // orbit cancellation, exhaustively
        double worst = 0;
        for (int m1 = -n; m1 <= n; ++m1)
            for (int m2 = -n; m2 <= n; ++m2)
                for (int l1 = -n; l1 <= n; ++l1)
                    for (int l2 = -n; l2 <= n; ++l2) {
                        Wavenumber m{m1, m2}, l{l1, l2};
                        if (m.is_zero() || l.is_zero() || (m + l).is_zero()) continue;
                        if ((m + l).norm_inf() > n) continue;
                        double scale = std::max({std::abs(kernel_K(m, l, params)),
                                                 std::abs(kernel_K(-(m + l), l, params)), 1.0});
                        worst = std::max(worst, std::abs(orbit_sum(m, l, params)) / scale);
                    }
        suites.push_back({"orbit-cancellation", worst <= 1e-12, worst, "exhaustive |.|_inf <= N"});
    }
    {  // kernel symmetry
        double worst = 0;
        for (int t = 0; t < 1000; ++t) {
            Wavenumber l{int(rng.next_u64() % (2 * n + 1)) - n, int(rng.next_u64() % (2 * n + 1)) - n};
            Wavenumber m{int(rng.next_u64() % (2 * n + 1)) - n, int(rng.next_u64() % (2 * n + 1)) - n};
            if (l.is_zero() || m.is_zero()) continue;
            worst = std::max(worst, std::abs(kernel_K(l, m, params) - kernel_K(m, l, params)));
        }
        suites.push_back({"kernel-symmetry", worst == 0.0, worst, "K(l,m) = K(m,l) exactly"});
    }
    {  // adjointness on random pairs
        auto p = KernelParams::fixed(adjoint_n, 0.7, 1.3);
        double worst = 0;
        for (int t = 0; t < trials; ++t) {
            auto f = CylinderFunctional::from_kernel(random_kernel(1 + int(rng.next_u64() % 2),
                                                                   adjoint_n, 6, rng));
            auto g = CylinderFunctional::from_kernel(
                random_kernel(f.max_degree() + 1, adjoint_n, 6, rng));
            double err = std::abs(adjointness_check(f, g, p));
            double scale = std::sqrt(f.l2_sq() * g.l2_sq()) + 1e-300;
            worst = std::max(worst, err / scale);
        }
        suites.push_back({"adjointness", worst <= 1e-12, worst, "<A+F,G> + <F,A-G> = 0"});
    }
    {  // Poisson residual for random test functions
        double worst = 0;
        for (int t = 0; t < poisson_trials; ++t) {
            TestFunction phi;
            int modes = 1 + int(rng.next_u64() % 3);
            for (int q = 0; q < modes; ++q) {
                Wavenumber k{int(rng.next_u64() % (2 * n + 1)) - n,
                             int(rng.next_u64() % (2 * n + 1)) - n};
                if (k.is_zero()) k = {1, 0};
                phi.set_coeff(k, Complex{rng.normal(), rng.normal()});
            }
            auto p = KernelParams::fixed(n, 0.5 + rng.uniform(), 0.5 + rng.uniform());
            auto h = poisson_solve_nonlinearity(phi, p);
            auto resid = apply_L0(h, p);
            auto target = nonlinearity_kernel(phi, p);
            double scale = std::max(target.max_abs_entry() * p.lambda, 1e-300);
            double err = 0;
            resid.kernel(2).for_each([&](const KernelTuple& tt, Complex v) {
                err = std::max(err, std::abs(v - p.lambda * target.entry(tt)));
            });
            target.for_each([&](const KernelTuple& tt, Complex v) {
                err = std::max(err, std::abs(resid.kernel(2).entry(tt) - p.lambda * v));
            });
            worst = std::max(worst, err / scale);
        }
        suites.push_back({"poisson-residual", worst <= 1e-14, worst, "L0 H = lambda N(phi)"});
    }
    {  // zero-mode Poisson: residual and A- annihilation
        auto p = KernelParams::fixed(n, 0.8, 1.1);
        auto h0 = poisson_solve_zero_mode(p);
        auto resid = apply_L0(h0, p);
        auto target = zero_mode_nonlinearity_kernel(p);
        double err = 0;
        target.for_each([&](const KernelTuple& t, Complex v) {
            err = std::max(err, std::abs(resid.kernel(2).entry(t) - p.lambda * v));
        });
        auto am = apply_Aminus(h0, p);
        double am_max = am.kernel(1).max_abs_entry();
        suites.push_back({"zero-mode-poisson", err <= 1e-14 * p.lambda && am_max == 0.0,
                          std::max(err, am_max), "L0 H0 = lambda N0, A- H0 = 0"});
    }
    {  // Gaussian integration by parts via the Wick oracle
        double worst = 0;
        for (int t = 0; t < trials; ++t) {
            auto f = CylinderFunctional::from_kernel(random_kernel(2, 3, 4, rng));
            auto g = CylinderFunctional::from_kernel(random_kernel(1 + int(rng.next_u64() % 2), 3, 4, rng));
            Wavenumber k{int(rng.next_u64() % 5) - 2, int(rng.next_u64() % 5) - 2};
            if (k.is_zero()) k = {1, 1};
            CylinderFunctional eta_k;
            eta_k.kernel(1).set(KernelTuple::of({k}), Complex{1, 0});
            auto df = malliavin_derivative(f, k);
            auto dg = malliavin_derivative(g, k);
            double lhs = wick_expectation({&g, &df});
            double rhs = -wick_expectation({&f, &dg}) + wick_expectation({&f, &g, &eta_k});
            double scale = std::sqrt(f.l2_sq() * g.l2_sq()) + 1.0;
            worst = std::max(worst, std::abs(lhs - rhs) / scale);
        }
        suites.push_back({"gaussian-ibp", worst <= 1e-12, worst,
                          "E[G DkF] = E[-F DkG + F G eta_k]"});
    }
    {  // stationarity: E[L F] = 0 through the chaos representation
        auto p = KernelParams::fixed(adjoint_n, 0.9, 1.0);
        double worst = 0;
        for (int t = 0; t < trials; ++t) {
            auto f = CylinderFunctional::from_kernel(random_kernel(2, adjoint_n, 5, rng));
            f.constant = Complex{rng.normal(), 0};
            CylinderFunctional lf = apply_L0(f, p);
            lf.accumulate(apply_Aplus(f, p));
            lf.accumulate(apply_Aminus(f, p));
            worst = std::max(worst, std::abs(wick_expectation({&lf})));
        }
        suites.push_back({"generator-mean-zero", worst <= 1e-12, worst, "E[L F] = 0"});
    }

    if (cli.inject_sign_flip) set_kernel_sign_flip_for_tests(false);

    nlohmann::json j;
    bool all = true;
    for (const auto& s : suites) {
        std::cout << (s.pass ? "[PASS] " : "[FAIL] ") << s.name << " worst " << s.worst << " ("
                  << s.note << ")\n";
        j["suites"].push_back({{"name", s.name}, {"pass", s.pass}, {"worst", s.worst}});
        all = all && s.pass;
    }
    j["all_pass"] = all;
    j["n"] = n;
    j["seed"] = seed;
    std::filesystem::create_directories(out_dir);
    std::ofstream(std::filesystem::path(out_dir) / "verify_kernels.json") << j.dump(2);
    return all ? 0 : 1;
}

// --- asymptotics ------------------------------------------------------------

int cmd_asymptotics(const ConfigFile& cfg, std::uint64_t, int threads,
                    const std::string& out_dir) {
    const long n_max = cfg.get_long("asymptotics", "n_max", 16384);
    Wavenumber k{int(cfg.get_long("asymptotics", "k1", 1)),
                 int(cfg.get_long("asymptotics", "k2", 0))};
    const double max_seconds = cfg.get_double("asymptotics", "max_seconds", 0.0);
    if (n_max < 2 || k.is_zero()) return 2;

    std::filesystem::create_directories(out_dir);
    std::ofstream os(std::filesystem::path(out_dir) / "asymptotics.csv");
    os.precision(17);
    os << "N,k1,k2,sigma_energy,sigma_variational,sigma_zero_mode,"
          "energy_over_log,variational_over_log,zero_mode_over_log,target_pi_over_4,target_pi\n";
    auto t0 = std::chrono::steady_clock::now();
    bool truncated = false;
    for (long n = 2; n <= n_max; n *= 2) {
        if (max_seconds > 0) {
            double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if (el > max_seconds) {
                os << "# truncated: time budget " << max_seconds << " s exceeded at N=" << n << "\n";
                truncated = true;
                break;
            }
        }
        auto p = KernelParams::fixed(int(n), 1.0, 1.0);
        double se = sigma_energy(k, p, threads);
        double sv = sigma_variational(k, p, threads);
        double s0 = sigma_zero_mode(p, threads);
        double lg = std::log(double(n));
        os << n << "," << k.k1 << "," << k.k2 << "," << se << "," << sv << "," << s0 << ","
           << se / lg << "," << sv / lg << "," << s0 / lg << "," << kPi / 4 << "," << kPi << "\n";
    }
    std::cout << (truncated ? "asymptotics: truncated, partial CSV written\n"
                            : "asymptotics: CSV written\n");
    return 0;
}

// --- simulate ----------------------------------------------------------------

int cmd_simulate(const ConfigFile& cfg, std::uint64_t seed, int, const std::string& out_dir) {
    SimConfig sim;
    const std::string scaling = cfg.get("simulate", "scaling", "wolf");
    int n = int(cfg.get_long("simulate", "n", 16));
    double nu = cfg.get_double("simulate", "nu", 1.0);
    double c = cfg.get_double("simulate", "c", 1.0);
    if (scaling == "wolf")
        sim.params = KernelParams::wolf(n, c, nu);
    else if (scaling == "fixed")
        sim.params = KernelParams::fixed(n, cfg.get_double("simulate", "lambda", 1.0), nu, c);
    else
        throw ConfigError("simulate.scaling must be wolf or fixed");
    sim.dt = cfg.get_double("simulate", "dt", 0.01);
    sim.t_final = cfg.get_double("simulate", "t_final", 1.0);
    sim.seed = seed;
    sim.stability_budget = cfg.get_double("simulate", "stability_budget", 0.5);
    sim.record_stride = int(cfg.get_long("simulate", "record_stride", 1));
    const std::string form = cfg.get("simulate", "form", "u");
    sim.form = form == "h" ? FieldForm::h_form : FieldForm::u_form;
    const std::string integ = cfg.get("simulate", "integrator", "exp_euler");
    if (integ == "exp_euler")
        sim.integrator = Integrator::exp_euler;
    else if (integ == "exp_midpoint")
        sim.integrator = Integrator::exp_midpoint;
    else
        throw ConfigError("simulate.integrator must be exp_euler or exp_midpoint");
    const std::string dealias = cfg.get("simulate", "dealias", "padding_2x");
    if (dealias == "padding_2x")
        sim.dealias = Dealias::padding_2x;
    else if (dealias == "padding_3_2")
        sim.dealias = Dealias::padding_3_2;
    else if (dealias == "direct")
        sim.dealias = Dealias::direct;
    else
        throw ConfigError("simulate.dealias must be padding_2x, padding_3_2 or direct");

    Observables obs;
    obs.b_integrals.emplace_back("B", default_phi(cfg, "simulate"));
    obs.record_zero_mode = sim.form == FieldForm::h_form;
    obs.snapshot_stride = int(sim.num_steps());  // initial and final states

    std::filesystem::create_directories(out_dir);
    long every = cfg.get_long("simulate", "checkpoint_every", 100);
    auto rec = run_resumable(sim, obs, (std::filesystem::path(out_dir) / "sim.ckpt").string(),
                            every);

    nlohmann::json j;
    j["seed"] = seed;
    j["nodes"] = rec.times.size();
    j["b_final"] = rec.b_paths.at("B").back();
    if (!rec.zero_mode_path.empty()) j["zero_mode_final"] = rec.zero_mode_path.back();
    std::ofstream(std::filesystem::path(out_dir) / "trajectory.json") << j.dump(2);
    if (!rec.snapshots.empty())
        save_field((std::filesystem::path(out_dir) / "final_field.bin").string(),
                   rec.snapshots.back());
    std::cout << "simulate: " << rec.times.size() << " nodes, B_T = " << rec.b_paths.at("B").back()
              << "\n";
    return 0;
}

// --- experiment ---------------------------------------------------------------

int cmd_experiment(const ConfigFile& cfg, const CliOptions& cli, std::uint64_t seed, int threads,
                   const std::string& out_dir, const Tolerances& tol) {
    const std::string name = cfg.get("experiment", "name", "");
    const std::vector<std::string> known = {
        "qv-limit",     "laplace-sandwich", "variational-bound", "zero-mode",
        "short-time-energy", "energy-estimate",  "she-cherry",        "invariance"};
    if (std::find(known.begin(), known.end(), name) == known.end()) {
        std::cerr << "unknown experiment '" << name << "'; available:";
        for (const auto& k : known) std::cerr << " " << k;
        std::cerr << "\n";
        return 2;
    }

    auto longs_to_ints = [](const std::vector<long>& v) {
        std::vector<int> out;
        for (long x : v) out.push_back(int(x));
        return out;
    };
    TestFunction phi = TestFunction::mode_pair({1, 0});

    if (cli.dry_run) {
        std::cout << "experiment " << name << " resolved grid:\n";
        std::cout << "  seed = " << seed << ", threads = " << threads << "\n";
        for (const auto& [key, value] : cfg.sections().count("experiment")
                                            ? cfg.sections().at("experiment")
                                            : std::map<std::string, std::string>{})
            std::cout << "  " << key << " = " << value << "\n";
        return 0;
    }

    ExperimentReport rep;
    if (name == "qv-limit") {
        QvLimitOptions o;
        o.seed = seed;
        o.threads = threads;
        o.det_grid = longs_to_ints(cfg.get_long_list("experiment", "det_grid",
                                                     {256, 512, 1024, 2048, 4096, 8192, 16384}));
        o.mc_cutoff = int(cfg.get_long("experiment", "mc_cutoff", 16));
        o.mc_trajectories = int(cfg.get_long("experiment", "trajectories", 500));
        o.mc_t_final = cfg.get_double("experiment", "t_final", 0.5);
        o.mc_dt = cfg.get_double("experiment", "dt", 0.0);
        rep = exp_qv_limit(phi, o, tol);
    } else if (name == "laplace-sandwich") {
        LaplaceOptions o;
        o.seed = seed;
        o.threads = threads;
        o.n_grid = longs_to_ints(cfg.get_long_list("experiment", "n_grid", {8, 16, 32}));
        o.lambda_grid = cfg.get_double_list("experiment", "lambda_grid", {0.5, 1, 2, 4});
        o.trajectories = int(cfg.get_long("experiment", "trajectories", 120));
        o.t_final = cfg.get_double("experiment", "t_final", 14.0);
        o.dt = cfg.get_double("experiment", "dt", 0.0);
        rep = exp_laplace_sandwich(phi, o, tol);
    } else if (name == "variational-bound") {
        VariationalOptions o;
        o.seed = seed;
        o.threads = threads;
        o.term1_grid = longs_to_ints(cfg.get_long_list("experiment", "term1_grid", {256, 1024, 4096}));
        o.term_grid = longs_to_ints(cfg.get_long_list("experiment", "term_grid", {8, 16, 32}));
        o.cg_grid = longs_to_ints(cfg.get_long_list("experiment", "cg_grid", {8, 16}));
        o.lambda_resolvent = cfg.get_double("experiment", "lambda_resolvent", 1.0);
        rep = exp_variational_bound(phi, o, tol);
    } else if (name == "zero-mode") {
        ZeroModeOptions o;
        o.seed = seed;
        o.threads = threads;
        o.n_grid = longs_to_ints(cfg.get_long_list("experiment", "n_grid", {8, 16, 32}));
        o.trajectories = int(cfg.get_long("experiment", "trajectories", 400));
        o.t_final = cfg.get_double("experiment", "t_final", 1.0);
        o.dt = cfg.get_double("experiment", "dt", 0.0);
        rep = exp_zero_mode(o, tol);
    } else if (name == "short-time-energy") {
        ShortTimeOptions o;
        o.seed = seed;
        o.threads = threads;
        o.cutoff = int(cfg.get_long("experiment", "cutoff", 32));
        o.trajectories = int(cfg.get_long("experiment", "trajectories", 400));
        o.t_final = cfg.get_double("experiment", "t_final", 0.5);
        o.dt = cfg.get_double("experiment", "dt", 0.0);
        o.fit_t_min = cfg.get_double("experiment", "fit_t_min", 0.05);
        rep = exp_short_time_energy(phi, o, tol);
    } else if (name == "energy-estimate") {
        EnergyEstimateOptions o;
        o.seed = seed;
        o.threads = threads;
        o.n_grid = longs_to_ints(cfg.get_long_list("experiment", "n_grid", {4, 8, 16, 32}));
        o.trajectories = int(cfg.get_long("experiment", "trajectories", 300));
        o.t_final = cfg.get_double("experiment", "t_final", 0.5);
        o.fixed_lambda = cfg.get_double("experiment", "fixed_lambda", 1.0);
        rep = exp_energy_estimate(phi, o, tol);
    } else if (name == "she-cherry") {
        SheCherryOptions o;
        o.seed = seed;
        o.threads = threads;
        o.n_grid = longs_to_ints(cfg.get_long_list("experiment", "n_grid", {64, 256}));
        o.trajectories = int(cfg.get_long("experiment", "trajectories", 100));
        o.t_final = cfg.get_double("experiment", "t_final", 0.25);
        o.dt = cfg.get_double("experiment", "dt", 0.01);
        rep = exp_she_cherry(phi, o, tol);
    } else {  // invariance
        InvarianceOptions o;
        o.seed = seed;
        o.threads = threads;
        o.n_grid = longs_to_ints(cfg.get_long_list("experiment", "n_grid", {4, 8, 16}));
        o.trajectories = int(cfg.get_long("experiment", "trajectories", 10000));
        o.t_final = cfg.get_double("experiment", "t_final", 0.12);
        o.dt = cfg.get_double("experiment", "dt", 0.0);
        o.dt_halving = cfg.get_long("experiment", "dt_halving", 1) != 0;
        rep = exp_invariance(o, tol);
    }

    rep.write_bundle((std::filesystem::path(out_dir) / name).string());
    rep.print_summary(std::cout);
    return rep.passed() ? 0 : 1;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"Spectral-Galerkin laboratory for the regularized anisotropic KPZ system"};
    app.require_subcommand(1);

    CliOptions cli;
    app.add_option("--config", cli.config_path, "plain-text config file");
    std::uint64_t seed_flag = 0;
    bool seed_given = false;
    auto* seed_opt = app.add_option("--seed", seed_flag, "master seed (overrides config)");
    int threads_flag = 0;
    auto* threads_opt = app.add_option("--threads", threads_flag, "worker threads");
    std::string out_flag;
    auto* out_opt = app.add_option("--out", out_flag, "output directory");
    app.add_flag("--dry-run", cli.dry_run, "print the resolved grid and exit");
    auto* flip = app.add_flag("--test-inject-sign-flip", cli.inject_sign_flip,
                              "fault injection for the mutation test");
    flip->group("");  // hidden

    app.add_subcommand("verify-kernels", "run the exact identity suites");
    app.add_subcommand("asymptotics", "sweep the log-divergent kernel sums");
    app.add_subcommand("simulate", "integrate one trajectory with checkpointing");
    app.add_subcommand("experiment", "run a named experiment and write its report bundle");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }
    seed_given = seed_opt->count() > 0;

    try {
        ConfigFile cfg;
        if (!cli.config_path.empty()) cfg = ConfigFile::parse_file(cli.config_path);
        cfg.validate(kSchema);

        // Env overrides, then flags, then config, then defaults.
        auto env = [](const char* name) -> std::optional<std::string> {
            const char* v = std::getenv(name);
            return v ? std::optional<std::string>(v) : std::nullopt;
        };
        std::uint64_t seed = std::uint64_t(cfg.get_long("run", "seed", 0));
        if (auto e = env("AKPZ_SEED")) seed = std::stoull(*e);
        if (seed_given) seed = seed_flag;
        if (seed == 0) {
            seed = std::uint64_t(std::chrono::steady_clock::now().time_since_epoch().count());
            std::cout << "seed not given; generated seed = " << seed << "\n";
        }
        int threads = int(cfg.get_long("run", "threads", 1));
        if (auto e = env("AKPZ_THREADS")) threads = std::stoi(*e);
        if (threads_opt->count() > 0) threads = threads_flag;
        std::string out_dir = cfg.get("run", "out", "out");
        if (auto e = env("AKPZ_OUT")) out_dir = *e;
        if (out_opt->count() > 0) out_dir = out_flag;

        Tolerances tol;
        if (cfg.has("run", "tolerances")) tol = load_tolerances(cfg.get("run", "tolerances", ""));

        std::string sub = app.get_subcommands().front()->get_name();
        if (sub == "verify-kernels") return cmd_verify_kernels(cfg, cli, seed, threads, out_dir);
        if (sub == "asymptotics") return cmd_asymptotics(cfg, seed, threads, out_dir);
        if (sub == "simulate") return cmd_simulate(cfg, seed, threads, out_dir);
        return cmd_experiment(cfg, cli, seed, threads, out_dir, tol);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace akpz
