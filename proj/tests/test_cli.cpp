#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "akpz/errors.hpp"
#include "akpz/runconfig.hpp"

using namespace akpz;
namespace fs = std::filesystem;

namespace {

int run_cli(std::vector<std::string> args) {
    std::vector<const char*> argv;
    argv.push_back("akpz");
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli_main(int(argv.size()), argv.data());
}

struct TmpDir {
    fs::path path;
    TmpDir() {
        path = fs::temp_directory_path() / ("akpz_cli_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TmpDir() { fs::remove_all(path); }
    std::string file(const std::string& name, const std::string& content) const {
        auto p = path / name;
        std::ofstream os(p);
        os << content;
        return p.string();
    }
    std::string sub(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("config parsing: sections, lists, strictness") {
    auto cfg = ConfigFile::parse_string("[run]\nseed = 5\n[experiment]\nn_grid = 4, 8,16\n");
    CHECK(cfg.get_long("run", "seed", 0) == 5);
    CHECK(cfg.get_long_list("experiment", "n_grid", {}) == std::vector<long>{4, 8, 16});
    CHECK(cfg.get("missing", "key", "fallback") == "fallback");

    CHECK_THROWS_AS(ConfigFile::parse_string("key_outside = 1\n"), ConfigError);
    CHECK_THROWS_AS(ConfigFile::parse_string("[run]\nseed = 1\nseed = 2\n"), ConfigError);
    CHECK_THROWS_AS(ConfigFile::parse_string("[run\nseed = 1\n"), ConfigError);

    auto bad = ConfigFile::parse_string("[run]\nsede = 1\n");
    CHECK_THROWS_AS(bad.validate({{"run", {"seed"}}}), ConfigError);
}

TEST_CASE("verify-kernels: pass, mutation failure, config errors") {
    TmpDir tmp;
    auto cfgp = tmp.file("v.cfg", "[verify]\nn = 6\ntrials = 40\npoisson_trials = 20\n");

    CHECK(run_cli({"--config", cfgp, "--seed", "11", "--out", tmp.sub("out"), "verify-kernels"}) ==
          0);
    CHECK(fs::exists(tmp.path / "out" / "verify_kernels.json"));

    // injected sign flip must break the exact suites
    CHECK(run_cli({"--config", cfgp, "--seed", "11", "--out", tmp.sub("out2"),
                   "--test-inject-sign-flip", "verify-kernels"}) == 1);

    // unusable grid -> usage/config error
    auto cfg_bad = tmp.file("vbad.cfg", "[verify]\nn = 0\n");
    CHECK(run_cli({"--config", cfg_bad, "--seed", "11", "--out", tmp.sub("out3"),
                   "verify-kernels"}) == 2);

    // unknown key -> hard error, exit 2
    auto cfg_typo = tmp.file("vtypo.cfg", "[verify]\nm = 8\n");
    CHECK(run_cli({"--config", cfg_typo, "--seed", "11", "verify-kernels"}) == 2);
}

TEST_CASE("asymptotics: CSV with targets, deterministic rerun") {
    TmpDir tmp;
    auto cfgp = tmp.file("a.cfg", "[asymptotics]\nn_max = 64\nk1 = 1\nk2 = 0\n");
    CHECK(run_cli({"--config", cfgp, "--seed", "3", "--out", tmp.sub("o1"), "asymptotics"}) == 0);
    auto csv1 = slurp(tmp.sub("o1") + "/asymptotics.csv");
    CHECK(csv1.find("sigma_energy") != std::string::npos);
    CHECK(csv1.find("0.78539816339744") != std::string::npos);  // pi/4 target column

    CHECK(run_cli({"--config", cfgp, "--seed", "99", "--out", tmp.sub("o2"), "asymptotics"}) == 0);
    CHECK(slurp(tmp.sub("o2") + "/asymptotics.csv") == csv1);  // seed-independent, bit-identical

    auto cfg_bad = tmp.file("abad.cfg", "[asymptotics]\nn_max = 1\n");
    CHECK(run_cli({"--config", cfg_bad, "--seed", "3", "--out", tmp.sub("o3"), "asymptotics"}) ==
          2);
}

TEST_CASE("simulate: trajectory bundle and checkpoint") {
    TmpDir tmp;
    auto cfgp = tmp.file("s.cfg",
                         "[simulate]\nn = 4\nscaling = wolf\ndt = 0.003\nt_final = 0.09\n"
                         "checkpoint_every = 10\nstability_budget = 2\n");
    CHECK(run_cli({"--config", cfgp, "--seed", "21", "--out", tmp.sub("sim"), "simulate"}) == 0);
    CHECK(fs::exists(tmp.path / "sim" / "trajectory.json"));
    CHECK(fs::exists(tmp.path / "sim" / "sim.ckpt"));

    auto cfg_bad = tmp.file("sbad.cfg", "[simulate]\nintegrator = rk4\n");
    CHECK(run_cli({"--config", cfg_bad, "--seed", "21", "--out", tmp.sub("sim2"), "simulate"}) ==
          2);
}

TEST_CASE("experiment command: dispatch, dry run, unknown name") {
    TmpDir tmp;
    auto cfgp = tmp.file("e.cfg",
                         "[experiment]\nname = qv-limit\ndet_grid = 64,128\nmc_cutoff = 4\n"
                         "trajectories = 80\nt_final = 0.2\n");
    CHECK(run_cli({"--config", cfgp, "--seed", "8", "--out", tmp.sub("exp"), "--dry-run",
                   "experiment"}) == 0);
    CHECK(run_cli({"--config", cfgp, "--seed", "8", "--out", tmp.sub("exp"), "experiment"}) == 0);
    CHECK(fs::exists(tmp.path / "exp" / "qv-limit" / "report.json"));
    CHECK(fs::exists(tmp.path / "exp" / "qv-limit" / "estimates.csv"));

    auto cfg_unknown = tmp.file("eu.cfg", "[experiment]\nname = frobnicate\n");
    CHECK(run_cli({"--config", cfg_unknown, "--seed", "8", "experiment"}) == 2);
}

TEST_CASE("omitted seed is generated and the run still succeeds") {
    TmpDir tmp;
    auto cfgp = tmp.file("v.cfg", "[verify]\nn = 4\ntrials = 10\npoisson_trials = 5\n");
    CHECK(run_cli({"--config", cfgp, "--out", tmp.sub("o"), "verify-kernels"}) == 0);
}
