#include "driftlab/cli.hpp"

#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace driftlab;
using namespace driftlab::cli;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = DRIFTLAB_SCENARIOS;

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("driftlab_cli_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

struct Outcome {
    int code;
    fs::path dir;
    nlohmann::json manifest;
};

Outcome run_scenario(Command c, const std::string& scenario, const std::string& tag,
                     std::optional<std::uint64_t> seed = std::nullopt, std::size_t threads = 1) {
    RunOptions opts;
    opts.scenario = kScenarios / scenario;
    opts.out = fresh_dir(tag);
    opts.seed = seed;
    opts.threads = threads;
    std::ostringstream log;
    const int code = run(c, opts, log);
    return Outcome{code, opts.out, nlohmann::json::parse(slurp(opts.out / "manifest.json"))};
}

std::vector<std::string> csv_lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        out.push_back(line);
    }
    return out;
}

} // namespace

TEST_CASE("check-axioms on an identity universe", "[cli]") {
    const auto r = run_scenario(Command::CheckAxioms, "identity_universe.json", "axioms_ok");
    CHECK(r.code == kExitOk);
    const auto report = nlohmann::json::parse(slurp(r.dir / "axioms.json"));
    CHECK(report["all_hold"] == true);
    CHECK(report["checks"].size() >= 2);
    CHECK(r.manifest["exit_code"] == 0);
    CHECK(r.manifest["command"] == "check-axioms");
}

TEST_CASE("check-axioms localizes a broken component", "[cli]") {
    const auto r = run_scenario(Command::CheckAxioms, "broken_observer.json", "axioms_bad");
    CHECK(r.code == kExitCheckFailed);
    const auto report = nlohmann::json::parse(slurp(r.dir / "axioms.json"));
    CHECK(report["all_hold"] == false);
    bool found = false;
    for (const auto& c : report["checks"]) {
        if (c["kind"] == "observer_square") {
            CHECK(c["holds"] == false);
            CHECK(c["violations"][0]["element"] == "a");
            found = true;
        }
    }
    CHECK(found);
}

TEST_CASE("malformed scenarios are input errors with a manifest", "[cli]") {
    const auto r = run_scenario(Command::CheckAxioms, "malformed.json", "malformed");
    CHECK(r.code == kExitInputError);
    CHECK(r.manifest["outputs"] == nlohmann::json::array({"manifest.json"}));
    CHECK(r.manifest["scenario_hash"].get<std::string>().size() == 64);
}

TEST_CASE("theta command", "[cli]") {
    const auto id = run_scenario(Command::Theta, "identity_universe.json", "theta_id");
    CHECK(id.code == kExitOk);
    const auto tj = nlohmann::json::parse(slurp(id.dir / "theta.json"));
    CHECK(tj["converged"] == true);
    CHECK(tj["iterations"] == 0);

    const auto grow = run_scenario(Command::Theta, "growing_verification.json", "theta_grow");
    CHECK(grow.code == kExitNoConvergence);
    CHECK(nlohmann::json::parse(slurp(grow.dir / "theta.json"))["converged"] == false);
    CHECK(csv_lines(slurp(grow.dir / "chain.csv")) ==
          std::vector<std::string>{"stage,carrier_size", "0,1", "1,2", "2,3"});

    const auto constant = run_scenario(Command::Theta, "constant_phi.json", "theta_const");
    CHECK(constant.code == kExitOk);
    const auto cj = nlohmann::json::parse(slurp(constant.dir / "theta.json"));
    CHECK(cj["carrier"]["id"] == "A");
    CHECK(cj["verified"]["holds"] == true);
}

TEST_CASE("entropy command", "[cli]") {
    const auto r = run_scenario(Command::Entropy, "growing_verification.json", "entropy_trace");
    REQUIRE(r.code == kExitOk);
    const auto lines = csv_lines(slurp(r.dir / "entropy.csv"));
    REQUIRE(lines.size() == 5);
    CHECK(lines[0] == "n,H,H_O,step_bound,obs_bound,total_bound,violated_flags");
    // H_O jumps to 3 at n = 3 while H(X_2) + K = 2.08, and H + H_O exceeds the total bound.
    CHECK(lines[4].ends_with(",obs;total"));
    const auto summary = nlohmann::json::parse(slurp(r.dir / "entropy.json"));
    CHECK(summary["filtration_sizes"] == nlohmann::json::array({1, 2, 3, 4}));

    const auto chain = run_scenario(Command::Entropy, "constant_phi.json", "entropy_chain");
    REQUIRE(chain.code == kExitOk);
    const auto cs = nlohmann::json::parse(slurp(chain.dir / "entropy.json"));
    CHECK(cs["monotonicity_checked"] == 2);
    CHECK(cs["monotonicity_violated"] == 2);
}

TEST_CASE("cascade command", "[cli]") {
    const auto id = run_scenario(Command::Cascade, "identity_cascade.json", "cascade_id");
    REQUIRE(id.code == kExitOk);
    CHECK(csv_lines(slurp(id.dir / "spectrum.csv")) ==
          std::vector<std::string>{"re,im,modulus,hull_ok", "1,0,1,true", "1,0,1,true"});
    const auto cj = nlohmann::json::parse(slurp(id.dir / "cascade.json"));
    CHECK(cj["fixed_point_basis"].size() == 2);

    const auto q = run_scenario(Command::Cascade, "quarter_turn_cascade.json", "cascade_q");
    REQUIRE(q.code == kExitOk);
    const auto qj = nlohmann::json::parse(slurp(q.dir / "cascade.json"));
    CHECK(qj["hull"]["all_inside"] == false);
    CHECK(qj["fixed_point_basis"].empty());
}

TEST_CASE("phase command", "[cli]") {
    const auto r = run_scenario(Command::Phase, "phases.json", "phase");
    REQUIRE(r.code == kExitOk);
    const auto pj = nlohmann::json::parse(slurp(r.dir / "phase.json"));
    CHECK(pj["interference_pairs"].size() == 5);
    CHECK(pj["cycles"][0]["zero"] == true);
    CHECK(pj["cycles"][1]["net_phase"] == "1/3");
    CHECK(pj["lock"][0]["elements"] == nlohmann::json::array({"c"}));
    CHECK(pj["lock"][1]["elements"].empty());
    CHECK(pj["lift"][1]["element"] == "z");
}

TEST_CASE("simulate command", "[cli]") {
    const auto r = run_scenario(Command::Simulate, "observed_contraction.json", "simulate");
    REQUIRE(r.code == kExitOk);
    const auto lines = csv_lines(slurp(r.dir / "trajectory.csv"));
    CHECK(lines.front() == "n,x0,x1,o0,o1,L");
    CHECK(lines.size() == 42);
    const auto lj = nlohmann::json::parse(slurp(r.dir / "lyapunov.json"));
    CHECK(lj["schedule"] == 2);
    CHECK(lj.contains("monotone"));

    const auto missing = run_scenario(Command::Simulate, "missing_phi.json", "simulate_missing");
    CHECK(missing.code == kExitInputError);
    CHECK(missing.manifest["message"].get<std::string>().find("'phi'") != std::string::npos);
}

TEST_CASE("sweep command and determinism", "[cli]") {
    const auto a = run_scenario(Command::Sweep, "logistic_sweep.json", "sweep_a");
    const auto b = run_scenario(Command::Sweep, "logistic_sweep.json", "sweep_b", std::nullopt, 3);
    REQUIRE(a.code == kExitOk);
    REQUIRE(b.code == kExitOk);
    for (const char* name : {"diagram.csv", "critical.json"}) {
        CHECK(slurp(a.dir / name) == slurp(b.dir / name));
    }
    CHECK(a.manifest["scenario_hash"] == b.manifest["scenario_hash"]);
    const auto listed = a.manifest["outputs"].get<std::vector<std::string>>();
    for (const auto& entry : fs::directory_iterator(a.dir)) {
        CHECK(std::find(listed.begin(), listed.end(), entry.path().filename().string()) != listed.end());
    }
    const auto crit = nlohmann::json::parse(slurp(a.dir / "critical.json"));
    CHECK(std::abs(crit["r_c_flip"].get<double>() - 3.0) < 1e-6);
}

TEST_CASE("the executable reports exit codes", "[cli]") {
    const char* bin = std::getenv("DRIFTLAB_BIN");
    if (bin == nullptr) {
        SKIP("DRIFTLAB_BIN not set");
    }
    auto status = [&](const std::string& args) {
        const int raw = std::system((std::string(bin) + " " + args + " > /dev/null 2>&1").c_str());
        return WEXITSTATUS(raw);
    };
    const std::string out = (fresh_dir("bin")).string();
    CHECK(status("check-axioms --scenario " + (kScenarios / "identity_universe.json").string() + " --out " + out) == 0);
    CHECK(status("check-axioms --scenario " + (kScenarios / "broken_observer.json").string() + " --out " + out) == 1);
    CHECK(status("check-axioms --scenario " + (kScenarios / "malformed.json").string() + " --out " + out) == 2);
    CHECK(status("theta --scenario " + (kScenarios / "growing_verification.json").string() + " --out " + out) == 3);
    CHECK(status("bogus") == 2);
}
