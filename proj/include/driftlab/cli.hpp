#pragma once

// Scenario-driven commands behind the driftlab executable. Each command reads
// one JSON scenario, writes its artifacts under an output directory and
// always finishes with a manifest.json listing every file it wrote.

#include "driftlab/io.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace driftlab::cli {

using nlohmann::json;

inline constexpr const char* kToolVersion = "0.1.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitNoConvergence = 3;

enum class Command { CheckAxioms, Theta, Simulate, Sweep, Cascade, Entropy, Phase };

inline constexpr const char* to_string(Command c) noexcept {
    switch (c) {
    case Command::CheckAxioms: return "check-axioms";
    case Command::Theta: return "theta";
    case Command::Simulate: return "simulate";
    case Command::Sweep: return "sweep";
    case Command::Cascade: return "cascade";
    case Command::Entropy: return "entropy";
    case Command::Phase: return "phase";
    }
    return "unknown";
}

struct RunOptions {
    std::filesystem::path scenario;
    std::filesystem::path out; // empty: scenario "output_dir", else "out"
    std::optional<std::uint64_t> seed;
    std::size_t threads = 1;
};

struct RunManifest {
    std::string scenario_hash;
    std::string tool_version = kToolVersion;
    std::string command;
    std::vector<std::string> outputs;
    double wall_time_s = 0.0;
    int exit_code = 0;
    std::string message;
};

inline std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
    std::ostringstream out;
    for (unsigned int i = 0; i < len; ++i) {
        out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    }
    return out.str();
}

/// Writes artifacts and remembers their names for the manifest.
class OutputSink {
public:
    explicit OutputSink(std::filesystem::path dir) : dir_(std::move(dir)) {}

    void write(const std::string& name, const std::string& content) {
        std::filesystem::create_directories(dir_);
        std::ofstream f(dir_ / name, std::ios::binary | std::ios::trunc);
        if (!f) {
            throw std::runtime_error("cannot write " + (dir_ / name).string());
        }
        f << content;
        files_.push_back(name);
    }

    void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

    [[nodiscard]] const std::vector<std::string>& files() const noexcept { return files_; }
    [[nodiscard]] const std::filesystem::path& dir() const noexcept { return dir_; }

private:
    std::filesystem::path dir_;
    std::vector<std::string> files_;
};

struct Context {
    const json& scenario;
    OutputSink& sink;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::ostream& log;
};

inline const json& section(const json& scenario, const char* key) {
    if (!scenario.contains(key)) {
        throw Error(ErrorKind::MissingSection, "scenario has no '" + std::string(key) + "' section");
    }
    return scenario.at(key);
}

// ---------------------------------------------------------------- check-axioms

inline int cmd_check_axioms(Context& ctx) {
    const Universe u = io::parse_universe(section(ctx.scenario, "universe"));
    json checks = json::array();
    bool all = true;
    auto record = [&](json entry, bool holds) {
        entry["holds"] = holds;
        all = all && holds;
        checks.push_back(std::move(entry));
    };
    for (const auto& [name, f] : u.functors) {
        const FunctorValidation v = validate_functor(u, f);
        record(json{{"kind", "functor"},
                    {"name", name},
                    {"pairs_checked", v.pairs_checked},
                    {"pairs_outside_universe", v.pairs_outside_universe},
                    {"problems", v.problems}},
               v.ok);
    }
    for (const auto& [name, t] : u.transformations) {
        json squares = json::array();
        bool ok = true;
        for (const auto& entry : check_naturality(u, t)) {
            ok = ok && entry.report.holds;
            json s = io::to_json(entry.report);
            s["morphism"] = entry.morphism;
            squares.push_back(std::move(s));
        }
        record(json{{"kind", "naturality"}, {"name", name}, {"squares", squares}}, ok);
    }
    const json& uj = ctx.scenario.at("universe");
    if (uj.contains("checks")) {
        for (const auto& c : uj.at("checks")) {
            const auto kind = io::detail::get_as<std::string>(io::detail::require(c, "kind", "check"), "check kind");
            if (kind == "observer_square" || kind == "verification_square") {
                const FunctorRep& f = u.functor(c.at("functor").get<std::string>());
                const NatTransRep& t = u.transformation(c.at("transformation").get<std::string>());
                const FinMor& m = u.morphism(c.at("morphism").get<std::string>());
                const SquareReport r =
                    kind == "observer_square" ? check_observer_square(f, t, m) : check_verification_square(f, t, m);
                json entry = io::to_json(r);
                entry["kind"] = kind;
                entry["name"] = t.name + "@" + m.id;
                record(std::move(entry), r.holds);
            } else if (kind == "equalizer") {
                const Equalizer eq = equalizer(u.morphism(c.at("eta").get<std::string>()),
                                               u.morphism(c.at("theta").get<std::string>()));
                record(json{{"kind", kind}, {"name", eq.object.id}, {"object", io::to_json(eq.object)},
                            {"inclusion", io::to_json(eq.inclusion)}},
                       true);
            } else if (kind == "automorphism") {
                const FinMor& theta = u.morphism(c.at("theta").get<std::string>());
                json entry{{"kind", kind}, {"name", theta.id}};
                bool ok = true;
                try {
                    const auto order = automorphism_order(theta);
                    entry["order"] = order;
                    if (c.contains("period")) {
                        const auto period = c.at("period").get<std::uint64_t>();
                        entry["period"] = period;
                        ok = period % order == 0;
                    }
                } catch (const Error& e) {
                    if (e.kind() != ErrorKind::NotAutomorphism) {
                        throw;
                    }
                    entry["error"] = e.what();
                    ok = false;
                }
                record(std::move(entry), ok);
            } else {
                throw Error(ErrorKind::ParseError, "unknown check kind '" + kind + "'");
            }
        }
    }
    ctx.sink.write_json("axioms.json", json{{"all_hold", all}, {"checks", checks}});
    return all ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------- theta

inline int cmd_theta(Context& ctx) {
    const Universe u = io::parse_universe(section(ctx.scenario, "universe"));
    const json& tj = section(ctx.scenario, "theta");
    const FunctorRep& V = u.functor(tj.value("V", std::string("V")));
    const FunctorRep& phi = u.functor(tj.value("phi", std::string("phi")));
    const FinObj& start = u.object(io::detail::get_as<std::string>(io::detail::require(tj, "start", "theta"), "start"));
    const std::size_t max_iter = tj.value("max_iter", kDefaultThetaMaxIter);
    const ThetaResult result = iterate_to_theta(u, V, phi, start, max_iter);
    json out = io::to_json(result);
    int code = kExitNoConvergence;
    if (result.converged) {
        const SquareReport check = verify_theta(u, V, phi, result);
        out["verified"] = io::to_json(check);
        code = check.holds ? kExitOk : kExitCheckFailed;
    } else {
        out["verified"] = nullptr;
    }
    ctx.sink.write_json("theta.json", out);
    ctx.sink.write("chain.csv", io::chain_csv(result));
    return code;
}

// ---------------------------------------------------------------- entropy

inline int cmd_entropy(Context& ctx) {
    const json& ej = section(ctx.scenario, "entropy");
    const EntropyParams params = io::parse_entropy_params(ej);
    std::vector<double> H;
    std::vector<double> H_O;
    json summary;
    MonotonicityTally tally;
    std::optional<Universe> universe;
    if (ctx.scenario.contains("universe")) {
        universe = io::parse_universe(ctx.scenario.at("universe"));
    }
    if (ej.contains("trace")) {
        H = io::detail::get_as<std::vector<double>>(io::detail::require(ej.at("trace"), "H", "entropy.trace"), "H");
        H_O = io::detail::get_as<std::vector<double>>(io::detail::require(ej.at("trace"), "H_O", "entropy.trace"), "H_O");
    } else if (ej.contains("chain")) {
        if (!universe) {
            throw Error(ErrorKind::MissingSection, "scenario has no 'universe' section");
        }
        const json& cj = ej.at("chain");
        const FinObj& start = universe->object(cj.at("start").get<std::string>());
        ProbState p = cj.contains("probs") ? ProbState::make(start, cj.at("probs").get<std::vector<double>>())
                                           : ProbState::uniform(start);
        const NatTransRep* observer = nullptr;
        if (cj.contains("observer")) {
            observer = &universe->transformation(cj.at("observer").get<std::string>());
        }
        auto observe = [&](const ProbState& s) {
            return observer ? shannon_entropy(pushforward(s, observer->component(s.carrier))) : 0.0;
        };
        H.push_back(shannon_entropy(p));
        H_O.push_back(observe(p));
        for (const auto& step : cj.value("steps", std::vector<std::string>{})) {
            const FinMor& f = universe->morphism(step);
            tally_monotonicity(tally, p, f);
            p = pushforward(p, f);
            H.push_back(shannon_entropy(p));
            H_O.push_back(observe(p));
        }
    } else {
        throw Error(ErrorKind::MissingSection, "entropy section needs 'trace' or 'chain'");
    }
    const EntropyTrace trace = build_trace(H, H_O, params);
    summary["step_violations"] = check_step_bound(trace, params.C);
    summary["monotonicity_checked"] = tally.checked;
    summary["monotonicity_violated"] = tally.violated;
    summary["monotonicity_violation_rate"] = tally.violation_rate();
    if (ej.contains("filtration")) {
        if (!universe) {
            throw Error(ErrorKind::MissingSection, "scenario has no 'universe' section");
        }
        const json& fj = ej.at("filtration");
        const Filtration filt = build_filtration(universe->functor(fj.value("V", std::string("V"))),
                                                 universe->object(fj.at("start").get<std::string>()),
                                                 fj.value("layers", std::size_t{1}));
        json sizes = json::array();
        for (const auto& layer : filt.layers) {
            sizes.push_back(layer.size());
        }
        summary["filtration_sizes"] = sizes;
    }
    ctx.sink.write("entropy.csv", io::entropy_csv(trace, params));
    ctx.sink.write_json("entropy.json", summary);
    return kExitOk;
}

// ---------------------------------------------------------------- phase

inline int cmd_phase(Context& ctx) {
    const Universe u = io::parse_universe(section(ctx.scenario, "universe"));
    const json& pj = section(ctx.scenario, "phases");
    json out;
    if (pj.contains("assignments")) {
        const json& aj = pj.at("assignments");
        const FinObj& carrier = u.object(aj.at("object").get<std::string>());
        std::map<std::string, RationalPhase> phases;
        for (const auto& [label, text] : aj.at("phases").get<std::map<std::string, std::string>>()) {
            phases[label] = RationalPhase::parse(text);
        }
        const InterferencePairs pairs = interference_pairing(carrier, phases);
        json list = json::array();
        for (const auto& [x, y] : pairs.pairs) {
            list.push_back(json::array({x, y}));
        }
        out["interference_pairs"] = list;
    }
    if (pj.contains("cycles")) {
        json cycles = json::array();
        for (const auto& cj : pj.at("cycles")) {
            std::vector<PhasedMorphism> cycle;
            for (const auto& step : cj) {
                cycle.push_back(PhasedMorphism{u.morphism(step.at("morphism").get<std::string>()),
                                               RationalPhase::parse(step.at("phase").get<std::string>())});
            }
            const RationalPhase net = cycle_net_phase(cycle);
            cycles.push_back(json{{"net_phase", net.str()}, {"zero", net.is_zero()}});
        }
        out["cycles"] = cycles;
    }
    if (pj.contains("lock")) {
        json locks = json::array();
        for (const auto& lj : pj.at("lock")) {
            const FinMor& theta = u.morphism(lj.at("theta").get<std::string>());
            const std::uint64_t period = lj.value("period", automorphism_order(theta));
            const FinObj locked = phase_lock_space(theta, period);
            locks.push_back(json{{"theta", theta.id}, {"period", period}, {"elements", locked.elements}});
        }
        out["lock"] = locks;
    }
    if (pj.contains("lift")) {
        const json& lj = pj.at("lift");
        const FinMor& phi = u.morphism(lj.at("morphism").get<std::string>());
        std::vector<PhasedElement> states;
        for (const auto& s : lj.at("states")) {
            states.push_back(PhasedElement{s.at("element").get<std::string>(),
                                           RationalPhase::parse(s.at("phase").get<std::string>())});
        }
        json lifted = json::array();
        for (const auto& s : lift_phi_phase(phi, states)) {
            lifted.push_back(json{{"element", s.element}, {"phase", s.phase.str()}});
        }
        out["lift"] = lifted;
    }
    ctx.sink.write_json("phase.json", out);
    return kExitOk;
}

// ---------------------------------------------------------------- cascade

inline int cmd_cascade(Context& ctx) {
    const json& cj = section(ctx.scenario, "cascade");
    const CascadeSpec spec = io::parse_cascade(cj);
    const LinOp c = build_cascade(spec);
    SpectrumReport report = spectrum(c);
    json out{{"dim", c.dim()}, {"Lambda", spec.contraction()}, {"C", io::to_json(c)}};
    json basis = json::array();
    for (const auto& v : cascade_fixed_points(c, cj.value("fixed_tol", kNullSpaceTolerance))) {
        basis.push_back(v);
    }
    out["fixed_point_basis"] = basis;
    try {
        const HullVerdict hull = check_hull_claim(report, spec);
        out["hull"] = json{{"defined", true},
                           {"segment", {hull.segment_lo, hull.segment_hi}},
                           {"all_inside", hull.all_inside}};
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::UndefinedClaim) {
            throw;
        }
        out["hull"] = json{{"defined", false}, {"reason", e.what()}};
    }
    const UnitModulusFinding unit = check_unit_modulus(report, spec);
    out["unit_modulus"] = json{{"applies", unit.applies}, {"has_unit_eigenvalue", unit.has_unit_eigenvalue}};
    out["max_modulus"] = report.max_modulus;
    const double tol = cj.value("commute_tol", 1e-9);
    json comm = json::array();
    bool all_commute = true;
    for (std::size_t i = 0; i < spec.stages.size(); ++i) {
        for (std::size_t j = i + 1; j < spec.stages.size(); ++j) {
            const CommutatorReport r = check_commuting(spec.stages[i].theta, spec.stages[j].theta, tol);
            all_commute = all_commute && r.commute;
            comm.push_back(json{{"i", i}, {"j", j}, {"norm", r.norm}, {"commute", r.commute}});
        }
    }
    out["commutators"] = comm;
    out["all_commute"] = all_commute;
    if (spec.stages.size() >= 2) {
        std::vector<std::size_t> forward(spec.stages.size());
        for (std::size_t i = 0; i < forward.size(); ++i) {
            forward[i] = i;
        }
        std::vector<std::size_t> backward(forward.rbegin(), forward.rend());
        out["ordering_gap"] = inf_norm(sequential_cascade(spec, forward) - sequential_cascade(spec, backward));
    }
    ctx.sink.write("spectrum.csv", io::spectrum_csv(report));
    ctx.sink.write_json("cascade.json", out);
    return kExitOk;
}

// ---------------------------------------------------------------- dynamics

struct DynamicsFamily {
    MapSpec phi;
    MapSpec observer;
};

inline DynamicsFamily parse_family(const json& scenario) {
    DynamicsFamily fam{io::parse_map(section(scenario, "phi")), io::parse_map(section(scenario, "observer"))};
    if (fam.phi.dim != fam.observer.dim) {
        throw Error(ErrorKind::DimMismatch, "phi and observer differ in dimension");
    }
    return fam;
}

inline SweepSettings parse_sweep_settings(const json& scenario, std::uint64_t seed, std::size_t threads) {
    const json& g = section(scenario, "r_grid");
    SweepSettings s;
    s.r_lo = io::detail::get_as<double>(io::detail::require(g, "lo", "r_grid"), "r_grid.lo");
    s.r_hi = io::detail::get_as<double>(io::detail::require(g, "hi", "r_grid"), "r_grid.hi");
    s.steps = io::detail::get_as<std::size_t>(io::detail::require(g, "steps", "r_grid"), "r_grid.steps");
    s.transient = scenario.value("transient", s.transient);
    s.sample = scenario.value("sample", s.sample);
    if (scenario.contains("x0")) {
        s.x0 = scenario.at("x0").get<Vector>();
    }
    s.seed = seed;
    s.threads = threads;
    return s;
}

inline int cmd_sweep(Context& ctx) {
    const DynamicsFamily fam = parse_family(ctx.scenario);
    const SweepSettings s = parse_sweep_settings(ctx.scenario, ctx.seed, ctx.threads);
    const BifurcationDiagram diagram = sweep_bifurcation(fam.phi, fam.observer, s);
    const CriticalReport critical =
        find_critical_r(fam.phi, fam.observer, s.r_lo, s.r_hi, s.steps, sweep_start(s, fam.phi.dim));
    ctx.sink.write("diagram.csv", io::diagram_csv(diagram));
    ctx.sink.write_json("critical.json", io::to_json(critical));
    return kExitOk;
}

inline int cmd_simulate(Context& ctx) {
    const DynamicsFamily fam = parse_family(ctx.scenario);
    const std::size_t dim = fam.phi.dim;
    const std::size_t steps = ctx.scenario.value("steps", std::size_t{100});
    const std::size_t schedule = ctx.scenario.value("schedule", std::size_t{1});
    const double alpha = ctx.scenario.contains("entropy") ? io::parse_entropy_params(ctx.scenario.at("entropy")).alpha : 1.0;
    std::mt19937_64 rng(ctx.seed);
    Vector x0(dim, 0.5);
    if (ctx.scenario.contains("x0")) {
        x0 = ctx.scenario.at("x0").get<Vector>();
        if (x0.size() != dim) {
            throw Error(ErrorKind::DimMismatch, "x0 does not match the map dimension");
        }
    }
    CoupledState start{x0, ctx.scenario.contains("o0") ? ctx.scenario.at("o0").get<Vector>() : evaluate(fam.observer, x0)};
    const Trajectory traj = simulate_coupled(fam.phi, fam.observer, start, steps, schedule);

    const json ens = ctx.scenario.value("ensemble", json::object());
    const std::size_t members = ens.value("size", std::size_t{128});
    const double spread = ens.value("spread", 0.05);
    const std::size_t bins = ens.value("bins", std::size_t{16});
    const double lo = ens.value("lo", -2.0);
    const double hi = ens.value("hi", 2.0);
    std::uniform_real_distribution<double> jitter(-1.0, 1.0);
    std::vector<Trajectory> cloud;
    for (std::size_t m = 0; m < members; ++m) {
        Vector x = x0;
        for (double& c : x) {
            c += spread * jitter(rng);
        }
        CoupledState s{x, evaluate(fam.observer, x)};
        cloud.push_back(simulate_coupled(fam.phi, fam.observer, s, steps, schedule));
    }
    std::vector<std::pair<ProbState, ProbState>> ledger;
    for (std::size_t n = 0; n < traj.states.size(); ++n) {
        std::vector<Vector> xs;
        std::vector<Vector> os;
        for (const auto& t : cloud) {
            xs.push_back(t.states[n].x);
            os.push_back(t.states[n].o);
        }
        ledger.emplace_back(bin_ensemble(xs, lo, hi, bins, "X" + std::to_string(n)),
                            bin_ensemble(os, lo, hi, bins, "O" + std::to_string(n)));
    }
    const LyapunovTrace lyap = lyapunov_trace(traj, ledger, alpha);
    ctx.sink.write("trajectory.csv", io::trajectory_csv(traj, lyap.values));
    ctx.sink.write_json("lyapunov.json",
                        json{{"schedule", schedule},
                             {"alpha", alpha},
                             {"monotone", lyap.monotone},
                             {"first_violation", lyap.first_violation ? json(*lyap.first_violation) : json(nullptr)}});
    return kExitOk;
}

// ---------------------------------------------------------------- driver

inline int dispatch(Command c, Context& ctx) {
    switch (c) {
    case Command::CheckAxioms: return cmd_check_axioms(ctx);
    case Command::Theta: return cmd_theta(ctx);
    case Command::Simulate: return cmd_simulate(ctx);
    case Command::Sweep: return cmd_sweep(ctx);
    case Command::Cascade: return cmd_cascade(ctx);
    case Command::Entropy: return cmd_entropy(ctx);
    case Command::Phase: return cmd_phase(ctx);
    }
    return kExitInputError;
}

inline int exit_code_for(ErrorKind kind) {
    return kind == ErrorKind::NoConvergence ? kExitNoConvergence : kExitInputError;
}

/// Runs one command end to end and writes manifest.json; returns the exit code.
inline int run(Command command, const RunOptions& opts, std::ostream& log) {
    const auto t0 = std::chrono::steady_clock::now();
    RunManifest manifest;
    manifest.command = to_string(command);

    std::string raw;
    json scenario;
    bool parsed = false;
    {
        std::ifstream f(opts.scenario, std::ios::binary);
        if (f) {
            std::ostringstream buf;
            buf << f.rdbuf();
            raw = buf.str();
        }
    }
    std::filesystem::path out_dir = opts.out;
    try {
        scenario = json::parse(raw);
        parsed = true;
    } catch (const json::parse_error&) {
    }
    if (out_dir.empty()) {
        out_dir = parsed && scenario.is_object() && scenario.contains("output_dir")
                      ? std::filesystem::path(scenario.at("output_dir").get<std::string>())
                      : std::filesystem::path("out");
    }
    OutputSink sink(out_dir);
    manifest.scenario_hash = sha256_hex(parsed ? scenario.dump() : raw);

    int code = kExitOk;
    if (raw.empty() && !std::filesystem::exists(opts.scenario)) {
        manifest.message = "ParseError: cannot read scenario " + opts.scenario.string();
        code = kExitInputError;
    } else if (!parsed || !scenario.is_object()) {
        manifest.message = "ParseError: scenario is not a JSON object";
        code = kExitInputError;
    } else {
        try {
            std::uint64_t seed = 0;
            if (opts.seed) {
                seed = *opts.seed;
            } else if (scenario.contains("seed")) {
                seed = io::detail::get_as<std::uint64_t>(scenario.at("seed"), "seed");
            }
            Context ctx{scenario, sink, seed, std::max<std::size_t>(1, opts.threads), log};
            code = dispatch(command, ctx);
        } catch (const Error& e) {
            manifest.message = e.what();
            code = exit_code_for(e.kind());
        } catch (const json::exception& e) {
            manifest.message = std::string("ParseError: ") + e.what();
            code = kExitInputError;
        }
    }
    if (!manifest.message.empty()) {
        log << "driftlab " << manifest.command << ": " << manifest.message << '\n';
    }
    manifest.exit_code = code;
    manifest.outputs = sink.files();
    manifest.outputs.push_back("manifest.json");
    manifest.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    sink.write_json("manifest.json", json{{"scenario_hash", manifest.scenario_hash},
                                          {"tool_version", manifest.tool_version},
                                          {"command", manifest.command},
                                          {"outputs", manifest.outputs},
                                          {"wall_time_s", manifest.wall_time_s},
                                          {"exit_code", manifest.exit_code},
                                          {"message", manifest.message}});
    return code;
}

} // namespace driftlab::cli
