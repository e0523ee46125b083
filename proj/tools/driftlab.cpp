#include "driftlab/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    using namespace driftlab::cli;
    CLI::App app{"driftlab: finite-set checks, entropy ledgers, cascades and bifurcation sweeps"};
    app.require_subcommand(1);
    RunOptions opts;
    std::uint64_t seed = 0;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--scenario", opts.scenario, "scenario JSON file")->required();
        sub->add_option("--out", opts.out, "output directory");
        sub->add_option("--seed", seed, "64-bit seed, overrides the scenario");
        sub->add_option("--threads", opts.threads, "worker threads for sweeps")->check(CLI::PositiveNumber);
    };
    const std::pair<Command, const char*> commands[] = {
        {Command::CheckAxioms, "run every square check and functor validation"},
        {Command::Theta, "iterate V.phi to its stable carrier"},
        {Command::Simulate, "simulate the coupled system and its L trace"},
        {Command::Sweep, "bifurcation diagram and critical parameters"},
        {Command::Cascade, "cascade operator, spectrum and fixed points"},
        {Command::Entropy, "entropy ledger and bound checks"},
        {Command::Phase, "phase pairing, cycle phases and phase locking"},
    };
    std::vector<std::pair<Command, CLI::App*>> subs;
    for (const auto& [cmd, help] : commands) {
        CLI::App* sub = app.add_subcommand(to_string(cmd), help);
        add_common(sub);
        subs.emplace_back(cmd, sub);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInputError;
    }
    for (const auto& [cmd, sub] : subs) {
        if (sub->parsed()) {
            if (sub->count("--seed") > 0) {
                opts.seed = seed;
            }
            return run(cmd, opts, std::cerr);
        }
    }
    return kExitInputError;
}
