#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ucoreps/adversary.hpp"
#include "ucoreps/comparator.hpp"
#include "ucoreps/config.hpp"
#include "ucoreps/errors.hpp"
#include "ucoreps/harness.hpp"
#include "ucoreps/mdp_io.hpp"

using namespace ucoreps;

namespace {

struct Overrides {
    std::string config;
    std::vector<std::uint64_t> seeds;
    std::string out;
    std::string mode;
    double eta = 0.0;
    std::string delta;
    std::int64_t episodes = 0;
    int threads = -1;
};

void add_overrides(CLI::App* cmd, Overrides& o, bool with_output) {
    cmd->add_option("-c,--config", o.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("-s,--seeds", o.seeds, "Seeds to run, replacing the configured list");
    if (with_output)
        cmd->add_option("-o,--out", o.out, "Output directory");
    cmd->add_option("--mode", o.mode, "Transition mode")->check(CLI::IsMember({"unknown", "known"}));
    cmd->add_option("--eta", o.eta, "Step size override")->check(CLI::PositiveNumber);
    cmd->add_option("--delta", o.delta, "Confidence parameter in (0,1), or 'corollary' for |X||A|/T");
    cmd->add_option("-T,--episodes", o.episodes, "Number of episodes")->check(CLI::PositiveNumber);
    cmd->add_option("-j,--threads", o.threads, "Concurrent seeds (0: all cores)")->check(CLI::NonNegativeNumber);
}

ExperimentConfig resolve(const Overrides& o) {
    ExperimentConfig c = load_config(o.config);
    if (!o.seeds.empty())
        c.seeds = o.seeds;
    if (!o.out.empty())
        c.output_dir = o.out;
    if (o.mode == "known")
        c.mode = TransitionMode::known;
    else if (o.mode == "unknown")
        c.mode = TransitionMode::unknown;
    if (o.eta > 0.0)
        c.eta = o.eta;
    if (o.delta == "corollary") {
        c.corollary_delta = true;
    } else if (!o.delta.empty()) {
        try {
            c.delta = std::stod(o.delta);
        } catch (const std::exception&) {
            throw ConfigError("delta", "expected a number or 'corollary'");
        }
        c.corollary_delta = false;
    }
    if (o.episodes > 0) {
        c.episodes = o.episodes;
        std::erase_if(c.checkpoints, [&](std::int64_t t) { return t > c.episodes; });
    }
    if (o.threads >= 0)
        c.threads = o.threads;
    validate_config(c);
    return c;
}

int cmd_run(const Overrides& o) {
    const ExperimentConfig c = resolve(o);
    const ExperimentResult result = run_experiment(c);
    write_artifacts(result);
    std::printf("%-8s %-8s %14s %14s %14s %14s\n", "seed", "t", "regret", "approx", "online", "bound");
    for (const auto& run : result.runs)
        for (const auto& cp : run.checkpoints)
            std::printf("%-8llu %-8lld %14.6f %14.6f %14.6f %14.1f\n", static_cast<unsigned long long>(run.seed),
                        static_cast<long long>(cp.t), cp.regret, cp.approximation, cp.online, cp.bound);
    int flagged = 0;
    for (const auto& run : result.runs)
        flagged += run.flagged;
    std::printf("runs: %zu  flagged episodes: %d  wall clock: %.2f s\nartifacts: %s\n", result.runs.size(), flagged,
                result.wall_seconds, c.output_dir.string().c_str());
    return 0;
}

int cmd_coverage(const Overrides& o, int runs) {
    const ExperimentConfig c = resolve(o);
    const CoverageResult r = coverage_study(c, o.seeds.empty() ? runs : 0);
    std::printf("covered %d of %d runs: fraction %.4f (floor %.4f)\n", r.covered, r.runs, r.fraction, r.floor);
    return r.fraction >= r.floor ? 0 : 3;
}

int cmd_hindsight(const Overrides& o) {
    ExperimentConfig c = resolve(o);
    c.seeds.resize(1);
    RunOptions options;
    options.trace = false;
    const RunResult run = run_seed(c, c.seeds.front(), options);
    std::printf("seed %llu  episodes %lld\n", static_cast<unsigned long long>(run.seed),
                static_cast<long long>(c.episodes));
    for (const auto& cp : run.checkpoints)
        std::printf("t=%-8lld comparator %.12g  certified gap %.3g\n", static_cast<long long>(cp.t), cp.comparator,
                    cp.comparator_gap);
    return 0;
}

int cmd_validate(const std::string& path) {
    const LayeredMdp mdp = load_mdp(path);
    const Shape& s = mdp.shape();
    std::printf("ok: horizon %d, %d states, %d actions, %zu triples\n", s.horizon(), s.num_states(), s.num_actions(),
                s.num_triples());
    return 0;
}

int cmd_generate(const MdpSpec& spec, const std::string& out) {
    const LayeredMdp mdp = generate_mdp(spec);
    if (out.empty() || out == "-")
        std::cout << format_mdp(mdp);
    else
        save_mdp(mdp, out);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online convex optimization over occupancy measures in adversarial MDPs"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(library_version()));

    Overrides run_o, cov_o, bih_o;
    auto* run = app.add_subcommand("run", "Run an experiment and write traces and a manifest");
    add_overrides(run, run_o, true);

    int coverage_runs = 200;
    auto* cov = app.add_subcommand("coverage", "Fraction of runs whose confidence sets contain the true transition");
    add_overrides(cov, cov_o, false);
    cov->add_option("-n,--runs", coverage_runs, "Number of seeds (1..n) when --seeds is not given")
        ->check(CLI::PositiveNumber);

    auto* bih = app.add_subcommand("best-in-hindsight", "Comparator values at the configured checkpoints");
    add_overrides(bih, bih_o, false);

    std::string mdp_path;
    auto* val = app.add_subcommand("validate-mdp", "Check an MDP description file");
    val->add_option("file", mdp_path, "MDP description")->required();

    MdpSpec spec;
    spec.layer_sizes = {1, 3, 3, 3, 1};
    std::string concentration = "1";
    std::string gen_out;
    auto* gen = app.add_subcommand("generate-mdp", "Write a random layered MDP");
    gen->add_option("--layers", spec.layer_sizes, "Layer sizes, first and last equal to 1");
    gen->add_option("--actions", spec.num_actions, "Number of actions")->check(CLI::PositiveNumber);
    gen->add_option("--concentration", concentration, "Dirichlet concentration, or 'inf' for uniform rows");
    gen->add_option("--seed", spec.seed, "Generator seed");
    gen->add_option("-o,--out", gen_out, "Output file (stdout when omitted)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return cmd_run(run_o);
        if (cov->parsed())
            return cmd_coverage(cov_o, coverage_runs);
        if (bih->parsed())
            return cmd_hindsight(bih_o);
        if (val->parsed())
            return cmd_validate(mdp_path);
        if (gen->parsed()) {
            spec.concentration =
                concentration == "inf" ? std::numeric_limits<double>::infinity() : std::stod(concentration);
            return cmd_generate(spec, gen_out);
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error at %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
