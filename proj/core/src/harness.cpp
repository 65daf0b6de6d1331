#include "ucoreps/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "ucoreps/errors.hpp"
#include "ucoreps/mdp_io.hpp"

namespace ucoreps {

using json = nlohmann::json;

namespace {

constexpr std::uint64_t trajectory_stream = 0x545241;
constexpr std::uint64_t mdp_seed_salt = 0x6d64702d73656564ULL;
constexpr std::uint64_t loss_seed_salt = 0x6c6f73732d736565ULL;

EpochSnapshot snapshot(const ConfidenceSet& set, const EpochCounters& counters, const TransitionFunction& p) {
    EpochSnapshot s;
    s.epoch = set.epoch;
    s.start = set.start;
    const auto& N = counters.cumulative_pair_counts();
    s.visited_pairs = static_cast<std::size_t>(std::count_if(N.begin(), N.end(), [](auto n) { return n > 0; }));
    if (!set.radius.empty()) {
        s.min_radius = *std::min_element(set.radius.begin(), set.radius.end());
        s.max_radius = *std::max_element(set.radius.begin(), set.radius.end());
        double sum = 0.0;
        for (double r : set.radius)
            sum += r;
        s.mean_radius = sum / static_cast<double>(set.radius.size());
    }
    s.contains_true = contains_true_transition(set, p);
    return s;
}

LayeredMdp build_mdp(const ExperimentConfig& config, std::uint64_t mdp_seed) {
    if (config.mdp_file)
        return load_mdp(*config.mdp_file);
    MdpSpec spec = config.mdp;
    spec.seed = mdp_seed;
    return generate_mdp(spec);
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

double regret_bound(double lipschitz, int horizon, int num_states, int num_actions, std::int64_t t,
                    std::int64_t episodes, double delta) {
    const double X = num_states, A = num_actions;
    const double log_term = std::log(static_cast<double>(episodes) * X * A / delta);
    return 15.0 * lipschitz * horizon * X * std::sqrt(static_cast<double>(t) * A * log_term);
}

double omd_bound(double eta, double lipschitz, int horizon, int num_states, int num_actions, std::int64_t episodes) {
    const double L = horizon, X = num_states;
    return eta * lipschitz * lipschitz * L * static_cast<double>(episodes) +
           L * std::log(X * X * num_actions / (L * L)) / eta;
}

Checkpoint regret_decomposition(std::span<const EpisodeRow> trace, std::int64_t t, double comparator,
                                double comparator_gap) {
    if (t < 1 || static_cast<std::size_t>(t) > trace.size())
        throw DomainError("regret_decomposition: checkpoint outside the trace");
    const EpisodeRow& row = trace[static_cast<std::size_t>(t - 1)];
    Checkpoint c;
    c.t = t;
    c.cumulative_true = row.cumulative_true;
    c.cumulative_optimistic = row.cumulative_optimistic;
    c.comparator = comparator;
    c.comparator_gap = comparator_gap;
    c.regret = row.cumulative_true - comparator;
    c.approximation = row.cumulative_true - row.cumulative_optimistic;
    c.online = row.cumulative_optimistic - comparator;
    return c;
}

RunResult run_seed(const ExperimentConfig& config, std::uint64_t seed, const RunOptions& options) {
    validate_config(config);
    RunResult run;
    run.seed = seed;
    run.mdp_seed = config.mdp_seed_pinned ? config.mdp.seed : Rng::mix(seed ^ mdp_seed_salt);
    run.loss_seed = config.loss_seed_pinned ? config.losses.seed : Rng::mix(seed ^ loss_seed_salt);

    const LayeredMdp mdp = build_mdp(config, run.mdp_seed);
    const ShapePtr& shape = mdp.shape_ptr();
    const TransitionFunction& p = mdp.transition();
    LossSchedule schedule = config.losses;
    schedule.seed = run.loss_seed;

    const Criterion criterion = make_criterion(config.criterion);
    LearnerConfig lc;
    lc.episodes = config.episodes;
    lc.delta = resolve_delta(config, *shape);
    lc.eta = config.eta;
    lc.mode = config.mode;
    lc.epoch_rule = config.epoch_rule;
    lc.solver = config.solver;
    Learner learner(shape, criterion, lc, p);

    run.eta = learner.eta();
    run.delta = lc.delta;
    run.lipschitz = criterion.lipschitz_bound(shape->horizon());
    run.num_states = shape->num_states();
    run.num_actions = shape->num_actions();
    run.horizon = shape->horizon();

    const auto checkpoints = resolve_checkpoints(config);
    auto next_checkpoint = checkpoints.begin();
    std::optional<HindsightAccumulator> hindsight;
    if (options.comparator)
        hindsight.emplace(criterion, p);

    Rng rng = Rng::derived(seed, trajectory_stream);
    run.epochs.push_back(snapshot(learner.confidence_set(), learner.counters(), p));
    run.covered = run.epochs.back().contains_true;

    const std::size_t n = shape->num_triples();
    std::vector<double> z_sum(n, 0.0);
    double qz_sum = 0.0;
    double cumulative_true = 0.0, cumulative_optimistic = 0.0;
    run.trace.reserve(static_cast<std::size_t>(config.episodes));

    for (std::int64_t t = 1; t <= config.episodes; ++t) {
        const LossFunction loss = loss_at(schedule, shape, t);
        const OccupancyMeasure& q_t = learner.occupancy();
        EpisodeRow row;
        row.t = t;
        row.epoch = learner.confidence_set().epoch;

        const OccupancyMeasure q_true = occupancy_from(p, learner.policy());
        row.true_value = criterion.evaluate(q_true, loss);
        row.optimistic_value = criterion.evaluate(q_t, loss);
        row.occupancy_gap = l1_distance(q_true, q_t);
        const TransitionFunction p_t = induced_transition(q_t, true);
        for (std::size_t pair = 0; pair < shape->num_pairs(); ++pair)
            row.xi_max = std::max(row.xi_max, l1_row_distance(p_t, p, pair));
        const ContainmentReport contained = contains(learner.confidence_set(), q_t, 1e-6);
        row.containment_excess = contained.worst_excess;
        row.occupancy_violation =
            std::max(contained.occupancy.normalization_violation, contained.occupancy.flow_violation);

        const TripleField z = criterion.subgradient(q_t, loss);
        for (std::size_t j = 0; j < n; ++j) {
            qz_sum += q_t[j] * z[j];
            z_sum[j] += z[j];
        }
        if (hindsight)
            hindsight->add(loss);
        if (t == config.episodes)
            run.final_value = row.optimistic_value;

        const Trajectory u = learner.act(p, rng);
        row.realized_value = criterion.evaluate(trajectory_indicator(shape, u), loss);
        const EpisodeRecord rec = learner.observe(u, loss);
        row.epoch_advanced = rec.advanced;
        row.solver_iterations = rec.solver.iterations;
        row.solver_residual = rec.solver.residual;
        row.solver_converged = rec.solver.converged;
        row.flagged = rec.flagged;
        row.kkt_flow = rec.kkt.flow;
        row.kkt_confidence = rec.kkt.confidence_excess;
        row.kkt_slackness = rec.kkt.slackness;
        row.descent_lhs = rec.descent_lhs;
        row.descent_rhs = rec.descent_rhs;
        run.flagged += rec.flagged ? 1 : 0;
        if (rec.advanced) {
            run.epochs.push_back(snapshot(learner.confidence_set(), learner.counters(), p));
            run.covered = run.covered && run.epochs.back().contains_true;
        }

        cumulative_true += row.true_value;
        cumulative_optimistic += row.optimistic_value;
        row.cumulative_true = cumulative_true;
        row.cumulative_optimistic = cumulative_optimistic;
        row.regret_approximation = cumulative_true - cumulative_optimistic;
        run.trace.push_back(row);

        const bool at_checkpoint = next_checkpoint != checkpoints.end() && *next_checkpoint == t;
        if (hindsight && (at_checkpoint || t == config.episodes)) {
            const Comparator comp = hindsight->solve(config.comparator);
            if (at_checkpoint) {
                Checkpoint c = regret_decomposition(run.trace, t, comp.value, comp.gap);
                c.bound = regret_bound(run.lipschitz, run.horizon, run.num_states, run.num_actions, t, config.episodes,
                                       run.delta);
                run.checkpoints.push_back(c);
            }
            if (t == config.episodes) {
                run.online_linearized = qz_sum - inner_product(comp.q.values(), z_sum);
                run.online_bound =
                    omd_bound(run.eta, run.lipschitz, run.horizon, run.num_states, run.num_actions, config.episodes) +
                    1e-3 * static_cast<double>(config.episodes);
                run.final_comparator_average = comp.value / static_cast<double>(config.episodes);
            }
        }
        if (at_checkpoint)
            ++next_checkpoint;
    }
    if (!options.trace) {
        run.trace.clear();
        run.trace.shrink_to_fit();
    }
    return run;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
    validate_config(config);
    const auto start = std::chrono::steady_clock::now();
    ExperimentResult result;
    result.config = config;
    std::vector<std::uint64_t> seeds = config.seeds;
    std::sort(seeds.begin(), seeds.end());
    seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
    result.runs.resize(seeds.size());

    std::size_t workers = config.threads > 0 ? static_cast<std::size_t>(config.threads)
                                             : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, seeds.size());
    std::atomic<std::size_t> next{0};
    std::vector<std::future<void>> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.push_back(std::async(std::launch::async, [&] {
            for (std::size_t i = next++; i < seeds.size(); i = next++)
                result.runs[i] = run_seed(config, seeds[i], options);
        }));
    for (auto& f : pool)
        f.get();
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

void write_trace_csv(std::ostream& out, const RunResult& run) {
    out << "# " << trace_schema << " seed=" << run.seed << "\n";
    out << "t,epoch,epoch_advanced,true_value,optimistic_value,realized_value,cumulative_true,"
           "cumulative_optimistic,regret_approximation,occupancy_gap,xi_max,containment_excess,"
           "occupancy_violation,solver_iterations,solver_residual,solver_converged,flagged,kkt_flow,"
           "kkt_confidence,kkt_slackness,descent_lhs,descent_rhs\n";
    for (const auto& r : run.trace) {
        out << r.t << ',' << r.epoch << ',' << (r.epoch_advanced ? 1 : 0) << ',' << format_double(r.true_value) << ','
            << format_double(r.optimistic_value) << ',' << format_double(r.realized_value) << ','
            << format_double(r.cumulative_true) << ',' << format_double(r.cumulative_optimistic) << ','
            << format_double(r.regret_approximation) << ',' << format_double(r.occupancy_gap) << ','
            << format_double(r.xi_max) << ',' << format_double(r.containment_excess) << ','
            << format_double(r.occupancy_violation) << ',' << r.solver_iterations << ','
            << format_double(r.solver_residual) << ',' << (r.solver_converged ? 1 : 0) << ',' << (r.flagged ? 1 : 0)
            << ',' << format_double(r.kkt_flow) << ',' << format_double(r.kkt_confidence) << ','
            << format_double(r.kkt_slackness) << ',' << format_double(r.descent_lhs) << ','
            << format_double(r.descent_rhs) << '\n';
    }
}

std::string trace_csv(const RunResult& run) {
    std::ostringstream out;
    write_trace_csv(out, run);
    return out.str();
}

double log_log_slope(std::span<const std::int64_t> t, std::span<const double> value) {
    if (t.size() != value.size() || t.size() < 2)
        throw DomainError("log_log_slope needs at least two matching points");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!(value[i] > 0.0) || t[i] < 1)
            return std::numeric_limits<double>::quiet_NaN();
        const double x = std::log(static_cast<double>(t[i]));
        const double y = std::log(value[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double k = static_cast<double>(t.size());
    return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

std::string manifest_json(const ExperimentResult& result) {
    const std::string canonical = canonical_json(result.config);
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical)));

    json root;
    root["format"] = "ucoreps-manifest/1";
    root["trace_schema"] = std::string(trace_schema);
    root["library_version"] = std::string(library_version());
    root["rng_algorithm"] = std::string(Rng::algorithm_id);
    root["config"] = json::parse(canonical);
    root["config_hash"] = std::string("fnv1a64:") + hash;
    root["wall_clock_seconds"] = result.wall_seconds;

    json runs = json::array();
    for (const auto& run : result.runs) {
        json r;
        r["seed"] = run.seed;
        r["mdp_seed"] = run.mdp_seed;
        r["loss_seed"] = run.loss_seed;
        r["eta"] = run.eta;
        r["delta"] = run.delta;
        r["lipschitz"] = run.lipschitz;
        r["flagged_episodes"] = run.flagged;
        r["covered"] = run.covered;
        r["trace_file"] = "trace_" + std::to_string(run.seed) + ".csv";
        json epochs = json::array();
        for (const auto& e : run.epochs)
            epochs.push_back({{"epoch", e.epoch},
                              {"start", e.start},
                              {"visited_pairs", e.visited_pairs},
                              {"min_radius", e.min_radius},
                              {"max_radius", e.max_radius},
                              {"mean_radius", e.mean_radius},
                              {"contains_true", e.contains_true}});
        r["epochs"] = epochs;
        json cps = json::array();
        for (const auto& c : run.checkpoints)
            cps.push_back({{"t", c.t},
                           {"cumulative_true", c.cumulative_true},
                           {"cumulative_optimistic", c.cumulative_optimistic},
                           {"comparator", c.comparator},
                           {"comparator_gap", c.comparator_gap},
                           {"regret", c.regret},
                           {"approximation", c.approximation},
                           {"online", c.online},
                           {"bound", c.bound},
                           {"within_bound", c.regret <= c.bound}});
        r["checkpoints"] = cps;
        r["online_linearized"] = run.online_linearized;
        r["online_bound"] = run.online_bound;
        runs.push_back(r);
    }
    root["runs"] = runs;

    if (!result.runs.empty() && !result.runs.front().checkpoints.empty()) {
        const auto& first = result.runs.front().checkpoints;
        std::vector<std::int64_t> ts;
        std::vector<double> mean(first.size(), 0.0);
        for (const auto& c : first)
            ts.push_back(c.t);
        bool aligned = true;
        for (const auto& run : result.runs) {
            if (run.checkpoints.size() != first.size()) {
                aligned = false;
                break;
            }
            for (std::size_t i = 0; i < first.size(); ++i)
                mean[i] += run.checkpoints[i].regret / static_cast<double>(result.runs.size());
        }
        if (aligned) {
            json summary;
            summary["checkpoints"] = ts;
            summary["mean_regret"] = mean;
            if (ts.size() >= 2) {
                const double slope = log_log_slope(ts, mean);
                summary["log_log_slope"] = std::isnan(slope) ? json(nullptr) : json(slope);
            }
            root["summary"] = summary;
        }
    }
    int covered = 0;
    for (const auto& run : result.runs)
        covered += run.covered ? 1 : 0;
    root["coverage"] = {{"runs", result.runs.size()}, {"covered", covered}};
    return root.dump(2);
}

void write_artifacts(const ExperimentResult& result) {
    const auto& dir = result.config.output_dir;
    std::filesystem::create_directories(dir);
    if (result.config.write_traces) {
        for (const auto& run : result.runs) {
            const auto path = dir / ("trace_" + std::to_string(run.seed) + ".csv");
            std::ofstream out(path, std::ios::binary);
            if (!out)
                throw Error("cannot write " + path.string());
            write_trace_csv(out, run);
        }
    }
    const auto path = dir / "manifest.json";
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write " + path.string());
    out << manifest_json(result) << '\n';
}

CoverageResult coverage_study(const ExperimentConfig& config, int n_seeds) {
    ExperimentConfig c = config;
    if (n_seeds > 0) {
        c.seeds.clear();
        for (int s = 1; s <= n_seeds; ++s)
            c.seeds.push_back(static_cast<std::uint64_t>(s));
    }
    const ExperimentResult result = run_experiment(c, RunOptions{false, false});
    CoverageResult out;
    out.runs = static_cast<int>(result.runs.size());
    for (const auto& run : result.runs)
        out.covered += run.covered ? 1 : 0;
    out.fraction = static_cast<double>(out.covered) / out.runs;
    const double delta = result.runs.front().delta;
    out.floor = (1.0 - delta) - 3.0 * std::sqrt(delta * (1.0 - delta) / out.runs);
    return out;
}

} // namespace ucoreps
