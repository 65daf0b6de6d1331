#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ucoreps/config.hpp"

namespace ucoreps {

/// Identifier of the per-run CSV layout.
inline constexpr std::string_view trace_schema = "ucoreps-trace/1";

/**
 * One CSV row. Values refer to episode t, played with (q_t, pi_t); the solver
 * and KKT columns describe the update computed after the episode.
 */
struct EpisodeRow {
    std::int64_t t = 0;
    int epoch = 1;
    bool epoch_advanced = false;
    /// f(q^{P, pi_t}; l_t)
    double true_value = 0.0;
    /// f(q_t; l_t)
    double optimistic_value = 0.0;
    /// f of the realized trajectory's indicator
    double realized_value = 0.0;
    double cumulative_true = 0.0;
    double cumulative_optimistic = 0.0;
    /// sum over episodes so far of true - optimistic
    double regret_approximation = 0.0;
    /// ||q^{P, pi_t} - q_t||_1
    double occupancy_gap = 0.0;
    /// max over pairs of ||P^{q_t}(.|x,a) - P(.|x,a)||_1
    double xi_max = 0.0;
    /// max over pairs of ||P^{q_t} - P-bar||_1 - eps for the set in force
    double containment_excess = 0.0;
    /// worst occupancy violation (normalization or flow) of q_t
    double occupancy_violation = 0.0;
    int solver_iterations = 0;
    double solver_residual = 0.0;
    bool solver_converged = true;
    bool flagged = false;
    double kkt_flow = 0.0;
    double kkt_confidence = 0.0;
    double kkt_slackness = 0.0;
    double descent_lhs = 0.0;
    double descent_rhs = 0.0;
};

struct Checkpoint {
    std::int64_t t = 0;
    double cumulative_true = 0.0;
    double cumulative_optimistic = 0.0;
    /// best-in-hindsight value over episodes 1..t
    double comparator = 0.0;
    double comparator_gap = 0.0;
    /// R^C = cumulative_true - comparator
    double regret = 0.0;
    /// R^APP = cumulative_true - cumulative_optimistic
    double approximation = 0.0;
    /// R^ON = cumulative_optimistic - comparator
    double online = 0.0;
    double bound = 0.0;
};

struct EpochSnapshot {
    int epoch = 1;
    std::int64_t start = 1;
    std::size_t visited_pairs = 0;
    double min_radius = 0.0;
    double max_radius = 0.0;
    double mean_radius = 0.0;
    bool contains_true = true;
};

struct RunResult {
    std::uint64_t seed = 0;
    std::uint64_t mdp_seed = 0;
    std::uint64_t loss_seed = 0;
    double eta = 0.0;
    double delta = 0.0;
    double lipschitz = 0.0;
    int num_states = 0;
    int num_actions = 0;
    int horizon = 0;
    std::vector<EpisodeRow> trace;
    std::vector<Checkpoint> checkpoints;
    std::vector<EpochSnapshot> epochs;
    int flagged = 0;
    /// True transition inside the confidence set of every epoch.
    bool covered = true;
    /// sum_t <q_t - q*, z_t> for the final comparator q*, and the matching OMD bound plus 1e-3 T.
    double online_linearized = 0.0;
    double online_bound = 0.0;
    /// <q_T, l_T> style final value f(q_T; l_T) and the comparator's per-episode average at T.
    double final_value = 0.0;
    double final_comparator_average = 0.0;
};

/// Things run_seed can skip when only part of the output is needed.
struct RunOptions {
    bool comparator = true;
    bool trace = true;
};

/// 15 F L |X| sqrt(t |A| ln(T |X| |A| / delta)).
double regret_bound(double lipschitz, int horizon, int num_states, int num_actions, std::int64_t t,
                    std::int64_t episodes, double delta);

/// eta F^2 L T + L ln(|X|^2 |A| / L^2) / eta.
double omd_bound(double eta, double lipschitz, int horizon, int num_states, int num_actions, std::int64_t episodes);

/**
 * Regret split at episode t of a trace, given the comparator value over
 * episodes 1..t. Computed from the cumulative columns, so R^C, R^APP and R^ON
 * agree up to one rounding each.
 */
Checkpoint regret_decomposition(std::span<const EpisodeRow> trace, std::int64_t t, double comparator,
                                double comparator_gap = 0.0);

/// One seed of the experiment, run sequentially.
RunResult run_seed(const ExperimentConfig& config, std::uint64_t seed, const RunOptions& options = {});

struct ExperimentResult {
    ExperimentConfig config;
    /// Sorted by seed.
    std::vector<RunResult> runs;
    double wall_seconds = 0.0;
};

/// Runs every seed, up to config.threads at a time.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

void write_trace_csv(std::ostream& out, const RunResult& run);
std::string trace_csv(const RunResult& run);

/// Manifest with the config and its hash, RNG and library identifiers, timings and per-run summaries.
std::string manifest_json(const ExperimentResult& result);

/// Writes trace_<seed>.csv files (when enabled) and manifest.json into config.output_dir.
void write_artifacts(const ExperimentResult& result);

/// Least-squares slope of log value against log t; NaN when any value is not positive.
double log_log_slope(std::span<const std::int64_t> t, std::span<const double> value);

struct CoverageResult {
    int runs = 0;
    int covered = 0;
    double fraction = 0.0;
    /// 1 - delta minus three binomial standard deviations.
    double floor = 0.0;
};

/// Fraction of runs whose confidence sets contained the true transition at every epoch.
/// Uses seeds 1..n_seeds when n_seeds > 0, otherwise the configured seeds.
CoverageResult coverage_study(const ExperimentConfig& config, int n_seeds = 0);

} // namespace ucoreps
