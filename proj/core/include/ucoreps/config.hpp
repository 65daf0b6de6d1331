#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ucoreps/adversary.hpp"
#include "ucoreps/comparator.hpp"
#include "ucoreps/criteria.hpp"
#include "ucoreps/learner.hpp"

namespace ucoreps {

/// Version of the library, recorded in run manifests.
std::string_view library_version();

struct CriterionConfig {
    /// "tel", "minmax" or "risk"
    std::string name = "tel";
    double alpha = 0.5;
    double c = 2.0;
};

/// Throws ConfigError for unknown names or invalid risk parameters.
Criterion make_criterion(const CriterionConfig& config);

/**
 * One experiment: an MDP family, a loss schedule, the learner settings and
 * the seeds to run. Seeds drive trajectory sampling; the MDP and loss seeds
 * default to values derived from the run seed unless pinned.
 */
struct ExperimentConfig {
    MdpSpec mdp{{1, 3, 3, 3, 1}, 2, 1.0, 0};
    bool mdp_seed_pinned = false;
    /// When set, the MDP is loaded from this description file instead of generated.
    std::optional<std::filesystem::path> mdp_file;

    LossSchedule losses;
    bool loss_seed_pinned = false;

    CriterionConfig criterion;
    std::int64_t episodes = 1000;
    double delta = 0.1;
    /// Use delta = |X||A|/T, the choice that turns the regret bound into its TEL corollary.
    bool corollary_delta = false;
    std::optional<double> eta;
    TransitionMode mode = TransitionMode::unknown;
    EpochRule epoch_rule = EpochRule::literal;
    std::vector<std::uint64_t> seeds{1};
    /// Episodes at which regret is reported; empty means powers of two up to T, plus T.
    std::vector<std::int64_t> checkpoints;
    SolverOptions solver;
    ComparatorOptions comparator;

    std::filesystem::path output_dir = "ucoreps-out";
    bool write_traces = true;
    /// Concurrent seeds; 0 uses the hardware concurrency.
    int threads = 0;
};

/// Parses the JSON experiment format. Errors carry the JSON path of the offending field.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical JSON rendering (sorted keys, no whitespace); the run manifest hashes this text.
std::string canonical_json(const ExperimentConfig& config);

/// Throws ConfigError when the configuration is unusable.
void validate_config(const ExperimentConfig& config);

/// Sorted checkpoints within [1, T], defaulting as documented on ExperimentConfig.
std::vector<std::int64_t> resolve_checkpoints(const ExperimentConfig& config);

/// delta in force for `shape`, applying the corollary preset when requested.
double resolve_delta(const ExperimentConfig& config, const Shape& shape);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view text) noexcept;

} // namespace ucoreps
