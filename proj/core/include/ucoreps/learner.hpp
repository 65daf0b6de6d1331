#pragma once

#include <cstdint>
#include <optional>

#include "ucoreps/confidence.hpp"
#include "ucoreps/criteria.hpp"
#include "ucoreps/projection.hpp"

namespace ucoreps {

enum class TransitionMode {
    /// Confidence sets around empirical estimates, refreshed at epoch boundaries.
    unknown,
    /// P-bar = P and zero radii throughout; no epochs.
    known,
};

struct LearnerConfig {
    /// Number of episodes T; enters the confidence radii and the default step size.
    std::int64_t episodes = 1;
    double delta = 0.1;
    /// Step size; when absent, default_eta is used.
    std::optional<double> eta;
    TransitionMode mode = TransitionMode::unknown;
    EpochRule epoch_rule = EpochRule::literal;
    SolverOptions solver;
};

/**
 * sqrt(ln(|X|^2 |A| / L^2) / (F^2 T)).
 * Throws ConfigError when |X|^2 |A| <= L^2, where the logarithm is not positive.
 */
double default_eta(const Shape& shape, double lipschitz, std::int64_t episodes);

/// Outcome of one OMD update.
struct PolicyUpdate {
    OccupancyMeasure q;
    Policy pi;
    DualVariables duals;
    SolverReport report;
    /// The solver did not converge and q was rebuilt from the best iterate.
    bool flagged = false;
    KktCertificate kkt;
    /// <q_t - q~_{t+1}, z_t> and eta sum q_t z_t^2; the first is at most the second when z >= 0.
    double descent_lhs = 0.0;
    double descent_rhs = 0.0;
};

/**
 * One mirror-descent step: z = subgradient at q_t, multiplicative step, and the
 * KL projection onto `set`. On solver failure the best candidate is repaired to
 * the occupancy measure of its own induced transition and policy, which is
 * exactly flow-feasible, and the update is flagged.
 */
PolicyUpdate comp_policy(const OccupancyMeasure& q_t, const ConfidenceSet& set, const LossFunction& loss,
                         const Criterion& criterion, double eta, const SolverOptions& options = {},
                         const DualVariables* warm = nullptr);

struct EpisodeRecord {
    std::int64_t t = 0;
    /// Epoch in force during episode t.
    int epoch = 1;
    /// A new epoch starts at t + 1.
    bool advanced = false;
    Trajectory trajectory;
    /// f(q_t; l_t)
    double optimistic_value = 0.0;
    SolverReport solver;
    bool flagged = false;
    KktCertificate kkt;
    double descent_lhs = 0.0;
    double descent_rhs = 0.0;
};

/// UC-O-REPS: entropic mirror descent over occupancy measures with optimistic confidence sets.
class Learner {
public:
    /// `known` is required in known-transition mode and ignored otherwise.
    Learner(ShapePtr shape, Criterion criterion, LearnerConfig config,
            std::optional<TransitionFunction> known = std::nullopt);

    /// Index of the next episode (1-based).
    std::int64_t t() const noexcept { return t_; }
    const OccupancyMeasure& occupancy() const noexcept { return q_; }
    const Policy& policy() const noexcept { return pi_; }
    const ConfidenceSet& confidence_set() const noexcept { return set_; }
    const EpochCounters& counters() const noexcept { return counters_; }
    const Criterion& criterion() const noexcept { return criterion_; }
    const LearnerConfig& config() const noexcept { return config_; }
    double eta() const noexcept { return eta_; }

    /// Traverses one trajectory with the current policy on the true dynamics.
    Trajectory act(const TransitionFunction& true_transition, Rng& rng) const;

    /// Takes the revealed loss of the episode just played and computes q_{t+1}, pi_{t+1}.
    EpisodeRecord observe(const Trajectory& u, const LossFunction& loss);

    EpisodeRecord step(const LayeredMdp& environment, const LossFunction& loss, Rng& rng);

private:
    ShapePtr shape_;
    Criterion criterion_;
    LearnerConfig config_;
    double eta_;
    std::int64_t t_ = 1;
    OccupancyMeasure q_;
    Policy pi_;
    EpochCounters counters_;
    ConfidenceSet set_;
    std::optional<DualVariables> warm_;
};

} // namespace ucoreps
