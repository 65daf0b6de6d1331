#pragma once

#include <cstdint>
#include <vector>

#include "ucoreps/mdp.hpp"

namespace ucoreps {

/// When an epoch ends.
enum class EpochRule {
    /// Some pair has n >= N and n > 0.
    literal,
    /// Some pair has n >= max(1, N).
    ucrl2,
};

/// Visit counts for the current epoch (n, m) and for all completed epochs (N, M).
class EpochCounters {
public:
    explicit EpochCounters(ShapePtr shape);

    const Shape& shape() const noexcept { return *shape_; }
    const ShapePtr& shape_ptr() const noexcept { return shape_; }

    void record_episode(const Trajectory& u);

    bool should_advance(EpochRule rule = EpochRule::literal) const;

    /// Folds the in-epoch counts into the cumulative ones and starts epoch i+1 at `next_start`.
    void advance(std::int64_t next_start);

    int epoch() const noexcept { return epoch_; }
    /// Episode index at which the current epoch started.
    std::int64_t epoch_start() const noexcept { return epoch_start_; }

    std::int64_t n(std::size_t pair) const { return n_[pair]; }
    std::int64_t N(std::size_t pair) const { return N_[pair]; }
    std::int64_t m(std::size_t triple) const { return m_[triple]; }
    std::int64_t M(std::size_t triple) const { return M_[triple]; }

    const std::vector<std::int64_t>& in_epoch_pair_counts() const noexcept { return n_; }
    const std::vector<std::int64_t>& cumulative_pair_counts() const noexcept { return N_; }

private:
    ShapePtr shape_;
    int epoch_ = 1;
    std::int64_t epoch_start_ = 1;
    std::vector<std::int64_t> n_, N_, m_, M_;
};

/// P-bar and per-pair L1 radii in force during one epoch.
struct ConfidenceSet {
    TransitionFunction estimate;
    std::vector<double> radius;
    int epoch = 1;
    std::int64_t start = 1;
};

/// sqrt(2 |X_{k+1}| ln(T |X| |A| / delta) / max(1, N)).
double confidence_radius(int next_layer_size, std::int64_t visits, std::int64_t T, int num_states, int num_actions,
                         double delta);

/// Confidence set from the cumulative counts of `counters`. Unvisited pairs get a uniform row.
ConfidenceSet make_confidence_set(const EpochCounters& counters, std::int64_t T, double delta);

/// Advances `counters` and returns the confidence set of the new epoch.
ConfidenceSet advance_epoch(EpochCounters& counters, std::int64_t next_start, std::int64_t T, double delta);

/// The set pinned to a known transition function: P-bar = P, every radius 0.
ConfidenceSet exact_confidence_set(const TransitionFunction& p);

struct ContainmentReport {
    bool contained = true;
    OccupancyReport occupancy;
    /// max over pairs of ||P^q(.|x,a) - P-bar(.|x,a)||_1 - eps(x,a)
    double worst_excess = 0.0;
    std::size_t worst_pair = 0;
};

/// q in the relaxed polytope: valid occupancy measure within `occupancy_tol`, and
/// each induced row within eps + `tol` of the estimate. Zero-mass rows impose no constraint.
ContainmentReport contains(const ConfidenceSet& set, const OccupancyMeasure& q, double tol,
                           double occupancy_tol = iterate_tolerance);

/// ||P(.|x,a) - P-bar(.|x,a)||_1 <= eps(x,a) for every pair.
bool contains_true_transition(const ConfidenceSet& set, const TransitionFunction& p);

} // namespace ucoreps
