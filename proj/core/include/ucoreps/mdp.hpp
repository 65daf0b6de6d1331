#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ucoreps/rng.hpp"
#include "ucoreps/shape.hpp"

namespace ucoreps {

/// Row-sum tolerance for transition functions and policies.
inline constexpr double structural_tolerance = 1e-12;
/// Tolerance for occupancy measures produced by the solver.
inline constexpr double iterate_tolerance = 1e-8;

/// Throws StructuralError unless every row of `p` is a distribution within `tol`.
void validate_transition(const TransitionFunction& p, double tol = structural_tolerance);
/// Throws StructuralError unless every state's action distribution sums to 1 within `tol`.
void validate_policy(const Policy& pi, double tol = structural_tolerance);

/**
 * Episodic loop-free MDP: layered shape plus the true transition function.
 * Optional labels map dense indices to names at the I/O boundary.
 */
class LayeredMdp {
public:
    LayeredMdp(ShapePtr shape, TransitionFunction transition);

    const Shape& shape() const noexcept { return *shape_; }
    const ShapePtr& shape_ptr() const noexcept { return shape_; }
    const TransitionFunction& transition() const noexcept { return transition_; }

    /// Per-layer state labels; empty strings where no label was given.
    std::vector<std::vector<std::string>> state_labels;
    std::vector<std::string> action_labels;

private:
    ShapePtr shape_;
    TransitionFunction transition_;
};

struct OccupancyReport {
    bool valid = true;
    /// max_k |sum of layer k - 1|
    double normalization_violation = 0.0;
    int worst_layer = -1;
    /// max over interior states of |inflow - outflow|
    double flow_violation = 0.0;
    int worst_state = -1;
    /// most negative entry (0 when all entries are nonnegative)
    double negativity = 0.0;
};

/// Checks per-layer normalization and flow conservation of `q` within `tol`.
OccupancyReport validate_occupancy(const OccupancyMeasure& q, double tol = iterate_tolerance);

/// P^q(x'|x,a) = q(x,a,x') / sum_y q(x,a,y). With `uniform_fallback`, zero-mass rows
/// become uniform; otherwise they raise DegenerateMarginalError.
TransitionFunction induced_transition(const OccupancyMeasure& q, bool uniform_fallback = false);

/// pi^q(a|x) = q(x,a) / q(x), with the same zero-mass handling as induced_transition.
Policy induced_policy(const OccupancyMeasure& q, bool uniform_fallback = false);

/// q^{P,pi} by forward recursion from the singleton first layer.
OccupancyMeasure occupancy_from(const TransitionFunction& p, const Policy& pi);

struct StateActionMarginals {
    /// q(x,a) indexed by pair id.
    std::vector<double> pair;
    /// q(x) indexed by global state id; the terminal state gets its inflow.
    std::vector<double> state;
};

StateActionMarginals state_action_marginals(const TripleTensor& q);

Trajectory sample_trajectory(const LayeredMdp& mdp, const Policy& pi, Rng& rng);
Trajectory sample_trajectory(const TransitionFunction& p, const Policy& pi, Rng& rng);

/// 0/1 occupancy measure of a single trajectory.
OccupancyMeasure trajectory_indicator(const ShapePtr& shape, const Trajectory& u);

double l1_distance(const TripleTensor& a, const TripleTensor& b);
double l1_row_distance(const TransitionFunction& a, const TransitionFunction& b, std::size_t pair);

Policy uniform_policy(const ShapePtr& shape);
TransitionFunction uniform_transition(const ShapePtr& shape);

/// Deterministic policy choosing `actions[pair_state]` at each decision state,
/// given as one action per global state id of layers 0..L-1.
Policy deterministic_policy(const ShapePtr& shape, const std::vector<int>& action_per_state);

} // namespace ucoreps
