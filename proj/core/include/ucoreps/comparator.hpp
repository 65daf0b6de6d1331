#pragma once

#include <span>
#include <vector>

#include "ucoreps/criteria.hpp"
#include "ucoreps/mdp.hpp"

namespace ucoreps {

/// Deterministic policy minimizing the expected sum of `cost` along trajectories.
struct BestResponse {
    Policy policy;
    OccupancyMeasure q;
    /// <q, cost>
    double value = 0.0;
};

/// Backward induction under `p`. Ties go to the smallest action index.
BestResponse best_response(const TransitionFunction& p, std::span<const double> cost);

struct ComparatorOptions {
    /// Certified suboptimality at which Frank-Wolfe stops.
    double gap_tolerance = 1e-6;
    int max_iterations = 5000;
};

struct Comparator {
    OccupancyMeasure q;
    /// sum_t f(q; l_t)
    double value = 0.0;
    /// Certified bound on value - optimum; 0 for the exact linear case.
    double gap = 0.0;
    int iterations = 0;
    bool converged = true;
};

/**
 * Fixed occupancy measure in Delta(M) minimizing sum_t f(q; l_t).
 *
 * TEL is linear and solved exactly by backward induction on the summed loss.
 * Other criteria use Frank-Wolfe with the backward induction as linear
 * minimization oracle and exact line search; each Frank-Wolfe gap yields a
 * lower bound on the optimum and `gap` is the distance from the best value
 * found to the best lower bound.
 */
Comparator best_in_hindsight(const Criterion& criterion, std::span<const LossFunction> losses,
                             const TransitionFunction& p, const ComparatorOptions& options = {});

/**
 * Incremental comparator over a growing prefix of a loss sequence. Only the
 * per-episode feature inner products are stored, so evaluating a prefix does
 * not need the loss tensors again.
 */
class HindsightAccumulator {
public:
    HindsightAccumulator(Criterion criterion, TransitionFunction p);

    void add(const LossFunction& loss);
    std::size_t size() const noexcept { return count_; }

    /// Comparator over every loss added so far.
    Comparator solve(const ComparatorOptions& options = {}) const;

private:
    Criterion criterion_;
    TransitionFunction p_;
    bool linear_;
    std::size_t count_ = 0;
    std::size_t features_ = 0;
    /// Linear case: running sum of the losses.
    std::vector<double> sum_;
    /// General case: per-episode feature fields, episode-major.
    std::vector<double> fields_;
};

} // namespace ucoreps
