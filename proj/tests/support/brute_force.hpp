#pragma once

#include "ucoreps/confidence.hpp"

namespace ucoreps::testing {

struct BruteForceOptions {
    /// Outer iterations stop once (number of inequalities) / t falls below this.
    double duality_gap = 1e-11;
    double barrier_growth = 20.0;
    int max_newton_per_stage = 200;
};

struct BruteForceResult {
    OccupancyMeasure q;
    /// D(q || q_tilde)
    double objective = 0.0;
    int newton_steps = 0;
    double duality_gap = 0.0;
};

/**
 * min D(q || q_tilde) over the relaxed polytope, written with explicit linear
 * constraints in (q, t): layer-0 normalization and flow conservation as
 * equalities, -t <= q - P-bar Q <= t per triple, and sum t <= eps Q per pair.
 * Log-barrier interior point with equality-constrained Newton steps. Needs
 * every radius positive; intended for instances with a few dozen triples.
 */
BruteForceResult brute_force_project(const OccupancyMeasure& q_tilde, const ConfidenceSet& set,
                                     const BruteForceOptions& options = {});

} // namespace ucoreps::testing
