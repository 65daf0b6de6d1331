#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ucoreps/confidence.hpp"
#include "ucoreps/errors.hpp"

namespace ucoreps {

/**
 * Multipliers (beta, mu+, mu-) of the KL projection onto the relaxed polytope.
 *
 * beta has one entry per global state id; the entries of the first and last
 * states stay at 0. mu+ and mu- have one entry per triple. A feasible point
 * also satisfies mu+ + mu- = sigma(x,a), constant along each pair's row: this
 * is what remains of the multiplier of the aggregate L1 constraint once the
 * per-successor slack variables are eliminated.
 */
class DualVariables {
public:
    explicit DualVariables(const Shape& shape);

    std::span<double> beta() { return std::span<double>(data_).first(states_); }
    std::span<const double> beta() const { return std::span<const double>(data_).first(states_); }
    std::span<double> mu_plus() { return std::span<double>(data_).subspan(states_, triples_); }
    std::span<const double> mu_plus() const { return std::span<const double>(data_).subspan(states_, triples_); }
    std::span<double> mu_minus() { return std::span<double>(data_).subspan(states_ + triples_, triples_); }
    std::span<const double> mu_minus() const {
        return std::span<const double>(data_).subspan(states_ + triples_, triples_);
    }

    /// beta, then mu+, then mu-.
    std::span<double> flat() noexcept { return data_; }
    std::span<const double> flat() const noexcept { return data_; }

    std::size_t num_states() const noexcept { return states_; }
    std::size_t num_triples() const noexcept { return triples_; }

private:
    std::size_t states_;
    std::size_t triples_;
    std::vector<double> data_;
};

/// q_t * exp(-eta z_t), entrywise.
OccupancyMeasure unconstrained_step(const OccupancyMeasure& q_t, const TripleField& z, double eta);

/// sum q ln(q / q') - q + q'.
double unnormalized_kl(const TripleTensor& q, const TripleTensor& q_ref);

/**
 * The dual of min D(q || q_t e^{-eta z}) over the relaxed polytope of a
 * confidence set, as a function of the multipliers:
 *
 *     G(beta, mu) = sum_k ln Z_k,   Z_k = sum over layer k of q_t e^{B}
 *
 * with B the estimated Bellman error. The candidate primal at given duals is
 * q_t e^{B} / Z_{k(x)}.
 */
class DualProblem {
public:
    DualProblem(const OccupancyMeasure& q_t, const TripleField& z, double eta, const ConfidenceSet& set);

    const Shape& shape() const noexcept { return *shape_; }
    const ShapePtr& shape_ptr() const noexcept { return shape_; }
    double eta() const noexcept { return eta_; }
    std::span<const double> estimate() const noexcept { return p_bar_; }
    std::span<const double> radius() const noexcept { return radius_; }

    TripleField bellman_error(const DualVariables& d) const;
    double objective(const DualVariables& d) const;
    DualVariables gradient(const DualVariables& d) const;
    OccupancyMeasure candidate(const DualVariables& d) const;

    /// Objective; also writes the candidate and, if `grad` is non-null, the gradient.
    double evaluate(const DualVariables& d, std::span<double> candidate, DualVariables* grad) const;

    /// The unconstrained minimizer q_t e^{-eta z}.
    OccupancyMeasure unconstrained() const;

    /**
     * Objective and candidate in terms of per-triple sums s = mu+ + mu- and
     * differences v = mu- - mu+. `beta` has one entry per state; boundary
     * entries are ignored.
     */
    double evaluate_sum_difference(std::span<const double> beta, std::span<const double> sum,
                                   std::span<const double> difference, std::span<double> candidate) const;

private:
    ShapePtr shape_;
    double eta_;
    std::vector<double> log_q_;
    std::vector<double> eta_z_;
    std::vector<double> p_bar_;
    std::vector<double> radius_;
};

/// Euclidean projection of one pair's (mu+, mu-) rows onto {mu+, mu- >= 0, mu+ + mu- constant}.
void project_multiplier_block(std::span<double> mu_plus, std::span<double> mu_minus);

/// Projects every pair block and pins the boundary beta entries to 0.
void project_duals(const Shape& shape, DualVariables& d);

struct SolverOptions {
    double gtol = 1e-8;
    int max_iterations = 20000;
    double armijo = 1e-4;
    double backtrack = 0.5;
    /// Window of the nonmonotone line search; 1 gives plain monotone backtracking.
    int nonmonotone_memory = 1;
    bool warm_start = true;
};

struct SolverReport {
    bool converged = false;
    int iterations = 0;
    int evaluations = 0;
    /// Mass-scaled projected-gradient residual at the returned duals.
    double residual = 0.0;
    double objective = 0.0;
};

struct DualSolution {
    DualVariables duals;
    SolverReport report;
};

class NonConvergenceError : public Error {
public:
    NonConvergenceError(SolverReport report, DualVariables best);

    const SolverReport& report() const noexcept { return report_; }
    const DualVariables& best() const noexcept { return best_; }

private:
    SolverReport report_;
    DualVariables best_;
};

/**
 * Minimizes G by projected gradient with Barzilai-Borwein steps and Armijo
 * backtracking.
 *
 * The solver works in the coordinates sigma = mu+ + mu- (one per pair) and
 * w = mu- - mu+ (one per triple), where the feasible set is |w| <= sigma.
 * Steps are preconditioned by the candidate's masses: state mass for beta,
 * pair mass for sigma, and q(x,a,x') + P-bar(x'|x,a) q(x,a) for w.
 *
 * It stops once the projected-gradient step, scaled by state and pair mass,
 * is at most `gtol` in the infinity norm. In these units the beta part is the
 * flow residual relative to state mass and the rest is the confidence
 * residual relative to pair mass. Throws NonConvergenceError (carrying the
 * best iterate) when the iteration budget runs out.
 */
DualSolution solve_dual(const DualProblem& problem, const SolverOptions& options = {},
                        const DualVariables* warm = nullptr);

/// Mass-scaled projected-gradient residual used as the stopping criterion.
double projected_gradient_residual(const DualProblem& problem, const DualVariables& d);

struct Projection {
    OccupancyMeasure q;
    DualVariables duals;
    SolverReport report;
};

/// solve_dual followed by the candidate at the optimal duals.
Projection project(const DualProblem& problem, const SolverOptions& options = {}, const DualVariables* warm = nullptr);

struct KktCertificate {
    /// max_k |sum of layer k - 1|
    double normalization = 0.0;
    /// max over interior states of |inflow - outflow|
    double flow = 0.0;
    /// max over pairs of ||P^q - P-bar||_1 - eps (negative when strictly inside)
    double confidence_excess = 0.0;
    /// Worst violation of complementary slackness on multipliers above the threshold.
    double slackness = 0.0;
};

/// Primal feasibility and complementary slackness of the candidate at `d`.
KktCertificate kkt_certificate(const DualProblem& problem, const DualVariables& d, double active_threshold = 1e-6);

} // namespace ucoreps
