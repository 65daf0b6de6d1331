#include "ucoreps/learner.hpp"

#include <cmath>

namespace ucoreps {

double default_eta(const Shape& shape, double lipschitz, std::int64_t episodes) {
    const double X = shape.num_states();
    const double L = shape.horizon();
    const double ratio = X * X * shape.num_actions() / (L * L);
    if (!(ratio > 1.0))
        throw ConfigError("eta", "|X|^2 |A| <= L^2 makes the default step size undefined; set eta explicitly");
    if (!(lipschitz > 0.0))
        throw ConfigError("eta", "criterion Lipschitz bound must be positive");
    if (episodes < 1)
        throw ConfigError("episodes", "must be at least 1");
    return std::sqrt(std::log(ratio) / (lipschitz * lipschitz * static_cast<double>(episodes)));
}

PolicyUpdate comp_policy(const OccupancyMeasure& q_t, const ConfidenceSet& set, const LossFunction& loss,
                         const Criterion& criterion, double eta, const SolverOptions& options,
                         const DualVariables* warm) {
    const TripleField z = criterion.subgradient(q_t, loss);
    const DualProblem problem(q_t, z, eta, set);

    PolicyUpdate out{OccupancyMeasure(q_t.shape_ptr()),
                     Policy(q_t.shape_ptr()),
                     DualVariables(q_t.shape()),
                     {},
                     false,
                     {},
                     0.0,
                     0.0};
    const OccupancyMeasure tilde = problem.unconstrained();
    for (std::size_t j = 0; j < q_t.size(); ++j) {
        out.descent_lhs += (q_t[j] - tilde[j]) * z[j];
        out.descent_rhs += eta * q_t[j] * z[j] * z[j];
    }

    try {
        auto solution = solve_dual(problem, options, warm);
        out.duals = std::move(solution.duals);
        out.report = solution.report;
        out.q = problem.candidate(out.duals);
    } catch (const NonConvergenceError& e) {
        out.duals = e.best();
        out.report = e.report();
        out.flagged = true;
        const OccupancyMeasure best = problem.candidate(out.duals);
        out.q = occupancy_from(induced_transition(best, true), induced_policy(best, true));
        for (double& v : out.q.values())
            v = std::max(v, 1e-300);
    }
    out.kkt = kkt_certificate(problem, out.duals);
    out.pi = induced_policy(out.q, true);
    return out;
}

namespace {

LearnerConfig checked(LearnerConfig c) {
    if (c.episodes < 1)
        throw ConfigError("episodes", "must be at least 1");
    if (!(c.delta > 0.0 && c.delta < 1.0))
        throw ConfigError("delta", "must lie in (0, 1)");
    if (c.eta && (!(*c.eta > 0.0) || !std::isfinite(*c.eta)))
        throw ConfigError("eta", "must be positive and finite");
    return c;
}

} // namespace

Learner::Learner(ShapePtr shape, Criterion criterion, LearnerConfig config, std::optional<TransitionFunction> known)
    : shape_(std::move(shape)), criterion_(std::move(criterion)), config_(checked(std::move(config))),
      eta_(config_.eta ? *config_.eta
                       : default_eta(*shape_, criterion_.lipschitz_bound(shape_->horizon()), config_.episodes)),
      q_(shape_), pi_(uniform_policy(shape_)), counters_(shape_),
      set_(make_confidence_set(counters_, config_.episodes, config_.delta)) {
    if (config_.mode == TransitionMode::known) {
        if (!known)
            throw ConfigError("mode", "known-transition mode needs the transition function");
        require_same_shape(*shape_, known->shape(), "known transition");
        for (double v : known->values())
            if (!(v > 0.0))
                throw ConfigError("mode", "known-transition mode needs a transition function with full support");
        set_ = exact_confidence_set(*known);
    }
    q_ = occupancy_from(set_.estimate, pi_);
}

Trajectory Learner::act(const TransitionFunction& true_transition, Rng& rng) const {
    return sample_trajectory(true_transition, pi_, rng);
}

EpisodeRecord Learner::observe(const Trajectory& u, const LossFunction& loss) {
    require_same_shape(*shape_, loss.shape(), "episode loss");
    loss.check_range();

    EpisodeRecord rec;
    rec.t = t_;
    rec.epoch = set_.epoch;
    rec.trajectory = u;
    rec.optimistic_value = criterion_.evaluate(q_, loss);

    counters_.record_episode(u);
    if (config_.mode == TransitionMode::unknown && counters_.should_advance(config_.epoch_rule)) {
        set_ = advance_epoch(counters_, t_ + 1, config_.episodes, config_.delta);
        rec.advanced = true;
        warm_.reset();
    }

    const DualVariables* warm = config_.solver.warm_start && warm_ ? &*warm_ : nullptr;
    PolicyUpdate up = comp_policy(q_, set_, loss, criterion_, eta_, config_.solver, warm);
    rec.solver = up.report;
    rec.flagged = up.flagged;
    rec.kkt = up.kkt;
    rec.descent_lhs = up.descent_lhs;
    rec.descent_rhs = up.descent_rhs;

    q_ = std::move(up.q);
    pi_ = std::move(up.pi);
    warm_ = std::move(up.duals);
    ++t_;
    return rec;
}

EpisodeRecord Learner::step(const LayeredMdp& environment, const LossFunction& loss, Rng& rng) {
    require_same_shape(*shape_, environment.shape(), "environment");
    return observe(act(environment.transition(), rng), loss);
}

} // namespace ucoreps
