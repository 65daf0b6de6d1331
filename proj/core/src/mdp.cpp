#include "ucoreps/mdp.hpp"

#include <cmath>
#include <string>

#include "ucoreps/errors.hpp"

namespace ucoreps {

void validate_transition(const TransitionFunction& p, double tol) {
    const Shape& s = p.shape();
    for (std::size_t pair = 0; pair < s.num_pairs(); ++pair) {
        double sum = 0.0;
        for (double v : p.row(pair)) {
            if (!(v >= 0.0) || !std::isfinite(v))
                throw StructuralError("transition entry negative or not finite at pair " + std::to_string(pair));
            sum += v;
        }
        if (std::abs(sum - 1.0) > tol)
            throw StructuralError("transition row of pair " + std::to_string(pair) + " sums to " + std::to_string(sum));
    }
}

void validate_policy(const Policy& pi, double tol) {
    const Shape& s = pi.shape();
    for (int k = 0; k < s.horizon(); ++k) {
        for (int x = 0; x < s.layer_size(k); ++x) {
            double sum = 0.0;
            for (double v : pi.at_state(k, x)) {
                if (!(v >= 0.0) || !std::isfinite(v))
                    throw StructuralError("policy entry negative or not finite");
                sum += v;
            }
            if (std::abs(sum - 1.0) > tol)
                throw StructuralError("policy at layer " + std::to_string(k) + " state " + std::to_string(x) +
                                      " sums to " + std::to_string(sum));
        }
    }
}

LayeredMdp::LayeredMdp(ShapePtr shape, TransitionFunction transition)
    : shape_(std::move(shape)), transition_(std::move(transition)) {
    require_same_shape(*shape_, transition_.shape(), "MDP transition");
    validate_transition(transition_);
}

OccupancyReport validate_occupancy(const OccupancyMeasure& q, double tol) {
    const Shape& s = q.shape();
    OccupancyReport report;
    const int L = s.horizon();
    for (int k = 0; k < L; ++k) {
        double sum = 0.0;
        for (std::size_t j = s.triple_offset(k); j < s.triple_offset(k + 1); ++j)
            sum += q[j];
        const double v = std::abs(sum - 1.0);
        if (v > report.normalization_violation) {
            report.normalization_violation = v;
            report.worst_layer = k;
        }
    }
    std::vector<double> inflow(static_cast<std::size_t>(s.num_states()), 0.0);
    std::vector<double> outflow(static_cast<std::size_t>(s.num_states()), 0.0);
    for (std::size_t j = 0; j < s.num_triples(); ++j) {
        outflow[static_cast<std::size_t>(s.triple_source(j))] += q[j];
        inflow[static_cast<std::size_t>(s.triple_target(j))] += q[j];
        report.negativity = std::min(report.negativity, q[j]);
    }
    for (int k = 1; k < L; ++k) {
        for (int x = 0; x < s.layer_size(k); ++x) {
            const auto id = static_cast<std::size_t>(s.state_id(k, x));
            const double v = std::abs(inflow[id] - outflow[id]);
            if (v > report.flow_violation) {
                report.flow_violation = v;
                report.worst_state = static_cast<int>(id);
            }
        }
    }
    report.valid = report.normalization_violation <= tol && report.flow_violation <= tol && report.negativity >= -tol;
    return report;
}

TransitionFunction induced_transition(const OccupancyMeasure& q, bool uniform_fallback) {
    const Shape& s = q.shape();
    TransitionFunction p(q.shape_ptr());
    for (std::size_t pair = 0; pair < s.num_pairs(); ++pair) {
        auto src = q.row(pair);
        auto dst = p.row(pair);
        double mass = 0.0;
        for (double v : src)
            mass += v;
        if (!(mass > 0.0)) {
            if (!uniform_fallback)
                throw DegenerateMarginalError("zero mass at pair " + std::to_string(pair));
            for (double& v : dst)
                v = 1.0 / static_cast<double>(dst.size());
            continue;
        }
        for (std::size_t i = 0; i < src.size(); ++i)
            dst[i] = src[i] / mass;
    }
    return p;
}

Policy induced_policy(const OccupancyMeasure& q, bool uniform_fallback) {
    const Shape& s = q.shape();
    const auto A = static_cast<std::size_t>(s.num_actions());
    const auto marginals = state_action_marginals(q);
    Policy pi(q.shape_ptr());
    for (std::size_t first = 0; first < s.num_pairs(); first += A) {
        double mass = 0.0;
        for (std::size_t a = 0; a < A; ++a)
            mass += marginals.pair[first + a];
        if (!(mass > 0.0)) {
            if (!uniform_fallback)
                throw DegenerateMarginalError("zero mass at state " + std::to_string(s.pair_state(first)));
            for (std::size_t a = 0; a < A; ++a)
                pi[first + a] = 1.0 / static_cast<double>(A);
            continue;
        }
        for (std::size_t a = 0; a < A; ++a)
            pi[first + a] = marginals.pair[first + a] / mass;
    }
    return pi;
}

OccupancyMeasure occupancy_from(const TransitionFunction& p, const Policy& pi) {
    const Shape& s = p.shape();
    require_same_shape(s, pi.shape(), "occupancy_from policy");
    OccupancyMeasure q(p.shape_ptr());
    std::vector<double> mass(static_cast<std::size_t>(s.num_states()), 0.0);
    mass[0] = 1.0;
    for (std::size_t pair = 0; pair < s.num_pairs(); ++pair) {
        const double w = mass[static_cast<std::size_t>(s.pair_state(pair))] * pi[pair];
        const std::size_t begin = s.row_begin(pair);
        const std::size_t n = s.row_length(pair);
        for (std::size_t i = 0; i < n; ++i) {
            const double v = w * p[begin + i];
            q[begin + i] = v;
            mass[static_cast<std::size_t>(s.triple_target(begin + i))] += v;
        }
    }
    return q;
}

StateActionMarginals state_action_marginals(const TripleTensor& q) {
    const Shape& s = q.shape();
    StateActionMarginals m;
    m.pair.assign(s.num_pairs(), 0.0);
    m.state.assign(static_cast<std::size_t>(s.num_states()), 0.0);
    for (std::size_t pair = 0; pair < s.num_pairs(); ++pair) {
        double sum = 0.0;
        for (double v : q.row(pair))
            sum += v;
        m.pair[pair] = sum;
        m.state[static_cast<std::size_t>(s.pair_state(pair))] += sum;
    }
    const int L = s.horizon();
    for (std::size_t j = s.triple_offset(L - 1); j < s.triple_offset(L); ++j)
        m.state[static_cast<std::size_t>(s.num_states() - 1)] += q[j];
    return m;
}

Trajectory sample_trajectory(const TransitionFunction& p, const Policy& pi, Rng& rng) {
    const Shape& s = p.shape();
    require_same_shape(s, pi.shape(), "sample_trajectory policy");
    const int L = s.horizon();
    Trajectory u;
    u.states.reserve(static_cast<std::size_t>(L) + 1);
    u.actions.reserve(static_cast<std::size_t>(L));
    int x = 0;
    u.states.push_back(x);
    for (int k = 0; k < L; ++k) {
        const int a = rng.categorical(pi.at_state(k, x));
        const int next = rng.categorical(p.row(s.pair_id(k, x, a)));
        u.actions.push_back(a);
        u.states.push_back(next);
        x = next;
    }
    return u;
}

Trajectory sample_trajectory(const LayeredMdp& mdp, const Policy& pi, Rng& rng) {
    return sample_trajectory(mdp.transition(), pi, rng);
}

OccupancyMeasure trajectory_indicator(const ShapePtr& shape, const Trajectory& u) {
    OccupancyMeasure q(shape);
    for (int k = 0; k < shape->horizon(); ++k)
        q[u.triple(*shape, k)] = 1.0;
    return q;
}

double l1_distance(const TripleTensor& a, const TripleTensor& b) {
    require_same_shape(a.shape(), b.shape(), "l1_distance");
    double d = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j)
        d += std::abs(a[j] - b[j]);
    return d;
}

double l1_row_distance(const TransitionFunction& a, const TransitionFunction& b, std::size_t pair) {
    require_same_shape(a.shape(), b.shape(), "l1_row_distance");
    auto ra = a.row(pair);
    auto rb = b.row(pair);
    double d = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i)
        d += std::abs(ra[i] - rb[i]);
    return d;
}

Policy uniform_policy(const ShapePtr& shape) {
    return Policy(shape, 1.0 / static_cast<double>(shape->num_actions()));
}

TransitionFunction uniform_transition(const ShapePtr& shape) {
    TransitionFunction p(shape);
    for (std::size_t pair = 0; pair < shape->num_pairs(); ++pair)
        for (double& v : p.row(pair))
            v = 1.0 / static_cast<double>(shape->row_length(pair));
    return p;
}

Policy deterministic_policy(const ShapePtr& shape, const std::vector<int>& action_per_state) {
    Policy pi(shape);
    for (std::size_t pair = 0; pair < shape->num_pairs(); ++pair) {
        const int state = shape->pair_state(pair);
        if (static_cast<std::size_t>(state) >= action_per_state.size())
            throw StructuralError("deterministic policy missing an action");
        pi[pair] = shape->pair_action(pair) == action_per_state[static_cast<std::size_t>(state)] ? 1.0 : 0.0;
    }
    return pi;
}

} // namespace ucoreps
