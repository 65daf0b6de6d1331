#include "ucoreps/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ucoreps/errors.hpp"

namespace ucoreps {

EpochCounters::EpochCounters(ShapePtr shape)
    : shape_(std::move(shape)), n_(shape_->num_pairs(), 0), N_(shape_->num_pairs(), 0), m_(shape_->num_triples(), 0),
      M_(shape_->num_triples(), 0) {}

void EpochCounters::record_episode(const Trajectory& u) {
    const int L = shape_->horizon();
    if (u.states.size() != static_cast<std::size_t>(L) + 1 || u.actions.size() != static_cast<std::size_t>(L))
        throw StructuralError("trajectory length does not match the horizon");
    for (int k = 0; k < L; ++k) {
        const std::size_t j = u.triple(*shape_, k);
        ++m_[j];
        ++n_[shape_->triple_pair(j)];
    }
}

bool EpochCounters::should_advance(EpochRule rule) const {
    for (std::size_t p = 0; p < n_.size(); ++p) {
        if (rule == EpochRule::literal) {
            if (n_[p] > 0 && n_[p] >= N_[p])
                return true;
        } else if (n_[p] >= std::max<std::int64_t>(1, N_[p])) {
            return true;
        }
    }
    return false;
}

void EpochCounters::advance(std::int64_t next_start) {
    for (std::size_t p = 0; p < n_.size(); ++p) {
        N_[p] += n_[p];
        n_[p] = 0;
    }
    for (std::size_t j = 0; j < m_.size(); ++j) {
        M_[j] += m_[j];
        m_[j] = 0;
    }
    ++epoch_;
    epoch_start_ = next_start;
}

double confidence_radius(int next_layer_size, std::int64_t visits, std::int64_t T, int num_states, int num_actions,
                         double delta) {
    if (!(delta > 0.0 && delta < 1.0))
        throw DomainError("confidence parameter delta must lie in (0, 1)");
    if (T < 1)
        throw DomainError("horizon T must be positive");
    const double log_term = std::log(static_cast<double>(T) * num_states * num_actions / delta);
    const double denom = static_cast<double>(std::max<std::int64_t>(1, visits));
    return std::sqrt(2.0 * next_layer_size * log_term / denom);
}

ConfidenceSet make_confidence_set(const EpochCounters& counters, std::int64_t T, double delta) {
    const Shape& s = counters.shape();
    ConfidenceSet set{TransitionFunction(counters.shape_ptr()), std::vector<double>(s.num_pairs()), counters.epoch(),
                      counters.epoch_start()};
    for (std::size_t p = 0; p < s.num_pairs(); ++p) {
        const std::int64_t visits = counters.N(p);
        auto row = set.estimate.row(p);
        const std::size_t begin = s.row_begin(p);
        if (visits == 0) {
            std::fill(row.begin(), row.end(), 1.0 / static_cast<double>(row.size()));
        } else {
            for (std::size_t i = 0; i < row.size(); ++i)
                row[i] = static_cast<double>(counters.M(begin + i)) / static_cast<double>(visits);
        }
        set.radius[p] =
            confidence_radius(static_cast<int>(row.size()), visits, T, s.num_states(), s.num_actions(), delta);
    }
    return set;
}

ConfidenceSet advance_epoch(EpochCounters& counters, std::int64_t next_start, std::int64_t T, double delta) {
    counters.advance(next_start);
    return make_confidence_set(counters, T, delta);
}

ConfidenceSet exact_confidence_set(const TransitionFunction& p) {
    validate_transition(p);
    return ConfidenceSet{p, std::vector<double>(p.shape().num_pairs(), 0.0), 1, 1};
}

ContainmentReport contains(const ConfidenceSet& set, const OccupancyMeasure& q, double tol, double occupancy_tol) {
    require_same_shape(set.estimate.shape(), q.shape(), "contains");
    const Shape& s = q.shape();
    ContainmentReport report;
    report.occupancy = validate_occupancy(q, occupancy_tol);
    report.worst_excess = -std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < s.num_pairs(); ++p) {
        const auto row = q.row(p);
        double mass = 0.0;
        for (double v : row)
            mass += v;
        if (!(mass > 0.0))
            continue;
        const auto est = set.estimate.row(p);
        double dist = 0.0;
        for (std::size_t i = 0; i < row.size(); ++i)
            dist += std::abs(row[i] / mass - est[i]);
        const double excess = dist - set.radius[p];
        if (excess > report.worst_excess) {
            report.worst_excess = excess;
            report.worst_pair = p;
        }
    }
    report.contained = report.occupancy.valid && report.worst_excess <= tol;
    return report;
}

bool contains_true_transition(const ConfidenceSet& set, const TransitionFunction& p) {
    require_same_shape(set.estimate.shape(), p.shape(), "contains_true_transition");
    for (std::size_t pair = 0; pair < p.shape().num_pairs(); ++pair)
        if (l1_row_distance(p, set.estimate, pair) > set.radius[pair])
            return false;
    return true;
}

} // namespace ucoreps
