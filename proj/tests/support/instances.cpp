#include "instances.hpp"

namespace ucoreps::testing {

ShapePtr random_shape(Rng& rng, int horizon, int max_size, int num_actions) {
    std::vector<int> sizes(static_cast<std::size_t>(horizon) + 1, 1);
    for (int k = 1; k < horizon; ++k)
        sizes[static_cast<std::size_t>(k)] =
            1 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(max_size));
    return make_shape(sizes, num_actions);
}

namespace {

void fill_dirichlet(Rng& rng, std::span<double> row, double concentration) {
    double sum = 0.0;
    for (double& v : row) {
        v = std::max(rng.gamma(concentration), 1e-12);
        sum += v;
    }
    for (double& v : row)
        v /= sum;
}

} // namespace

TransitionFunction random_transition(Rng& rng, const ShapePtr& shape, double concentration) {
    TransitionFunction p(shape);
    for (std::size_t pair = 0; pair < shape->num_pairs(); ++pair)
        fill_dirichlet(rng, p.row(pair), concentration);
    return p;
}

Policy random_policy(Rng& rng, const ShapePtr& shape, double concentration) {
    Policy pi(shape);
    const int A = shape->num_actions();
    std::vector<double> row(static_cast<std::size_t>(A));
    for (int k = 0; k < shape->horizon(); ++k)
        for (int x = 0; x < shape->layer_size(k); ++x) {
            fill_dirichlet(rng, row, concentration);
            for (int a = 0; a < A; ++a)
                pi(k, x, a) = row[static_cast<std::size_t>(a)];
        }
    return pi;
}

OccupancyMeasure random_occupancy(Rng& rng, const ShapePtr& shape) {
    const auto p = random_transition(rng, shape);
    return occupancy_from(p, random_policy(rng, shape));
}

TripleField random_field(Rng& rng, const ShapePtr& shape, double lo, double hi) {
    TripleField f(shape);
    for (double& v : f.values())
        v = lo + (hi - lo) * rng.uniform();
    return f;
}

LossFunction random_loss(Rng& rng, const ShapePtr& shape, int dim) {
    std::vector<double> v(shape->num_triples() * static_cast<std::size_t>(dim));
    for (double& x : v)
        x = rng.uniform();
    return LossFunction(shape, dim, std::move(v));
}

ConfidenceSet random_confidence_set(Rng& rng, const ShapePtr& shape, double eps_lo, double eps_hi) {
    ConfidenceSet set{random_transition(rng, shape), std::vector<double>(shape->num_pairs()), 1, 1};
    for (double& r : set.radius)
        r = eps_lo + (eps_hi - eps_lo) * rng.uniform();
    return set;
}

ProjectionInstance random_projection_instance(std::uint64_t seed) {
    Rng rng = Rng::derived(seed, 0x50524f4a);
    auto shape = random_shape(rng, 3, 3, 2);
    auto q = random_occupancy(rng, shape);
    const double eta = 0.5 + rng.uniform();
    auto z = random_field(rng, shape, 0.0, 3.0 / eta);
    auto set = random_confidence_set(rng, shape, 0.05, 1.5);
    return ProjectionInstance{shape, std::move(q), std::move(z), eta, std::move(set)};
}

ShapePtr two_step_shape() {
    return make_shape({1, 2, 1}, 2);
}

TransitionFunction two_step_deterministic(const ShapePtr& shape) {
    TransitionFunction p(shape);
    p.at(0, 0, 0, 0) = 1.0;
    p.at(0, 0, 1, 1) = 1.0;
    for (int x = 0; x < 2; ++x)
        for (int a = 0; a < 2; ++a)
            p.at(1, x, a, 0) = 1.0;
    return p;
}

} // namespace ucoreps::testing
