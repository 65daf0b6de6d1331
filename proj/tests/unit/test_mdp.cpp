#include <cmath>
#include <map>

#include "doctest.h"
#include "instances.hpp"
#include "ucoreps/errors.hpp"
#include "ucoreps/mdp.hpp"
#include "ucoreps/mdp_io.hpp"

using namespace ucoreps;
using namespace ucoreps::testing;

TEST_SUITE("mdp") {

TEST_CASE("shape indexing is consistent") {
    auto s = make_shape({1, 2, 3, 1}, 2);
    CHECK(s->horizon() == 3);
    CHECK(s->num_states() == 7);
    CHECK(s->num_pairs() == 12);
    CHECK(s->num_triples() == 1 * 2 * 2 + 2 * 2 * 3 + 3 * 2 * 1);
    for (std::size_t j = 0; j < s->num_triples(); ++j) {
        const auto p = s->triple_pair(j);
        CHECK(j >= s->row_begin(p));
        CHECK(j < s->row_begin(p) + s->row_length(p));
        CHECK(s->state_layer(s->triple_target(j)) == s->pair_layer(p) + 1);
    }
    CHECK_THROWS_AS(make_shape({2, 1}, 2), StructuralError);
    CHECK_THROWS_AS(make_shape({1, 2}, 2), StructuralError);
    CHECK_THROWS_AS(make_shape({1, 1}, 0), StructuralError);
}

TEST_CASE("uniform q on a symmetric shape is valid") {
    auto s = make_shape({1, 2, 2, 1}, 2);
    OccupancyMeasure q(s);
    for (int k = 0; k < s->horizon(); ++k) {
        const std::size_t b = s->triple_offset(k), e = s->triple_offset(k + 1);
        for (std::size_t j = b; j < e; ++j)
            q[j] = 1.0 / static_cast<double>(e - b);
    }
    const auto r = validate_occupancy(q, 1e-12);
    CHECK(r.valid);
}

TEST_CASE("a perturbed entry reports the normalization violation") {
    auto s = make_shape({1, 2, 2, 1}, 2);
    auto q = occupancy_from(uniform_transition(s), uniform_policy(s));
    q[s->triple_offset(1)] += 0.1;
    const auto r = validate_occupancy(q, 1e-8);
    CHECK_FALSE(r.valid);
    CHECK(r.normalization_violation == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(r.worst_layer == 1);
}

TEST_CASE("occupancy_from passes validation on random instances") {
    Rng rng(11);
    for (int i = 0; i < 50; ++i) {
        auto s = random_shape(rng, 4, 4, 3);
        auto q = random_occupancy(rng, s);
        CHECK(validate_occupancy(q, 1e-10).valid);
    }
}

TEST_CASE("occupancy_from on the two-step example") {
    auto s = two_step_shape();
    auto q = occupancy_from(two_step_deterministic(s), uniform_policy(s));
    CHECK(q.at(0, 0, 0, 0) == doctest::Approx(0.5));
    CHECK(q.at(0, 0, 1, 1) == doctest::Approx(0.5));
    CHECK(q.at(0, 0, 0, 1) == 0.0);
    CHECK(q.at(0, 0, 1, 0) == 0.0);
}

TEST_CASE("deterministic policy and dynamics give a trajectory indicator") {
    auto s = two_step_shape();
    auto p = two_step_deterministic(s);
    auto pi = deterministic_policy(s, {1, 0, 1, 0});
    auto q = occupancy_from(p, pi);
    CHECK(q.at(0, 0, 1, 1) == 1.0);
    CHECK(q.at(1, 1, 1, 0) == 1.0);
    double total = 0.0;
    for (double v : q.values())
        total += v;
    CHECK(total == 2.0);
    Rng rng(5);
    for (int i = 0; i < 10; ++i) {
        const auto u = sample_trajectory(p, pi, rng);
        CHECK(u.states == std::vector<int>{0, 1, 0});
        CHECK(u.actions == std::vector<int>{1, 1});
    }
}

TEST_CASE("induced transition and policy: trivial cases") {
    auto s = two_step_shape();
    auto q = occupancy_from(two_step_deterministic(s), uniform_policy(s));
    auto p = induced_transition(q);
    CHECK(p.at(0, 0, 0, 0) == 1.0);
    CHECK(p.at(0, 0, 1, 1) == 1.0);
    auto pi = induced_policy(q);
    CHECK(pi(0, 0, 0) == doctest::Approx(0.5));
    CHECK(pi(0, 0, 1) == doctest::Approx(0.5));

    auto uq = occupancy_from(uniform_transition(s), uniform_policy(s));
    auto up = induced_transition(uq);
    CHECK(up.at(0, 0, 0, 0) == doctest::Approx(0.5));
    CHECK(up.at(0, 0, 0, 1) == doctest::Approx(0.5));

    auto pointed = occupancy_from(two_step_deterministic(s), deterministic_policy(s, {0, 0, 0, 0}));
    CHECK(induced_policy(pointed, true)(0, 0, 0) == 1.0);
}

TEST_CASE("induced quantities match a ratio oracle") {
    Rng rng(12);
    for (int i = 0; i < 20; ++i) {
        auto s = random_shape(rng, 4, 3, 3);
        auto q = random_occupancy(rng, s);
        auto p = induced_transition(q);
        auto pi = induced_policy(q);
        for (int k = 0; k < s->horizon(); ++k)
            for (int x = 0; x < s->layer_size(k); ++x) {
                double state_mass = 0.0;
                for (int a = 0; a < s->num_actions(); ++a)
                    for (int y = 0; y < s->layer_size(k + 1); ++y)
                        state_mass += q.at(k, x, a, y);
                for (int a = 0; a < s->num_actions(); ++a) {
                    double pair_mass = 0.0;
                    for (int y = 0; y < s->layer_size(k + 1); ++y)
                        pair_mass += q.at(k, x, a, y);
                    CHECK(pi(k, x, a) == doctest::Approx(pair_mass / state_mass).epsilon(1e-12));
                    for (int y = 0; y < s->layer_size(k + 1); ++y)
                        CHECK(p.at(k, x, a, y) == doctest::Approx(q.at(k, x, a, y) / pair_mass).epsilon(1e-12));
                }
            }
    }
}

TEST_CASE("zero marginals raise unless the fallback is on") {
    auto s = two_step_shape();
    auto q = occupancy_from(two_step_deterministic(s), deterministic_policy(s, {0, 0, 0, 0}));
    CHECK_THROWS_AS(induced_transition(q), DegenerateMarginalError);
    CHECK_THROWS_AS(induced_policy(q), DegenerateMarginalError);
    auto p = induced_transition(q, true);
    CHECK(p.at(0, 0, 1, 0) == doctest::Approx(0.5));
    auto pi = induced_policy(q, true);
    CHECK(pi(1, 1, 0) == doctest::Approx(0.5));
}

TEST_CASE("round trip through induced transition and policy") {
    Rng rng(13);
    for (int i = 0; i < 30; ++i) {
        auto s = random_shape(rng, 5, 3, 2);
        auto q = random_occupancy(rng, s);
        auto back = occupancy_from(induced_transition(q), induced_policy(q));
        CHECK(l1_distance(q, back) <= 1e-8);
    }
}

TEST_CASE("occupancy_from matches Monte-Carlo visit frequencies") {
    Rng rng(14);
    auto s = random_shape(rng, 4, 3, 2);
    auto p = random_transition(rng, s);
    auto pi = random_policy(rng, s);
    auto q = occupancy_from(p, pi);
    const int draws = 100000;
    std::vector<double> freq(s->num_triples(), 0.0);
    Rng sampler(15);
    for (int i = 0; i < draws; ++i) {
        const auto u = sample_trajectory(p, pi, sampler);
        for (int k = 0; k < s->horizon(); ++k)
            freq[u.triple(*s, k)] += 1.0;
    }
    for (std::size_t j = 0; j < q.size(); ++j) {
        const double f = freq[j] / draws;
        const double sigma = std::sqrt(q[j] * (1.0 - q[j]) / draws);
        CHECK(std::abs(f - q[j]) <= 3.0 * sigma + 1e-12);
    }
}

TEST_CASE("uniform policy on the two-step example visits s1 half the time") {
    auto s = two_step_shape();
    auto p = two_step_deterministic(s);
    auto pi = uniform_policy(s);
    Rng rng(16);
    const int draws = 100000;
    int hits = 0;
    for (int i = 0; i < draws; ++i)
        hits += sample_trajectory(p, pi, rng).states[1] == 0 ? 1 : 0;
    const double sigma = std::sqrt(0.25 / draws);
    CHECK(std::abs(static_cast<double>(hits) / draws - 0.5) <= 3.0 * sigma);
}

TEST_CASE("state visit frequencies converge to state marginals") {
    Rng rng(17);
    auto s = random_shape(rng, 4, 3, 3);
    auto p = random_transition(rng, s);
    auto pi = random_policy(rng, s);
    auto m = state_action_marginals(occupancy_from(p, pi));
    std::vector<double> visits(static_cast<std::size_t>(s->num_states()), 0.0);
    const int draws = 50000;
    Rng sampler(18);
    for (int i = 0; i < draws; ++i) {
        const auto u = sample_trajectory(p, pi, sampler);
        for (int k = 0; k <= s->horizon(); ++k)
            visits[static_cast<std::size_t>(s->state_id(k, u.states[static_cast<std::size_t>(k)]))] += 1.0;
    }
    for (std::size_t x = 0; x < visits.size(); ++x) {
        const double target = m.state[x];
        const double sigma = std::sqrt(target * (1.0 - target) / draws);
        CHECK(std::abs(visits[x] / draws - target) <= 3.0 * sigma + 1e-12);
    }
}

TEST_CASE("sampling is deterministic given the seed") {
    Rng rng(19);
    auto s = random_shape(rng, 4, 3, 2);
    auto p = random_transition(rng, s);
    auto pi = random_policy(rng, s);
    Rng a(99), b(99);
    for (int i = 0; i < 100; ++i)
        CHECK(sample_trajectory(p, pi, a) == sample_trajectory(p, pi, b));
}

TEST_CASE("state-action marginals") {
    auto s = make_shape({1, 2, 1}, 2);
    auto q = occupancy_from(uniform_transition(s), uniform_policy(s));
    auto m = state_action_marginals(q);
    for (std::size_t p = s->pair_offset(1); p < s->num_pairs(); ++p)
        CHECK(m.pair[p] == doctest::Approx(0.25));

    auto point = occupancy_from(two_step_deterministic(s), deterministic_policy(s, {1, 0, 0, 0}));
    auto pm = state_action_marginals(point);
    CHECK(pm.pair[s->pair_id(0, 0, 1)] == 1.0);
    CHECK(pm.pair[s->pair_id(0, 0, 0)] == 0.0);
    CHECK(pm.state[static_cast<std::size_t>(s->state_id(1, 1))] == 1.0);

    Rng rng(20);
    auto rs = random_shape(rng, 4, 3, 3);
    auto rq = random_occupancy(rng, rs);
    auto rm = state_action_marginals(rq);
    for (int k = 0; k < rs->horizon(); ++k)
        for (int x = 0; x < rs->layer_size(k); ++x) {
            double state_sum = 0.0;
            for (int a = 0; a < rs->num_actions(); ++a) {
                double pair_sum = 0.0;
                for (int y = 0; y < rs->layer_size(k + 1); ++y)
                    pair_sum += rq.at(k, x, a, y);
                CHECK(rm.pair[rs->pair_id(k, x, a)] == doctest::Approx(pair_sum).epsilon(1e-13));
                state_sum += pair_sum;
            }
            CHECK(rm.state[static_cast<std::size_t>(rs->state_id(k, x))] == doctest::Approx(state_sum).epsilon(1e-13));
        }
}

TEST_CASE("L1 distances") {
    Rng rng(21);
    auto s = random_shape(rng, 4, 3, 2);
    auto a = random_occupancy(rng, s);
    CHECK(l1_distance(a, a) == 0.0);

    auto two = make_shape({1, 2, 1}, 1);
    TransitionFunction p1(two), p2(two);
    p1.at(0, 0, 0, 0) = 1.0;
    p2.at(0, 0, 0, 1) = 1.0;
    CHECK(l1_row_distance(p1, p2, 0) == 2.0);

    for (int i = 0; i < 50; ++i) {
        auto x = random_occupancy(rng, s), y = random_occupancy(rng, s), z = random_occupancy(rng, s);
        double naive = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j)
            naive += std::abs(x[j] - y[j]);
        CHECK(l1_distance(x, y) == doctest::Approx(naive).epsilon(1e-14));
        CHECK(l1_distance(x, y) == doctest::Approx(l1_distance(y, x)).epsilon(1e-15));
        CHECK(l1_distance(x, z) <= l1_distance(x, y) + l1_distance(y, z) + 1e-15);
    }
}

TEST_CASE("shape mismatches are structural errors") {
    auto a = make_shape({1, 2, 1}, 2);
    auto b = make_shape({1, 3, 1}, 2);
    CHECK_THROWS_AS(l1_distance(OccupancyMeasure(a), OccupancyMeasure(b)), StructuralError);
    CHECK_THROWS_AS(occupancy_from(uniform_transition(a), uniform_policy(b)), StructuralError);
}

TEST_CASE("MDP description files round trip and validate") {
    Rng rng(22);
    auto s = random_shape(rng, 3, 3, 2);
    LayeredMdp mdp(s, random_transition(rng, s));
    const auto text = format_mdp(mdp);
    const auto back = parse_mdp(text);
    CHECK(back.shape() == mdp.shape());
    for (std::size_t j = 0; j < s->num_triples(); ++j)
        CHECK(back.transition()[j] == mdp.transition()[j]);

    const char* good = "ucoreps-mdp 1\n"
                       "layers 1 2 1\n"
                       "actions 2\n"
                       "state 1 0 left\n"
                       "row 0 0 0 0.333 0.667\n"
                       "row 0 0 1 1 0\n"
                       "row 1 0 0 1\nrow 1 0 1 1\nrow 1 1 0 1\nrow 1 1 1 1\n";
    const auto parsed = parse_mdp(good);
    CHECK(parsed.transition().at(0, 0, 0, 1) == doctest::Approx(0.667));
    CHECK(parsed.state_labels[1][0] == "left");

    const char* bad_sum = "ucoreps-mdp 1\nlayers 1 2 1\nactions 1\nrow 0 0 0 0.5 0.4\nrow 1 0 0 1\nrow 1 1 0 1\n";
    CHECK_THROWS_AS(parse_mdp(bad_sum), ParseError);
    const char* missing = "ucoreps-mdp 1\nlayers 1 2 1\nactions 1\nrow 0 0 0 0.5 0.5\nrow 1 0 0 1\n";
    CHECK_THROWS_AS(parse_mdp(missing), ParseError);
    const char* bad_layers = "ucoreps-mdp 1\nlayers 2 1\nactions 1\n";
    CHECK_THROWS_AS(parse_mdp(bad_layers), ParseError);
}

}
