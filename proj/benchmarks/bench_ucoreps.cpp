#include <benchmark/benchmark.h>

#include "ucoreps/adversary.hpp"
#include "ucoreps/learner.hpp"
#include "ucoreps/projection.hpp"

using namespace ucoreps;

namespace {

// Layers 1, w, w, w, 1 with two actions.
MdpSpec spec_for(int width) {
    return MdpSpec{{1, width, width, width, 1}, 2, 1.0, 7};
}

LossSchedule schedule() {
    LossSchedule s;
    s.components = {LossComponent{ScheduleKind::iid, 1.0}};
    s.seed = 11;
    return s;
}

// A learner after `warmup` episodes, so the confidence set has nontrivial radii.
struct Warmed {
    LayeredMdp mdp;
    Learner learner;
    Rng rng{3};

    Warmed(int width, std::int64_t episodes, std::int64_t warmup)
        : mdp(generate_mdp(spec_for(width))),
          learner(mdp.shape_ptr(), Criterion::total_expected_loss(), LearnerConfig{episodes, 0.1}) {
        for (std::int64_t t = 1; t <= warmup; ++t)
            learner.step(mdp, loss_at(schedule(), mdp.shape_ptr(), t), rng);
    }
};

void bm_occupancy_from(benchmark::State& state) {
    const LayeredMdp mdp = generate_mdp(spec_for(static_cast<int>(state.range(0))));
    const Policy pi(mdp.shape_ptr(), 0.5);
    for (auto _ : state)
        benchmark::DoNotOptimize(occupancy_from(mdp.transition(), pi));
    state.counters["triples"] = static_cast<double>(mdp.shape().num_triples());
}
BENCHMARK(bm_occupancy_from)->Arg(3)->Arg(6)->Arg(10);

void bm_projection(benchmark::State& state) {
    Warmed w(static_cast<int>(state.range(0)), 1000, 50);
    const auto& q = w.learner.occupancy();
    const auto loss = loss_at(schedule(), w.mdp.shape_ptr(), 51);
    const auto z = w.learner.criterion().subgradient(q, loss);
    const DualProblem problem(q, z, w.learner.eta(), w.learner.confidence_set());
    int iterations = 0;
    for (auto _ : state) {
        const auto result = project(problem);
        iterations = result.report.iterations;
        benchmark::DoNotOptimize(result.q);
    }
    state.counters["triples"] = static_cast<double>(w.mdp.shape().num_triples());
    state.counters["solver_iterations"] = iterations;
}
BENCHMARK(bm_projection)->Arg(3)->Arg(6)->Arg(10)->Unit(benchmark::kMillisecond);

void bm_learner_step(benchmark::State& state) {
    Warmed w(static_cast<int>(state.range(0)), 1'000'000, 0);
    std::int64_t t = 1;
    for (auto _ : state)
        benchmark::DoNotOptimize(w.learner.step(w.mdp, loss_at(schedule(), w.mdp.shape_ptr(), t++), w.rng));
    state.counters["triples"] = static_cast<double>(w.mdp.shape().num_triples());
}
BENCHMARK(bm_learner_step)->Arg(3)->Arg(6)->Arg(10)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
