// Acceptance suite: one PASS/FAIL line per criterion, with the measured
// values next to the pinned tolerances. Exit status is nonzero if any
// selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "brute_force.hpp"
#include "instances.hpp"
#include "ucoreps/comparator.hpp"
#include "ucoreps/harness.hpp"
#include "ucoreps/projection.hpp"

using namespace ucoreps;
using namespace ucoreps::testing;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

constexpr int projection_instances = 50;

ExperimentConfig reference_config() {
    ExperimentConfig c = load_config(UCOREPS_REFERENCE_CONFIG);
    c.write_traces = false;
    return c;
}

const ExperimentResult& reference_result() {
    static const ExperimentResult result = run_experiment(reference_config());
    return result;
}

DualVariables random_duals(Rng& rng, const Shape& s) {
    DualVariables d(s);
    for (auto& v : d.beta())
        v = 2.0 * rng.uniform() - 1.0;
    for (auto& v : d.mu_plus())
        v = rng.uniform();
    for (auto& v : d.mu_minus())
        v = rng.uniform();
    return d;
}

Outcome projection_oracle() {
    const auto start = std::chrono::steady_clock::now();
    double worst_l1 = 0.0, worst_kl = 0.0;
    for (int i = 1; i <= projection_instances; ++i) {
        const auto inst = random_projection_instance(static_cast<std::uint64_t>(i));
        const DualProblem problem(inst.q_t, inst.z, inst.eta, inst.set);
        const auto target = problem.unconstrained();
        const auto proj = project(problem);
        const auto oracle = brute_force_project(target, inst.set);
        worst_l1 = std::max(worst_l1, l1_distance(proj.q, oracle.q));
        worst_kl = std::max(worst_kl, std::abs(unnormalized_kl(proj.q, target) - oracle.objective));
    }
    const double secs = seconds_since(start);
    return {worst_l1 <= 1e-4 && worst_kl <= 1e-6 && secs <= 120.0,
            fmt("%d instances: worst L1 %.2e (tol 1e-4), worst |dKL| %.2e (tol 1e-6), %.1f s (budget 120 s)",
                projection_instances, worst_l1, worst_kl, secs)};
}

Outcome dual_gradient() {
    Rng rng(0x4752414431);
    double worst = 0.0;
    long checks = 0;
    for (int i = 1; i <= projection_instances; ++i) {
        const auto inst = random_projection_instance(static_cast<std::uint64_t>(i));
        const DualProblem problem(inst.q_t, inst.z, inst.eta, inst.set);
        for (int point = 0; point < 20; ++point) {
            const auto d = random_duals(rng, *inst.shape);
            const auto g = problem.gradient(d);
            for (std::size_t c = 0; c < d.flat().size(); ++c) {
                auto plus = d, minus = d;
                plus.flat()[c] += 1e-6;
                minus.flat()[c] -= 1e-6;
                const double fd = (problem.objective(plus) - problem.objective(minus)) / 2e-6;
                const double an = g.flat()[c];
                worst = std::max(worst, std::abs(fd - an) / std::max(1.0, std::abs(an)));
                ++checks;
            }
        }
    }
    return {worst <= 1e-5,
            fmt("%ld partials at %d points: worst |fd - grad| / max(1, |grad|) %.2e (tol 1e-5, step 1e-6)", checks,
                20 * projection_instances, worst)};
}

Outcome kkt_certificates() {
    double flow = 0.0, confidence = 0.0, slackness = 0.0;
    for (int i = 1; i <= projection_instances; ++i) {
        const auto inst = random_projection_instance(static_cast<std::uint64_t>(i));
        const DualProblem problem(inst.q_t, inst.z, inst.eta, inst.set);
        const auto proj = project(problem);
        const auto kkt = kkt_certificate(problem, proj.duals);
        flow = std::max(flow, kkt.flow);
        confidence = std::max(confidence, kkt.confidence_excess);
        slackness = std::max(slackness, kkt.slackness);
    }
    long accepted = 0;
    for (const auto& run : reference_result().runs)
        for (const auto& row : run.trace) {
            if (row.flagged)
                continue;
            ++accepted;
            flow = std::max(flow, row.kkt_flow);
            confidence = std::max(confidence, row.kkt_confidence);
            slackness = std::max(slackness, row.kkt_slackness);
        }
    return {flow <= 1e-6 && confidence <= 1e-6 && slackness <= 1e-5,
            fmt("%d oracle instances + %ld reference updates: flow %.2e (tol 1e-6), confidence excess %.2e (tol "
                "1e-6), slackness %.2e (tol 1e-5)",
                projection_instances, accepted, flow, confidence, slackness)};
}

Outcome feasibility_chain() {
    const auto& result = reference_result();
    double containment = -1.0, occupancy = 0.0;
    long episodes = 0, flagged = 0;
    for (const auto& run : result.runs) {
        for (const auto& row : run.trace) {
            containment = std::max(containment, row.containment_excess);
            occupancy = std::max(occupancy, row.occupancy_violation);
            flagged += row.flagged ? 1 : 0;
            ++episodes;
        }
    }
    const double fraction = static_cast<double>(flagged) / static_cast<double>(episodes);
    return {containment <= 1e-6 && occupancy <= 1e-8 && fraction <= 1e-3,
            fmt("%zu seeds x %lld episodes: worst containment excess %.2e (tol 1e-6), worst occupancy violation "
                "%.2e (tol 1e-8), flagged %ld (%.3f%%, limit 0.1%%)",
                result.runs.size(), static_cast<long long>(result.config.episodes), containment, occupancy, flagged,
                100.0 * fraction)};
}

Outcome regret_bound_check() {
    const auto& result = reference_result();
    bool ok = result.wall_seconds <= 900.0;
    double worst_ratio = 0.0;
    for (const auto& run : result.runs)
        for (const auto& cp : run.checkpoints) {
            ok = ok && cp.regret <= cp.bound;
            worst_ratio = std::max(worst_ratio, cp.regret / cp.bound);
        }
    const auto& last = result.runs.front().checkpoints.back();
    return {ok, fmt("%zu seeds: max regret / bound over checkpoints %.2e; bound at T=%lld is %.1f; reference run "
                    "%.1f s (budget 900 s)",
                    result.runs.size(), worst_ratio, static_cast<long long>(last.t), last.bound, result.wall_seconds)};
}

Outcome omd_inequality() {
    ExperimentConfig c = reference_config();
    c.mode = TransitionMode::known;
    c.checkpoints = {c.episodes};
    const auto result = run_experiment(c, RunOptions{true, false});
    bool ok = true;
    double worst_margin = -std::numeric_limits<double>::infinity(), bound = 0.0;
    for (const auto& run : result.runs) {
        ok = ok && run.online_linearized <= run.online_bound;
        worst_margin = std::max(worst_margin, run.online_linearized - run.online_bound);
        bound = run.online_bound;
    }
    return {ok, fmt("%zu seeds, known transitions, T=%lld: max (lhs - rhs) %.2f with rhs %.2f", result.runs.size(),
                    static_cast<long long>(c.episodes), worst_margin, bound)};
}

Outcome coverage() {
    ExperimentConfig c = reference_config();
    c.episodes = 500;
    c.checkpoints.clear();
    c.delta = 0.1;
    const auto start = std::chrono::steady_clock::now();
    const auto r = coverage_study(c, 200);
    const double secs = seconds_since(start);
    return {r.fraction >= r.floor && secs <= 1200.0,
            fmt("%d of %d seeds covered at every epoch: %.3f (floor %.3f), T=500, delta=0.1, %.1f s (budget 1200 s)",
                r.covered, r.runs, r.fraction, r.floor, secs)};
}

Outcome sublinearity() {
    const auto& result = reference_result();
    const auto& first = result.runs.front().checkpoints;
    std::vector<std::int64_t> t;
    std::vector<double> mean(first.size(), 0.0);
    for (const auto& cp : first)
        t.push_back(cp.t);
    for (const auto& run : result.runs)
        for (std::size_t i = 0; i < mean.size(); ++i)
            mean[i] += run.checkpoints[i].regret / static_cast<double>(result.runs.size());
    const double slope = log_log_slope(t, mean);
    std::string curve;
    for (std::size_t i = 0; i < mean.size(); ++i)
        curve += fmt("%s%lld:%.1f", i ? " " : "", static_cast<long long>(t[i]), mean[i]);
    return {slope <= 0.65, fmt("slope %.3f (limit 0.65) of mean regret over %zu seeds [%s]", slope, result.runs.size(),
                               curve.c_str())};
}

Outcome fixed_loss_convergence() {
    ExperimentConfig c = reference_config();
    c.mode = TransitionMode::known;
    c.losses.components = {LossComponent{ScheduleKind::constant}};
    c.episodes = 2000;
    c.checkpoints = {c.episodes};
    const auto result = run_experiment(c, RunOptions{true, false});
    int passed = 0;
    double worst = 0.0, eta = 0.0;
    std::string errors;
    for (const auto& run : result.runs) {
        const double err = std::abs(run.final_value - run.final_comparator_average);
        passed += err <= 1e-3 ? 1 : 0;
        worst = std::max(worst, err);
        eta = run.eta;
        errors += fmt("%s%.1e", errors.empty() ? "" : " ", err);
    }
    const int total = static_cast<int>(result.runs.size());
    return {passed == total, fmt("%d of %d seeds within 1e-3 of the DP optimum at T=2000 (eta %.5f); worst %.2e; "
                                 "errors [%s]",
                                 passed, total, eta, worst, errors.c_str())};
}

Outcome criteria_suite() {
    Rng rng(0x4352495445);
    const auto shape = make_shape({1, 3, 3, 3, 1}, 2);
    const std::vector<std::pair<Criterion, int>> suite{
        {Criterion::total_expected_loss(), 1}, {Criterion::min_max(), 3}, {Criterion::risk(0.5, 2.0), 1}};
    bool ok = true;
    std::string parts;
    for (const auto& [crit, dim] : suite) {
        const double F = crit.lipschitz_bound(shape->horizon());
        double convexity = -std::numeric_limits<double>::infinity();
        double first_order = std::numeric_limits<double>::infinity();
        double sup_z = 0.0;
        for (int i = 0; i < 200; ++i) {
            const auto l = random_loss(rng, shape, dim);
            const auto q1 = random_occupancy(rng, shape), q2 = random_occupancy(rng, shape);
            const double f1 = crit.evaluate(q1, l), f2 = crit.evaluate(q2, l);
            for (double lam : {0.25, 0.5, 0.75}) {
                OccupancyMeasure mid(shape);
                for (std::size_t j = 0; j < mid.size(); ++j)
                    mid[j] = lam * q1[j] + (1.0 - lam) * q2[j];
                convexity = std::max(convexity, crit.evaluate(mid, l) - lam * f1 - (1.0 - lam) * f2);
            }
            const auto z = crit.subgradient(q1, l);
            double lin = 0.0;
            for (std::size_t j = 0; j < z.size(); ++j) {
                lin += z[j] * (q2[j] - q1[j]);
                sup_z = std::max(sup_z, std::abs(z[j]));
            }
            first_order = std::min(first_order, f2 - f1 - lin);
        }
        ok = ok && convexity <= 1e-10 && first_order >= -1e-10 && sup_z <= F;
        parts += fmt("%s%s: midpoint %.1e, first-order %.1e, |z| %.3f <= F %.3f", parts.empty() ? "" : "; ",
                     crit.name().c_str(), convexity, first_order, sup_z, F);
    }
    return {ok, parts + " (tol 1e-10)"};
}

Outcome determinism() {
    ExperimentConfig c = reference_config();
    const auto a = trace_csv(run_seed(c, 1));
    const auto b = trace_csv(run_seed(c, 1));
    const auto& from_experiment = reference_result().runs.front();
    const auto d = trace_csv(from_experiment);
    return {a == b && a == d,
            fmt("seed 1, T=%lld: %zu CSV bytes, repeat %s, threaded experiment %s", static_cast<long long>(c.episodes),
                a.size(), a == b ? "identical" : "DIFFERENT", a == d ? "identical" : "DIFFERENT")};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria"};
    std::vector<int> only;
    app.add_option("-c,--criterion", only, "Run only these criteria (1-11)")->check(CLI::Range(1, 11));
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"projection oracle equivalence", projection_oracle},
        {"dual gradient correctness", dual_gradient},
        {"KKT certificates", kkt_certificates},
        {"feasibility chain", feasibility_chain},
        {"regret bound", regret_bound_check},
        {"OMD inequality, known transitions", omd_inequality},
        {"confidence set coverage", coverage},
        {"sublinear regret", sublinearity},
        {"fixed-loss convergence", fixed_loss_convergence},
        {"criteria suite", criteria_suite},
        {"determinism", determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int number = static_cast<int>(i) + 1;
        if (!only.empty() && std::find(only.begin(), only.end(), number) == only.end())
            continue;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::printf("[%s] %2d %s: %s\n", o.pass ? "PASS" : "FAIL", number, criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
