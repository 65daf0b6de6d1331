#include "ucoreps/comparator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ucoreps/errors.hpp"

namespace ucoreps {

BestResponse best_response(const TransitionFunction& p, std::span<const double> cost) {
    const Shape& shape = p.shape();
    if (cost.size() != shape.num_triples())
        throw StructuralError("best_response: cost has the wrong size");
    std::vector<double> value(static_cast<std::size_t>(shape.num_states()), 0.0);
    std::vector<int> action(static_cast<std::size_t>(shape.num_states()), 0);
    const int A = shape.num_actions();
    for (int k = shape.horizon() - 1; k >= 0; --k) {
        for (int x = 0; x < shape.layer_size(k); ++x) {
            double best = std::numeric_limits<double>::infinity();
            int arg = 0;
            for (int a = 0; a < A; ++a) {
                const std::size_t pair = shape.pair_id(k, x, a);
                const std::size_t begin = shape.row_begin(pair);
                double qa = 0.0;
                for (std::size_t j = begin; j < begin + shape.row_length(pair); ++j)
                    qa += p[j] * (cost[j] + value[static_cast<std::size_t>(shape.triple_target(j))]);
                if (qa < best) {
                    best = qa;
                    arg = a;
                }
            }
            const auto s = static_cast<std::size_t>(shape.state_id(k, x));
            value[s] = best;
            action[s] = arg;
        }
    }
    Policy pi = deterministic_policy(p.shape_ptr(), action);
    OccupancyMeasure q = occupancy_from(p, pi);
    const double v = inner_product(q.values(), cost);
    return BestResponse{std::move(pi), std::move(q), v};
}

namespace {

// Golden-section minimization of a convex function on [0, max_step]; the right end is also tried.
template <class F>
double golden_line_search(double max_step, F&& along) {
    constexpr double ratio = 0.6180339887498949;
    double lo = 0.0, hi = max_step;
    double a = hi - ratio * (hi - lo), b = lo + ratio * (hi - lo);
    double fa = along(a), fb = along(b);
    for (int s = 0; s < 80 && hi - lo > 1e-15 * max_step; ++s) {
        if (fa <= fb) {
            hi = b;
            b = a;
            fb = fa;
            a = hi - ratio * (hi - lo);
            fa = along(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + ratio * (hi - lo);
            fb = along(b);
        }
    }
    const double gamma = 0.5 * (lo + hi);
    return along(max_step) <= along(gamma) ? max_step : gamma;
}

// Frank-Wolfe over Delta(M) on sum_t g(<q, h_{t,1}>, ..., <q, h_{t,m}>).
// `fields` holds T*m rows of length n, episode-major.
//
// MinMax is nonsmooth, and plain Frank-Wolfe stalls at its kinks. For it the
// steps follow the smoothed objective sum_t mu log sum_j exp(u_tj / mu), with mu
// halved whenever the smoothing error dominates the Frank-Wolfe gap. Any
// weights w_t on the simplex give the lower bound min_q sum_t <q, w_t . h_t>,
// which is one backward induction; the softmax weights are used here.
Comparator frank_wolfe(const Criterion& criterion, const TransitionFunction& p, std::span<const double> fields,
                       std::size_t m, const ComparatorOptions& options) {
    const std::size_t n = p.shape().num_triples();
    const std::size_t rows = fields.size() / n;
    const std::size_t episodes = rows / m;
    const bool smoothed = std::holds_alternative<criteria::MinMax>(criterion.variant()) && m > 1;
    double mu = 0.1;
    const double log_m = std::log(static_cast<double>(m));

    const auto inner = [&](const OccupancyMeasure& q) {
        std::vector<double> u(rows);
        for (std::size_t r = 0; r < rows; ++r)
            u[r] = inner_product(q.values(), fields.subspan(r * n, n));
        return u;
    };
    const auto total = [&](std::span<const double> u) {
        double s = 0.0;
        for (std::size_t t = 0; t < episodes; ++t)
            s += criterion.aggregate(u.subspan(t * m, m));
        return s;
    };
    // Objective the steps follow: the criterion itself, or its smoothing.
    const auto surrogate = [&](std::span<const double> u) {
        if (!smoothed)
            return total(u);
        double s = 0.0;
        for (std::size_t t = 0; t < episodes; ++t) {
            const auto ut = u.subspan(t * m, m);
            const double top = *std::max_element(ut.begin(), ut.end());
            double z = 0.0;
            for (double v : ut)
                z += std::exp((v - top) / mu);
            s += top + mu * std::log(z);
        }
        return s;
    };
    const auto weights = [&](std::span<const double> ut) {
        if (!smoothed)
            return criterion.aggregate_subgradient(ut);
        const double top = *std::max_element(ut.begin(), ut.end());
        std::vector<double> w(m);
        double z = 0.0;
        for (std::size_t j = 0; j < m; ++j)
            z += (w[j] = std::exp((ut[j] - top) / mu));
        for (double& v : w)
            v /= z;
        return w;
    };

    // Minimizer over [0, max_step] of the smoothed objective along u + gamma (su - au):
    // safeguarded Newton on the derivative, which is available in closed form.
    const auto smoothed_line_search = [&](std::span<const double> u, std::span<const double> su,
                                          std::span<const double> au, double max_step) {
        const auto slope = [&](double gamma, double* curvature) {
            double d1 = 0.0, d2 = 0.0;
            for (std::size_t t = 0; t < episodes; ++t) {
                double top = -std::numeric_limits<double>::infinity();
                for (std::size_t j = 0; j < m; ++j) {
                    const std::size_t r = t * m + j;
                    top = std::max(top, u[r] + gamma * (su[r] - au[r]));
                }
                double z = 0.0, e1 = 0.0, e2 = 0.0;
                for (std::size_t j = 0; j < m; ++j) {
                    const std::size_t r = t * m + j;
                    const double d = su[r] - au[r];
                    const double w = std::exp((u[r] + gamma * d - top) / mu);
                    z += w;
                    e1 += w * d;
                    e2 += w * d * d;
                }
                e1 /= z;
                d1 += e1;
                d2 += (e2 / z - e1 * e1) / mu;
            }
            if (curvature)
                *curvature = d2;
            return d1;
        };
        if (slope(0.0, nullptr) >= 0.0)
            return 0.0;
        if (slope(max_step, nullptr) <= 0.0)
            return max_step;
        double lo = 0.0, hi = max_step, gamma = 0.5 * max_step;
        for (int it = 0; it < 100 && hi - lo > 1e-15 * max_step; ++it) {
            double curvature = 0.0;
            const double d1 = slope(gamma, &curvature);
            if (d1 == 0.0)
                break;
            (d1 > 0.0 ? hi : lo) = gamma;
            const double newton = curvature > 0.0 ? gamma - d1 / curvature : -1.0;
            gamma = newton > lo && newton < hi ? newton : 0.5 * (lo + hi);
        }
        return gamma;
    };

    const auto gradient = [&](std::span<const double> u, std::vector<double>& grad) {
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t t = 0; t < episodes; ++t) {
            const auto g = weights(u.subspan(t * m, m));
            for (std::size_t j = 0; j < m; ++j) {
                if (g[j] == 0.0)
                    continue;
                const double* row = fields.data() + (t * m + j) * n;
                for (std::size_t i = 0; i < n; ++i)
                    grad[i] += g[j] * row[i];
            }
        }
    };

    // Pairwise Frank-Wolfe: the iterate is kept as a convex combination of
    // deterministic-policy vertices, and each step moves weight from the worst
    // active vertex to the best response.
    struct Vertex {
        OccupancyMeasure q;
        std::vector<double> u;
        double weight;
    };
    std::vector<double> grad(n), mix(rows);
    std::vector<Vertex> active;
    {
        const OccupancyMeasure start = occupancy_from(p, uniform_policy(p.shape_ptr()));
        gradient(inner(start), grad);
        BestResponse first = best_response(p, grad);
        std::vector<double> fu = inner(first.q);
        active.push_back(Vertex{std::move(first.q), std::move(fu), 1.0});
    }
    OccupancyMeasure q = active.front().q;
    std::vector<double> u = active.front().u;
    double value = total(u);
    double lower = -std::numeric_limits<double>::infinity();
    OccupancyMeasure best_q = q;
    double best_value = value;

    Comparator out{q, value, std::numeric_limits<double>::infinity(), 0, false};
    for (int it = 1; it <= options.max_iterations; ++it) {
        gradient(u, grad);
        BestResponse toward = best_response(p, grad);
        const double fw_gap = inner_product(q.values(), grad) - toward.value;
        lower = std::max(lower, smoothed ? toward.value : value - fw_gap);
        out.iterations = it;
        out.gap = std::max(0.0, best_value - lower);
        if (out.gap <= options.gap_tolerance) {
            out.converged = true;
            break;
        }
        if (smoothed && fw_gap <= mu * static_cast<double>(episodes) * log_m) {
            mu *= 0.5;
            continue;
        }

        std::size_t to = active.size();
        for (std::size_t i = 0; i < active.size(); ++i)
            if (std::equal(active[i].q.values().begin(), active[i].q.values().end(), toward.q.values().begin())) {
                to = i;
                break;
            }
        if (to == active.size()) {
            std::vector<double> tu = inner(toward.q);
            active.push_back(Vertex{std::move(toward.q), std::move(tu), 0.0});
        }
        std::size_t from = 0;
        double worst = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < active.size(); ++i) {
            if (active[i].weight <= 0.0)
                continue;
            const double score = inner_product(active[i].q.values(), grad);
            if (score > worst) {
                worst = score;
                from = i;
            }
        }
        if (from == to)
            continue;
        const double max_step = active[from].weight;
        const auto& su = active[to].u;
        const auto& au = active[from].u;
        const auto along = [&](double g) {
            for (std::size_t r = 0; r < rows; ++r)
                mix[r] = u[r] + g * (su[r] - au[r]);
            return surrogate(mix);
        };
        const double gamma = smoothed ? smoothed_line_search(u, su, au, max_step) : golden_line_search(max_step, along);
        if (!(along(gamma) < surrogate(u)))
            continue;
        for (std::size_t i = 0; i < n; ++i)
            q[i] += gamma * (active[to].q[i] - active[from].q[i]);
        for (std::size_t r = 0; r < rows; ++r)
            u[r] += gamma * (su[r] - au[r]);
        active[to].weight += gamma;
        active[from].weight = gamma == max_step ? 0.0 : active[from].weight - gamma;
        if (active[from].weight == 0.0)
            active.erase(active.begin() + static_cast<std::ptrdiff_t>(from));
        value = total(u);
        if (value < best_value) {
            best_value = value;
            best_q = q;
        }
    }
    out.q = std::move(best_q);
    out.value = best_value;
    return out;
}

} // namespace

HindsightAccumulator::HindsightAccumulator(Criterion criterion, TransitionFunction p)
    : criterion_(std::move(criterion)), p_(std::move(p)),
      linear_(std::holds_alternative<criteria::TotalExpectedLoss>(criterion_.variant())),
      sum_(p_.shape().num_triples(), 0.0) {}

void HindsightAccumulator::add(const LossFunction& loss) {
    require_same_shape(p_.shape(), loss.shape(), "hindsight loss");
    const auto fields = criterion_.features(loss);
    if (linear_) {
        const auto l = fields.front().values();
        for (std::size_t i = 0; i < sum_.size(); ++i)
            sum_[i] += l[i];
    } else {
        if (count_ == 0)
            features_ = fields.size();
        else if (fields.size() != features_)
            throw StructuralError("hindsight losses changed dimension");
        for (const auto& h : fields)
            fields_.insert(fields_.end(), h.values().begin(), h.values().end());
    }
    ++count_;
}

Comparator HindsightAccumulator::solve(const ComparatorOptions& options) const {
    if (count_ == 0)
        throw DomainError("hindsight comparator needs at least one loss");
    if (linear_) {
        BestResponse br = best_response(p_, sum_);
        return Comparator{std::move(br.q), br.value, 0.0, 1, true};
    }
    return frank_wolfe(criterion_, p_, fields_, features_, options);
}

Comparator best_in_hindsight(const Criterion& criterion, std::span<const LossFunction> losses,
                             const TransitionFunction& p, const ComparatorOptions& options) {
    HindsightAccumulator acc(criterion, p);
    for (const auto& l : losses)
        acc.add(l);
    return acc.solve(options);
}

} // namespace ucoreps
