#include "ucoreps/projection.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace ucoreps {
namespace {

constexpr double mass_floor = 1e-300;
constexpr double min_step = 1e-10;
constexpr double max_step = 1e10;
constexpr int max_backtracks = 60;

bool is_boundary(const Shape& s, int state) {
    return state == 0 || state == s.num_states() - 1;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double t = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        t += a[i] * b[i];
    return t;
}

double max_abs_difference(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

/**
 * Weighted projection of (sigma, w) onto {|w_j| <= sigma}:
 * minimize d_sigma (sigma - sigma0)^2 + sum_j d_j (w_j - w0_j)^2.
 * For fixed sigma the best w is w0 clipped to [-sigma, sigma], which leaves a
 * convex piecewise quadratic in sigma; its stationary point is found by trying
 * each number m of clipped entries.
 */
void project_sigma_block(double& sigma, std::span<double> w, double d_sigma, std::span<const double> d_w) {
    const std::size_t n = w.size();
    std::vector<std::size_t> order(n);
    for (std::size_t j = 0; j < n; ++j)
        order[j] = j;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return std::abs(w[a]) > std::abs(w[b]); });
    auto derivative = [&](double s) {
        double d = d_sigma * (s - sigma);
        for (std::size_t j = 0; j < n; ++j)
            if (std::abs(w[j]) > s)
                d -= d_w[j] * (std::abs(w[j]) - s);
        return d;
    };
    double num = d_sigma * sigma;
    double den = d_sigma;
    double best_sigma = num / den;
    double best_score = std::abs(derivative(best_sigma));
    for (std::size_t m = 0; m < n; ++m) {
        const std::size_t j = order[m];
        num += d_w[j] * std::abs(w[j]);
        den += d_w[j];
        const double candidate = num / den;
        const double score = std::abs(derivative(candidate));
        if (score < best_score) {
            best_score = score;
            best_sigma = candidate;
        }
    }
    sigma = std::max(best_sigma, 0.0);
    for (double& v : w)
        v = std::clamp(v, -sigma, sigma);
}

// Solver coordinates: beta (per state), sigma (per pair), w (per triple), stored flat.
class SplitLayout {
public:
    explicit SplitLayout(const Shape& s)
        : shape_(s), states_(static_cast<std::size_t>(s.num_states())), pairs_(s.num_pairs()),
          triples_(s.num_triples()) {}

    std::size_t size() const { return states_ + pairs_ + triples_; }
    template <class V>
    auto beta(V& x) const {
        return std::span(x).first(states_);
    }
    template <class V>
    auto sigma(V& x) const {
        return std::span(x).subspan(states_, pairs_);
    }
    template <class V>
    auto w(V& x) const {
        return std::span(x).subspan(states_ + pairs_, triples_);
    }

    std::vector<double> from_duals(const DualVariables& d) const {
        DualVariables c(d);
        project_duals(shape_, c);
        std::vector<double> x(size(), 0.0);
        const auto b = c.beta();
        std::copy(b.begin(), b.end(), beta(x).begin());
        const auto mp = c.mu_plus();
        const auto mm = c.mu_minus();
        auto sg = sigma(x);
        auto wv = w(x);
        for (std::size_t p = 0; p < pairs_; ++p) {
            const std::size_t begin = shape_.row_begin(p);
            const std::size_t len = shape_.row_length(p);
            double s = 0.0;
            for (std::size_t i = 0; i < len; ++i) {
                s += mp[begin + i] + mm[begin + i];
                wv[begin + i] = mm[begin + i] - mp[begin + i];
            }
            sg[p] = s / static_cast<double>(len);
        }
        return x;
    }

    DualVariables to_duals(const std::vector<double>& x) const {
        DualVariables d(shape_);
        const auto b = beta(x);
        std::copy(b.begin(), b.end(), d.beta().begin());
        const auto sg = sigma(x);
        const auto wv = w(x);
        auto mp = d.mu_plus();
        auto mm = d.mu_minus();
        for (std::size_t j = 0; j < triples_; ++j) {
            const double s = sg[shape_.triple_pair(j)];
            mp[j] = std::max(0.0, 0.5 * (s - wv[j]));
            mm[j] = std::max(0.0, 0.5 * (s + wv[j]));
        }
        d.beta()[0] = 0.0;
        d.beta()[states_ - 1] = 0.0;
        return d;
    }

private:
    const Shape& shape_;
    std::size_t states_;
    std::size_t pairs_;
    std::size_t triples_;
};

struct Weights {
    std::vector<double> state;
    std::vector<double> pair;
    std::vector<double> triple;
};

class SplitSolver {
public:
    explicit SplitSolver(const DualProblem& problem)
        : problem_(problem), shape_(problem.shape()), layout_(shape_), sum_(shape_.num_triples()) {}

    const SplitLayout& layout() const { return layout_; }

    double evaluate(const std::vector<double>& x, std::vector<double>& cand, std::vector<double>& grad) {
        const auto sg = layout_.sigma(x);
        for (std::size_t j = 0; j < sum_.size(); ++j)
            sum_[j] = sg[shape_.triple_pair(j)];
        const double f = problem_.evaluate_sum_difference(layout_.beta(x), sum_, layout_.w(x), cand);
        grad.assign(x.size(), 0.0);
        auto gb = layout_.beta(grad);
        auto gs = layout_.sigma(grad);
        auto gw = layout_.w(grad);
        const auto est = problem_.estimate();
        const auto eps = problem_.radius();
        for (std::size_t p = 0; p < shape_.num_pairs(); ++p) {
            const std::size_t begin = shape_.row_begin(p);
            const std::size_t len = shape_.row_length(p);
            double mass = 0.0;
            for (std::size_t i = 0; i < len; ++i) {
                mass += cand[begin + i];
                gb[static_cast<std::size_t>(shape_.triple_target(begin + i))] += cand[begin + i];
            }
            gb[static_cast<std::size_t>(shape_.pair_state(p))] -= mass;
            gs[p] = eps[p] * mass;
            for (std::size_t i = 0; i < len; ++i)
                gw[begin + i] = cand[begin + i] - est[begin + i] * mass;
        }
        gb[0] = 0.0;
        gb[gb.size() - 1] = 0.0;
        return f;
    }

    // Residual metric: state mass for beta, pair mass for sigma and w.
    void residual_weights(const std::vector<double>& cand, Weights& wt) const {
        masses(cand, wt);
        for (std::size_t j = 0; j < shape_.num_triples(); ++j)
            wt.triple[j] = wt.pair[shape_.triple_pair(j)];
    }

    // Step metric: as above, but each w entry uses q(x,a,x') + P-bar(x'|x,a) q(x,a),
    // the local curvature scale of the dual in that coordinate.
    void step_weights(const std::vector<double>& cand, Weights& wt) const {
        masses(cand, wt);
        const auto est = problem_.estimate();
        for (std::size_t j = 0; j < shape_.num_triples(); ++j)
            wt.triple[j] = std::max(cand[j] + est[j] * wt.pair[shape_.triple_pair(j)], mass_floor);
    }

    void project(std::vector<double>& x, const Weights& wt) const {
        auto b = layout_.beta(x);
        b[0] = 0.0;
        b[b.size() - 1] = 0.0;
        auto sg = layout_.sigma(x);
        auto wv = layout_.w(x);
        const auto eps = problem_.radius();
        for (std::size_t p = 0; p < shape_.num_pairs(); ++p) {
            const std::size_t begin = shape_.row_begin(p);
            const std::size_t len = shape_.row_length(p);
            auto row = wv.subspan(begin, len);
            if (eps[p] == 0.0) {
                // sigma carries no cost, so w is unconstrained.
                double m = 0.0;
                for (double v : row)
                    m = std::max(m, std::abs(v));
                sg[p] = m;
                continue;
            }
            project_sigma_block(sg[p], row, wt.pair[p], std::span<const double>(wt.triple).subspan(begin, len));
        }
    }

    // out = P_W(x - alpha W^{-1} g)
    void step(const std::vector<double>& x, const std::vector<double>& g, const Weights& wt, double alpha,
              std::vector<double>& out) const {
        out.resize(x.size());
        const std::size_t S = wt.state.size();
        const std::size_t P = wt.pair.size();
        for (std::size_t i = 0; i < S; ++i)
            out[i] = x[i] - alpha * g[i] / wt.state[i];
        for (std::size_t p = 0; p < P; ++p)
            out[S + p] = x[S + p] - alpha * g[S + p] / wt.pair[p];
        for (std::size_t j = 0; j < wt.triple.size(); ++j)
            out[S + P + j] = x[S + P + j] - alpha * g[S + P + j] / wt.triple[j];
        project(out, wt);
    }

    double weighted_norm2(const std::vector<double>& v, const Weights& wt) const {
        const std::size_t S = wt.state.size();
        const std::size_t P = wt.pair.size();
        double total = 0.0;
        for (std::size_t i = 0; i < S; ++i)
            total += wt.state[i] * v[i] * v[i];
        for (std::size_t p = 0; p < P; ++p)
            total += wt.pair[p] * v[S + p] * v[S + p];
        for (std::size_t j = 0; j < wt.triple.size(); ++j)
            total += wt.triple[j] * v[S + P + j] * v[S + P + j];
        return total;
    }

    double residual(const std::vector<double>& x, const std::vector<double>& g, const std::vector<double>& cand) {
        residual_weights(cand, scratch_weights_);
        step(x, g, scratch_weights_, 1.0, scratch_);
        return max_abs_difference(scratch_, x);
    }

private:
    void masses(const std::vector<double>& cand, Weights& wt) const {
        wt.state.assign(static_cast<std::size_t>(shape_.num_states()), 0.0);
        wt.pair.assign(shape_.num_pairs(), 0.0);
        wt.triple.assign(shape_.num_triples(), 0.0);
        for (std::size_t p = 0; p < shape_.num_pairs(); ++p) {
            const std::size_t begin = shape_.row_begin(p);
            double mass = 0.0;
            for (std::size_t i = 0; i < shape_.row_length(p); ++i) {
                mass += cand[begin + i];
                wt.state[static_cast<std::size_t>(shape_.triple_target(begin + i))] += 0.5 * cand[begin + i];
            }
            wt.pair[p] = std::max(mass, mass_floor);
            wt.state[static_cast<std::size_t>(shape_.pair_state(p))] += 0.5 * mass;
        }
        for (double& v : wt.state)
            v = std::max(v, mass_floor);
    }

    const DualProblem& problem_;
    const Shape& shape_;
    SplitLayout layout_;
    std::vector<double> sum_;
    Weights scratch_weights_;
    std::vector<double> scratch_;
};

} // namespace

DualVariables::DualVariables(const Shape& shape)
    : states_(static_cast<std::size_t>(shape.num_states())), triples_(shape.num_triples()),
      data_(states_ + 2 * triples_, 0.0) {}

OccupancyMeasure unconstrained_step(const OccupancyMeasure& q_t, const TripleField& z, double eta) {
    require_same_shape(q_t.shape(), z.shape(), "unconstrained_step");
    if (!(eta >= 0.0) || !std::isfinite(eta))
        throw DomainError("step size must be finite and nonnegative");
    OccupancyMeasure out(q_t.shape_ptr());
    for (std::size_t j = 0; j < q_t.size(); ++j) {
        if (!(q_t[j] > 0.0) || !std::isfinite(q_t[j]))
            throw DomainError("unconstrained step needs a strictly positive iterate");
        out[j] = std::max(q_t[j] * std::exp(-eta * z[j]), mass_floor);
    }
    return out;
}

double unnormalized_kl(const TripleTensor& q, const TripleTensor& q_ref) {
    require_same_shape(q.shape(), q_ref.shape(), "unnormalized_kl");
    double total = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) {
        const double a = q[j];
        const double b = q_ref[j];
        if (a < 0.0 || b < 0.0 || !std::isfinite(a) || !std::isfinite(b))
            throw DomainError("unnormalized KL needs nonnegative finite arguments");
        if (a == 0.0) {
            total += b;
            continue;
        }
        if (b == 0.0)
            throw DomainError("unnormalized KL is infinite: reference has a zero where q is positive");
        total += a * std::log(a / b) - a + b;
    }
    return total;
}

DualProblem::DualProblem(const OccupancyMeasure& q_t, const TripleField& z, double eta, const ConfidenceSet& set)
    : shape_(q_t.shape_ptr()), eta_(eta) {
    require_same_shape(q_t.shape(), z.shape(), "dual problem subgradient");
    require_same_shape(q_t.shape(), set.estimate.shape(), "dual problem confidence set");
    if (set.radius.size() != shape_->num_pairs())
        throw StructuralError("confidence set has the wrong number of radii");
    if (!(eta >= 0.0) || !std::isfinite(eta))
        throw DomainError("step size must be finite and nonnegative");
    const std::size_t n = shape_->num_triples();
    log_q_.resize(n);
    eta_z_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        if (!(q_t[j] > 0.0) || !std::isfinite(q_t[j]))
            throw DomainError("projection needs a strictly positive iterate");
        if (!std::isfinite(z[j]))
            throw DomainError("subgradient is not finite");
        log_q_[j] = std::log(q_t[j]);
        eta_z_[j] = eta * z[j];
    }
    p_bar_.assign(set.estimate.values().begin(), set.estimate.values().end());
    radius_ = set.radius;
    for (double r : radius_)
        if (!(r >= 0.0) || !std::isfinite(r))
            throw DomainError("confidence radii must be finite and nonnegative");
}

double DualProblem::evaluate_sum_difference(std::span<const double> beta, std::span<const double> sum,
                                            std::span<const double> difference, std::span<double> cand) const {
    const Shape& s = *shape_;
    auto beta_at = [&](int state) { return is_boundary(s, state) ? 0.0 : beta[static_cast<std::size_t>(state)]; };
    for (std::size_t p = 0; p < s.num_pairs(); ++p) {
        const std::size_t begin = s.row_begin(p);
        const std::size_t len = s.row_length(p);
        const double eps = radius_[p];
        const double bx = beta_at(s.pair_state(p));
        double expected_v = 0.0;
        for (std::size_t i = 0; i < len; ++i)
            expected_v += p_bar_[begin + i] * difference[begin + i];
        for (std::size_t i = 0; i < len; ++i) {
            const std::size_t j = begin + i;
            const double e = sum[j] * eps + beta_at(s.triple_target(j)) - bx;
            cand[j] = e + difference[j] - eta_z_[j] - expected_v;
        }
    }
    double total = 0.0;
    for (int k = 0; k < s.horizon(); ++k) {
        const std::size_t lo = s.triple_offset(k);
        const std::size_t hi = s.triple_offset(k + 1);
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = lo; j < hi; ++j) {
            cand[j] += log_q_[j];
            if (std::isnan(cand[j]))
                throw DomainError("Bellman error is not a number");
            mx = std::max(mx, cand[j]);
        }
        if (!std::isfinite(mx))
            throw DomainError("Bellman error overflowed");
        double acc = 0.0;
        for (std::size_t j = lo; j < hi; ++j)
            acc += std::exp(cand[j] - mx);
        const double lse = mx + std::log(acc);
        total += lse;
        for (std::size_t j = lo; j < hi; ++j)
            cand[j] = std::max(std::exp(cand[j] - lse), mass_floor);
    }
    return total;
}

TripleField DualProblem::bellman_error(const DualVariables& d) const {
    const Shape& s = *shape_;
    const auto beta = d.beta();
    const auto mp = d.mu_plus();
    const auto mm = d.mu_minus();
    auto beta_at = [&](int state) { return is_boundary(s, state) ? 0.0 : beta[static_cast<std::size_t>(state)]; };
    TripleField out(shape_);
    for (std::size_t p = 0; p < s.num_pairs(); ++p) {
        const std::size_t begin = s.row_begin(p);
        const std::size_t len = s.row_length(p);
        const double eps = radius_[p];
        const double bx = beta_at(s.pair_state(p));
        double expected_v = 0.0;
        for (std::size_t i = 0; i < len; ++i)
            expected_v += p_bar_[begin + i] * (mm[begin + i] - mp[begin + i]);
        for (std::size_t i = 0; i < len; ++i) {
            const std::size_t j = begin + i;
            const double v = mm[j] - mp[j];
            const double e = (mp[j] + mm[j]) * eps + beta_at(s.triple_target(j)) - bx;
            out[j] = e + v - eta_z_[j] - expected_v;
        }
    }
    return out;
}

double DualProblem::evaluate(const DualVariables& d, std::span<double> cand, DualVariables* grad) const {
    const Shape& s = *shape_;
    for (double v : d.flat())
        if (!std::isfinite(v))
            throw DomainError("dual variables are not finite");
    const auto mp = d.mu_plus();
    const auto mm = d.mu_minus();
    std::vector<double> sum(mp.size()), diff(mp.size());
    for (std::size_t j = 0; j < mp.size(); ++j) {
        sum[j] = mp[j] + mm[j];
        diff[j] = mm[j] - mp[j];
    }
    const double total = evaluate_sum_difference(d.beta(), sum, diff, cand);
    if (grad == nullptr)
        return total;

    auto gb = grad->beta();
    auto gp = grad->mu_plus();
    auto gm = grad->mu_minus();
    std::fill(gb.begin(), gb.end(), 0.0);
    for (std::size_t p = 0; p < s.num_pairs(); ++p) {
        const std::size_t begin = s.row_begin(p);
        const std::size_t len = s.row_length(p);
        const double eps = radius_[p];
        double mass = 0.0;
        for (std::size_t i = 0; i < len; ++i) {
            const std::size_t j = begin + i;
            mass += cand[j];
            gb[static_cast<std::size_t>(s.triple_target(j))] += cand[j];
        }
        gb[static_cast<std::size_t>(s.pair_state(p))] -= mass;
        for (std::size_t i = 0; i < len; ++i) {
            const std::size_t j = begin + i;
            gp[j] = cand[j] * (eps - 1.0) + p_bar_[j] * mass;
            gm[j] = cand[j] * (eps + 1.0) - p_bar_[j] * mass;
        }
    }
    gb[0] = 0.0;
    gb[gb.size() - 1] = 0.0;
    return total;
}

double DualProblem::objective(const DualVariables& d) const {
    std::vector<double> cand(shape_->num_triples());
    return evaluate(d, cand, nullptr);
}

DualVariables DualProblem::gradient(const DualVariables& d) const {
    std::vector<double> cand(shape_->num_triples());
    DualVariables g(*shape_);
    evaluate(d, cand, &g);
    return g;
}

OccupancyMeasure DualProblem::candidate(const DualVariables& d) const {
    OccupancyMeasure q(shape_);
    evaluate(d, q.values(), nullptr);
    return q;
}

OccupancyMeasure DualProblem::unconstrained() const {
    OccupancyMeasure q(shape_);
    for (std::size_t j = 0; j < q.size(); ++j)
        q[j] = std::max(std::exp(log_q_[j] - eta_z_[j]), mass_floor);
    return q;
}

void project_multiplier_block(std::span<double> mu_plus, std::span<double> mu_minus) {
    const std::size_t n = mu_plus.size();
    if (n == 0)
        return;
    // In (s, w) = (mu+ + mu-, mu- - mu+) coordinates the Euclidean distance is
    // halved but otherwise unchanged, so this is the unweighted sigma projection
    // with sigma0 the mean of s.
    double sigma = 0.0;
    std::vector<double> w(n);
    for (std::size_t j = 0; j < n; ++j) {
        sigma += mu_plus[j] + mu_minus[j];
        w[j] = mu_minus[j] - mu_plus[j];
    }
    sigma /= static_cast<double>(n);
    const std::vector<double> weights(n, 1.0);
    project_sigma_block(sigma, w, static_cast<double>(n), weights);
    for (std::size_t j = 0; j < n; ++j) {
        mu_plus[j] = 0.5 * (sigma - w[j]);
        mu_minus[j] = 0.5 * (sigma + w[j]);
    }
}

void project_duals(const Shape& shape, DualVariables& d) {
    auto beta = d.beta();
    beta[0] = 0.0;
    beta[beta.size() - 1] = 0.0;
    auto mp = d.mu_plus();
    auto mm = d.mu_minus();
    for (std::size_t p = 0; p < shape.num_pairs(); ++p) {
        const std::size_t begin = shape.row_begin(p);
        const std::size_t len = shape.row_length(p);
        project_multiplier_block(mp.subspan(begin, len), mm.subspan(begin, len));
    }
}

NonConvergenceError::NonConvergenceError(SolverReport report, DualVariables best)
    : Error("dual solver stopped after " + std::to_string(report.iterations) + " iterations at residual " +
            std::to_string(report.residual)),
      report_(report), best_(std::move(best)) {}

double projected_gradient_residual(const DualProblem& problem, const DualVariables& d) {
    SplitSolver solver(problem);
    const auto x = solver.layout().from_duals(d);
    std::vector<double> cand(problem.shape().num_triples()), g;
    solver.evaluate(x, cand, g);
    return solver.residual(x, g, cand);
}

DualSolution solve_dual(const DualProblem& problem, const SolverOptions& options, const DualVariables* warm) {
    const Shape& s = problem.shape();
    if (!(options.gtol > 0.0) || options.max_iterations < 0 || !(options.armijo > 0.0 && options.armijo < 1.0) ||
        !(options.backtrack > 0.0 && options.backtrack < 1.0) || options.nonmonotone_memory < 1)
        throw DomainError("invalid solver options");
    if (warm != nullptr &&
        (warm->num_states() != static_cast<std::size_t>(s.num_states()) || warm->num_triples() != s.num_triples()))
        throw StructuralError("warm-start duals have the wrong shape");

    SplitSolver solver(problem);
    const SplitLayout& layout = solver.layout();
    std::vector<double> x = layout.from_duals(warm != nullptr ? *warm : DualVariables(s));
    std::vector<double> cand(s.num_triples()), cand_new(s.num_triples());
    std::vector<double> g, g_new, trial, dir(x.size()), x_new(x.size()), best = x;
    Weights wt;

    SolverReport report;
    double f = solver.evaluate(x, cand, g);
    report.evaluations = 1;
    solver.step_weights(cand, wt);
    solver.project(x, wt);
    f = solver.evaluate(x, cand, g);

    std::deque<double> history{f};
    double alpha = 1.0;
    double best_residual = std::numeric_limits<double>::infinity();
    double best_objective = f;

    for (int it = 0;; ++it) {
        const double residual = solver.residual(x, g, cand);
        if (residual < best_residual) {
            best_residual = residual;
            best_objective = f;
            best = x;
        }
        report.iterations = it;
        if (residual <= options.gtol) {
            report.converged = true;
            report.residual = residual;
            report.objective = f;
            return {layout.to_duals(x), report};
        }
        if (it >= options.max_iterations)
            break;

        double slope = 0.0;
        for (int attempt = 0; attempt < 2; ++attempt) {
            solver.step(x, g, wt, alpha, trial);
            for (std::size_t i = 0; i < x.size(); ++i)
                dir[i] = trial[i] - x[i];
            slope = dot(g, dir);
            if (slope < 0.0)
                break;
            alpha = 1.0;
        }
        if (!(slope < 0.0))
            break;

        const double f_ref = *std::max_element(history.begin(), history.end());
        const double slack = 1e-14 * (1.0 + std::abs(f_ref));
        double lambda = 1.0;
        bool accepted = false;
        double f_new = f;
        for (int ls = 0; ls < max_backtracks; ++ls) {
            for (std::size_t i = 0; i < x.size(); ++i)
                x_new[i] = x[i] + lambda * dir[i];
            solver.project(x_new, wt);
            f_new = solver.evaluate(x_new, cand_new, g_new);
            ++report.evaluations;
            if (f_new <= f_ref + options.armijo * lambda * slope + slack) {
                accepted = true;
                break;
            }
            lambda *= options.backtrack;
        }
        if (!accepted) {
            // Backtracking from a long BB step can stall in round-off; retry once
            // from the plain scaled gradient before giving up.
            if (alpha == 1.0)
                break;
            alpha = 1.0;
            continue;
        }

        // Barzilai-Borwein step in the metric of the new weights.
        solver.step_weights(cand_new, wt);
        double sy = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            dir[i] = x_new[i] - x[i];
            sy += dir[i] * (g_new[i] - g[i]);
        }
        const double sws = solver.weighted_norm2(dir, wt);
        alpha = sy > 0.0 ? std::clamp(sws / sy, min_step, max_step) : max_step;

        std::swap(x, x_new);
        std::swap(g, g_new);
        std::swap(cand, cand_new);
        f = f_new;
        history.push_back(f);
        if (static_cast<int>(history.size()) > options.nonmonotone_memory)
            history.pop_front();
    }

    report.converged = false;
    report.residual = best_residual;
    report.objective = best_objective;
    throw NonConvergenceError(report, layout.to_duals(best));
}

Projection project(const DualProblem& problem, const SolverOptions& options, const DualVariables* warm) {
    auto solution = solve_dual(problem, options, warm);
    OccupancyMeasure q = problem.candidate(solution.duals);
    return Projection{std::move(q), std::move(solution.duals), solution.report};
}

KktCertificate kkt_certificate(const DualProblem& problem, const DualVariables& d, double active_threshold) {
    const Shape& s = problem.shape();
    const OccupancyMeasure q = problem.candidate(d);
    const auto report = validate_occupancy(q, 0.0);
    KktCertificate cert;
    cert.normalization = report.normalization_violation;
    cert.flow = report.flow_violation;
    cert.confidence_excess = -std::numeric_limits<double>::infinity();
    const auto est = problem.estimate();
    const auto mp = d.mu_plus();
    const auto mm = d.mu_minus();
    for (std::size_t p = 0; p < s.num_pairs(); ++p) {
        const std::size_t begin = s.row_begin(p);
        const std::size_t len = s.row_length(p);
        double mass = 0.0;
        for (std::size_t i = 0; i < len; ++i)
            mass += q[begin + i];
        double dist = 0.0;
        double sigma = 0.0;
        for (std::size_t i = 0; i < len; ++i) {
            const std::size_t j = begin + i;
            const double dev = q[j] / mass - est[j];
            dist += std::abs(dev);
            sigma += mp[j] + mm[j];
            if (mp[j] > active_threshold)
                cert.slackness = std::max(cert.slackness, -dev);
            if (mm[j] > active_threshold)
                cert.slackness = std::max(cert.slackness, dev);
        }
        sigma /= static_cast<double>(len);
        const double excess = dist - problem.radius()[p];
        cert.confidence_excess = std::max(cert.confidence_excess, excess);
        if (sigma > active_threshold && problem.radius()[p] > 0.0)
            cert.slackness = std::max(cert.slackness, std::abs(excess));
    }
    return cert;
}

} // namespace ucoreps
