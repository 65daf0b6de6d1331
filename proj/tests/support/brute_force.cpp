#include "brute_force.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "ucoreps/errors.hpp"

namespace ucoreps::testing {
namespace {

struct Inequality {
    // g(x) = sum_i coef_i x_{index_i} > 0
    std::vector<std::pair<Eigen::Index, double>> terms;
};

double value(const Inequality& g, const Eigen::VectorXd& x) {
    double v = 0.0;
    for (const auto& [i, c] : g.terms)
        v += c * x[i];
    return v;
}

} // namespace

BruteForceResult brute_force_project(const OccupancyMeasure& q_tilde, const ConfidenceSet& set,
                                     const BruteForceOptions& options) {
    const Shape& s = q_tilde.shape();
    const auto n = static_cast<Eigen::Index>(s.num_triples());
    for (double r : set.radius)
        if (!(r > 0.0))
            throw DomainError("brute_force_project needs positive radii");

    // Equalities: layer 0 sums to 1; inflow = outflow at every interior state.
    std::vector<std::vector<std::pair<Eigen::Index, double>>> rows;
    std::vector<double> rhs;
    {
        std::vector<std::pair<Eigen::Index, double>> r;
        for (std::size_t j = s.triple_offset(0); j < s.triple_offset(1); ++j)
            r.emplace_back(static_cast<Eigen::Index>(j), 1.0);
        rows.push_back(r);
        rhs.push_back(1.0);
    }
    for (int k = 1; k < s.horizon(); ++k)
        for (int x = 0; x < s.layer_size(k); ++x) {
            const int state = s.state_id(k, x);
            std::vector<std::pair<Eigen::Index, double>> r;
            for (std::size_t j = s.triple_offset(k - 1); j < s.triple_offset(k); ++j)
                if (s.triple_target(j) == state)
                    r.emplace_back(static_cast<Eigen::Index>(j), 1.0);
            for (std::size_t j = s.triple_offset(k); j < s.triple_offset(k + 1); ++j)
                if (s.triple_source(j) == state)
                    r.emplace_back(static_cast<Eigen::Index>(j), -1.0);
            rows.push_back(r);
            rhs.push_back(0.0);
        }
    const auto m_eq = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m_eq, 2 * n);
    for (Eigen::Index i = 0; i < m_eq; ++i)
        for (const auto& [j, c] : rows[static_cast<std::size_t>(i)])
            A(i, j) += c;

    // Inequalities over x = (q, t).
    std::vector<Inequality> ineq;
    for (std::size_t p = 0; p < s.num_pairs(); ++p) {
        const std::size_t b = s.row_begin(p), len = s.row_length(p);
        const auto est = set.estimate.row(p);
        for (std::size_t i = 0; i < len; ++i) {
            const auto j = static_cast<Eigen::Index>(b + i);
            Inequality lo, hi;
            lo.terms.emplace_back(n + j, 1.0);
            hi.terms.emplace_back(n + j, 1.0);
            for (std::size_t l = 0; l < len; ++l) {
                const auto jl = static_cast<Eigen::Index>(b + l);
                const double c = (l == i ? 1.0 : 0.0) - est[i];
                lo.terms.emplace_back(jl, -c);
                hi.terms.emplace_back(jl, c);
            }
            ineq.push_back(lo);
            ineq.push_back(hi);
        }
        Inequality budget;
        for (std::size_t l = 0; l < len; ++l) {
            const auto jl = static_cast<Eigen::Index>(b + l);
            budget.terms.emplace_back(jl, set.radius[p]);
            budget.terms.emplace_back(n + jl, -1.0);
        }
        ineq.push_back(budget);
    }
    const double m_ineq = static_cast<double>(ineq.size());

    // Strictly feasible start: the estimate's own occupancy measure, with slack
    // t at a quarter of each pair's budget.
    Eigen::VectorXd x(2 * n);
    {
        Policy uniform(q_tilde.shape_ptr());
        for (std::size_t p = 0; p < s.num_pairs(); ++p)
            uniform[p] = 1.0 / s.num_actions();
        const OccupancyMeasure q0 = occupancy_from(set.estimate, uniform);
        for (std::size_t p = 0; p < s.num_pairs(); ++p) {
            const std::size_t b = s.row_begin(p), len = s.row_length(p);
            double mass = 0.0;
            for (std::size_t l = 0; l < len; ++l)
                mass += q0[b + l];
            for (std::size_t l = 0; l < len; ++l) {
                x[static_cast<Eigen::Index>(b + l)] = q0[b + l];
                x[n + static_cast<Eigen::Index>(b + l)] = 0.25 * set.radius[p] * mass / static_cast<double>(len);
            }
        }
    }
    Eigen::VectorXd log_ref(n);
    for (Eigen::Index j = 0; j < n; ++j)
        log_ref[j] = std::log(q_tilde[static_cast<std::size_t>(j)]);

    const auto phi = [&](const Eigen::VectorXd& v, double tau, bool& ok) {
        ok = true;
        double f = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (!(v[j] > 0.0)) {
                ok = false;
                return 0.0;
            }
            f += tau * (v[j] * (std::log(v[j]) - log_ref[j]) - v[j] + std::exp(log_ref[j]));
        }
        for (const auto& g : ineq) {
            const double gv = value(g, v);
            if (!(gv > 0.0)) {
                ok = false;
                return 0.0;
            }
            f -= std::log(gv);
        }
        return f;
    };

    BruteForceResult out{OccupancyMeasure(q_tilde.shape_ptr()), 0.0, 0, 0.0};
    const Eigen::Index dim = 2 * n;
    // Newton steps stay in the null space of the equalities, spanned by the
    // orthonormal columns of `basis`, so the start's feasibility is kept exactly.
    const Eigen::MatrixXd kernel = Eigen::FullPivLU<Eigen::MatrixXd>(A).kernel();
    const Eigen::MatrixXd basis =
        Eigen::HouseholderQR<Eigen::MatrixXd>(kernel).householderQ() * Eigen::MatrixXd::Identity(dim, kernel.cols());
    for (double tau = 1.0;; tau *= options.barrier_growth) {
        for (int it = 0; it < options.max_newton_per_stage; ++it) {
            Eigen::VectorXd grad = Eigen::VectorXd::Zero(dim);
            Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(dim, dim);
            for (Eigen::Index j = 0; j < n; ++j) {
                grad[j] += tau * (std::log(x[j]) - log_ref[j]);
                hess(j, j) += tau / x[j];
            }
            for (const auto& g : ineq) {
                const double gv = value(g, x);
                for (const auto& [i, c] : g.terms) {
                    grad[i] -= c / gv;
                    for (const auto& [l, d] : g.terms)
                        hess(i, l) += c * d / (gv * gv);
                }
            }
            const Eigen::VectorXd reduced_grad = basis.transpose() * grad;
            const Eigen::MatrixXd reduced_hess = basis.transpose() * hess * basis;
            const Eigen::VectorXd dy = reduced_hess.ldlt().solve(-reduced_grad);
            const Eigen::VectorXd dx = basis * dy;
            const double decrement = -reduced_grad.dot(dy);
            ++out.newton_steps;
            if (decrement / 2.0 <= 1e-13)
                break;
            bool ok = false;
            const double f0 = phi(x, tau, ok);
            double step = 1.0;
            for (int b = 0; b < 80; ++b, step *= 0.5) {
                const Eigen::VectorXd trial = x + step * dx;
                bool trial_ok = false;
                const double f1 = phi(trial, tau, trial_ok);
                if (trial_ok && f1 <= f0 + 0.01 * step * grad.dot(dx)) {
                    x = trial;
                    break;
                }
            }
        }
        if (m_ineq / tau < options.duality_gap) {
            out.duality_gap = m_ineq / tau;
            break;
        }
    }
    for (Eigen::Index j = 0; j < n; ++j)
        out.q[static_cast<std::size_t>(j)] = x[j];
    for (std::size_t j = 0; j < out.q.size(); ++j)
        out.objective += out.q[j] * std::log(out.q[j] / q_tilde[j]) - out.q[j] + q_tilde[j];
    return out;
}

} // namespace ucoreps::testing
