#include "ucoreps/criteria.hpp"

#include <algorithm>
#include <cmath>

#include "ucoreps/errors.hpp"
#include "ucoreps/rng.hpp"

namespace ucoreps {
namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Elementwise power on [0,1] losses with 0^e = 0 for every e > 0.
double loss_pow(double v, double e) {
    return v <= 0.0 ? 0.0 : std::pow(v, e);
}

std::vector<double> composite_inner_products(const criteria::Composite& c, std::span<const double> q,
                                             const LossFunction& loss) {
    std::vector<double> u(c.components.size(), 0.0);
    for (std::size_t t = 0; t < q.size(); ++t) {
        const auto l = loss.at_triple(t);
        for (std::size_t j = 0; j < c.components.size(); ++j)
            u[j] += q[t] * c.components[j](l);
    }
    return u;
}

} // namespace

double inner_product(std::span<const double> q, std::span<const double> l) {
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i)
        s += q[i] * l[i];
    return s;
}

Criterion Criterion::total_expected_loss() {
    return Criterion(criteria::TotalExpectedLoss{});
}

Criterion Criterion::min_max() {
    return Criterion(criteria::MinMax{});
}

Criterion Criterion::risk(double alpha, double c) {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw DomainError("risk criterion needs 0 <= alpha <= 1");
    if (!(c > 1.0) || !std::isfinite(c))
        throw DomainError("risk criterion needs c > 1");
    return Criterion(criteria::Risk{alpha, c});
}

Criterion Criterion::composite(criteria::Composite spec) {
    if (spec.components.empty() || !spec.aggregate || !spec.aggregate_subgradient)
        throw DomainError("composite criterion needs component maps, g and a subgradient of g");
    if (!(spec.lipschitz > 0.0))
        throw DomainError("composite criterion needs a positive Lipschitz bound");
    const std::size_t m = spec.components.size();
    Rng rng(0x5eedc0117e5ULL);
    std::vector<double> a(m), b(m), mid(m);
    for (int trial = 0; trial < 200; ++trial) {
        for (std::size_t j = 0; j < m; ++j) {
            a[j] = rng.uniform() * spec.box_upper;
            b[j] = rng.uniform() * spec.box_upper;
            mid[j] = 0.5 * (a[j] + b[j]);
        }
        const double lhs = spec.aggregate(mid);
        const double rhs = 0.5 * (spec.aggregate(a) + spec.aggregate(b));
        if (lhs > rhs + 1e-10 * (1.0 + std::abs(rhs)))
            throw DomainError("composite aggregator failed the midpoint convexity probe");
    }
    return Criterion(std::move(spec));
}

std::string Criterion::name() const {
    return std::visit(overloaded{
                          [](const criteria::TotalExpectedLoss&) { return std::string("tel"); },
                          [](const criteria::MinMax&) { return std::string("minmax"); },
                          [](const criteria::Risk&) { return std::string("risk"); },
                          [](const criteria::Composite&) { return std::string("composite"); },
                      },
                      variant_);
}

int Criterion::required_dim() const {
    if (std::holds_alternative<criteria::TotalExpectedLoss>(variant_) ||
        std::holds_alternative<criteria::Risk>(variant_))
        return 1;
    return 0;
}

void Criterion::check_loss(const Shape& shape, const LossFunction& loss) const {
    require_same_shape(shape, loss.shape(), "criterion loss");
    const int d = required_dim();
    if (d != 0 && loss.dim() != d)
        throw StructuralError(name() + " criterion needs " + std::to_string(d) + "-dimensional losses, got " +
                              std::to_string(loss.dim()));
}

double Criterion::evaluate(std::span<const double> q, const LossFunction& loss) const {
    if (q.size() != loss.shape().num_triples())
        throw StructuralError("criterion evaluated on a tensor of the wrong size");
    const int d = required_dim();
    if (d != 0 && loss.dim() != d)
        throw StructuralError(name() + " criterion needs " + std::to_string(d) + "-dimensional losses");
    return std::visit(
        overloaded{
            [&](const criteria::TotalExpectedLoss&) { return inner_product(q, loss.component(0)); },
            [&](const criteria::MinMax&) {
                double best = inner_product(q, loss.component(0));
                for (int j = 1; j < loss.dim(); ++j)
                    best = std::max(best, inner_product(q, loss.component(j)));
                return best;
            },
            [&](const criteria::Risk& r) {
                const auto l = loss.component(0);
                double lin = 0.0, powered = 0.0;
                for (std::size_t t = 0; t < q.size(); ++t) {
                    lin += q[t] * l[t];
                    powered += q[t] * loss_pow(l[t], r.c);
                }
                return r.alpha * loss_pow(lin, r.c) + (1.0 - r.alpha) * powered;
            },
            [&](const criteria::Composite& c) { return c.aggregate(composite_inner_products(c, q, loss)); },
        },
        variant_);
}

double Criterion::evaluate(const TripleTensor& q, const LossFunction& loss) const {
    check_loss(q.shape(), loss);
    return evaluate(q.values(), loss);
}

TripleField Criterion::subgradient(const TripleTensor& q, const LossFunction& loss) const {
    check_loss(q.shape(), loss);
    TripleField z(q.shape_ptr());
    auto out = z.values();
    std::visit(overloaded{
                   [&](const criteria::TotalExpectedLoss&) {
                       const auto l = loss.component(0);
                       std::copy(l.begin(), l.end(), out.begin());
                   },
                   [&](const criteria::MinMax&) {
                       int arg = 0;
                       double best = inner_product(q.values(), loss.component(0));
                       for (int j = 1; j < loss.dim(); ++j) {
                           const double v = inner_product(q.values(), loss.component(j));
                           if (v > best) {
                               best = v;
                               arg = j;
                           }
                       }
                       const auto l = loss.component(arg);
                       std::copy(l.begin(), l.end(), out.begin());
                   },
                   [&](const criteria::Risk& r) {
                       const auto l = loss.component(0);
                       const double lin = inner_product(q.values(), l);
                       const double scale = r.alpha * r.c * loss_pow(lin, r.c - 1.0);
                       for (std::size_t t = 0; t < out.size(); ++t)
                           out[t] = scale * l[t] + (1.0 - r.alpha) * loss_pow(l[t], r.c);
                   },
                   [&](const criteria::Composite& c) {
                       const auto u = composite_inner_products(c, q.values(), loss);
                       const auto g = c.aggregate_subgradient(u);
                       if (g.size() != c.components.size())
                           throw StructuralError("aggregator subgradient has the wrong length");
                       for (std::size_t t = 0; t < out.size(); ++t) {
                           const auto l = loss.at_triple(t);
                           double v = 0.0;
                           for (std::size_t j = 0; j < g.size(); ++j)
                               v += g[j] * c.components[j](l);
                           out[t] = v;
                       }
                   },
               },
               variant_);
    return z;
}

double Criterion::lipschitz_bound(int horizon) const {
    return std::visit(overloaded{
                          [](const criteria::TotalExpectedLoss&) { return 1.0; },
                          [](const criteria::MinMax&) { return 1.0; },
                          [&](const criteria::Risk& r) {
                              return r.alpha * r.c * std::pow(static_cast<double>(horizon), r.c - 1.0) +
                                     (1.0 - r.alpha);
                          },
                          [](const criteria::Composite& c) { return c.lipschitz; },
                      },
                      variant_);
}

std::vector<TripleField> Criterion::features(const LossFunction& loss) const {
    check_loss(loss.shape(), loss);
    const auto& shape = loss.shape_ptr();
    const auto copy_of = [&](std::span<const double> l) {
        TripleField h(shape);
        std::copy(l.begin(), l.end(), h.values().begin());
        return h;
    };
    std::vector<TripleField> out;
    std::visit(overloaded{
                   [&](const criteria::TotalExpectedLoss&) { out.push_back(copy_of(loss.component(0))); },
                   [&](const criteria::MinMax&) {
                       for (int j = 0; j < loss.dim(); ++j)
                           out.push_back(copy_of(loss.component(j)));
                   },
                   [&](const criteria::Risk& r) {
                       out.push_back(copy_of(loss.component(0)));
                       TripleField h(shape);
                       const auto l = loss.component(0);
                       for (std::size_t t = 0; t < l.size(); ++t)
                           h[t] = loss_pow(l[t], r.c);
                       out.push_back(std::move(h));
                   },
                   [&](const criteria::Composite& c) {
                       for (std::size_t j = 0; j < c.components.size(); ++j)
                           out.emplace_back(shape);
                       for (std::size_t t = 0; t < shape->num_triples(); ++t) {
                           const auto l = loss.at_triple(t);
                           for (std::size_t j = 0; j < c.components.size(); ++j)
                               out[j][t] = c.components[j](l);
                       }
                   },
               },
               variant_);
    return out;
}

double Criterion::aggregate(std::span<const double> u) const {
    if (u.empty())
        throw StructuralError("aggregator needs at least one inner product");
    return std::visit(overloaded{
                          [&](const criteria::TotalExpectedLoss&) { return u[0]; },
                          [&](const criteria::MinMax&) { return *std::max_element(u.begin(), u.end()); },
                          [&](const criteria::Risk& r) {
                              if (u.size() != 2)
                                  throw StructuralError("risk aggregator needs two inner products");
                              return r.alpha * loss_pow(u[0], r.c) + (1.0 - r.alpha) * u[1];
                          },
                          [&](const criteria::Composite& c) { return c.aggregate(u); },
                      },
                      variant_);
}

std::vector<double> Criterion::aggregate_subgradient(std::span<const double> u) const {
    if (u.empty())
        throw StructuralError("aggregator needs at least one inner product");
    return std::visit(overloaded{
                          [&](const criteria::TotalExpectedLoss&) { return std::vector<double>{1.0}; },
                          [&](const criteria::MinMax&) {
                              std::vector<double> g(u.size(), 0.0);
                              g[static_cast<std::size_t>(std::max_element(u.begin(), u.end()) - u.begin())] = 1.0;
                              return g;
                          },
                          [&](const criteria::Risk& r) {
                              if (u.size() != 2)
                                  throw StructuralError("risk aggregator needs two inner products");
                              return std::vector<double>{r.alpha * r.c * loss_pow(u[0], r.c - 1.0), 1.0 - r.alpha};
                          },
                          [&](const criteria::Composite& c) { return c.aggregate_subgradient(u); },
                      },
                      variant_);
}

} // namespace ucoreps
