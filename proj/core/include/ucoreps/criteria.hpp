#pragma once

#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ucoreps/shape.hpp"

namespace ucoreps {

/// <q, l> for a single loss component.
double inner_product(std::span<const double> q, std::span<const double> l);

namespace criteria {

/// Total expected loss, f(q; l) = <q, l>. Requires d = 1.
struct TotalExpectedLoss {};

/// Worst component, f(q; l) = max_j <q, l[j]>. Ties resolve to the smallest j.
struct MinMax {};

/// f(q; l) = alpha <q, l>^c + (1 - alpha) <q, l^c>. Requires d = 1.
struct Risk {
    double alpha;
    double c;
};

/**
 * f(q; l) = g(<q, h_1(l)>, ..., <q, h_m(l)>) with convex g.
 *
 * The caller supplies a subgradient of g and a Lipschitz bound for f; neither
 * can be derived from a black-box g.
 */
struct Composite {
    using ComponentMap = std::function<double(std::span<const double>)>;
    using Aggregator = std::function<double(std::span<const double>)>;
    using AggregatorSubgradient = std::function<std::vector<double>(std::span<const double>)>;

    std::vector<ComponentMap> components;
    Aggregator aggregate;
    AggregatorSubgradient aggregate_subgradient;
    double lipschitz = 0.0;
    /// Upper corner of the box the inner products range over (used by the convexity probe).
    double box_upper = 1.0;
};

} // namespace criteria

/**
 * A convexly-measurable performance criterion, represented through its
 * criterion function f(q; l) of the occupancy measure.
 */
class Criterion {
public:
    using Variant = std::variant<criteria::TotalExpectedLoss, criteria::MinMax, criteria::Risk, criteria::Composite>;

    static Criterion total_expected_loss();
    static Criterion min_max();
    static Criterion risk(double alpha, double c);
    /// Validates g by random midpoint sampling on [0, box_upper]^m; throws DomainError if g is not convex.
    static Criterion composite(criteria::Composite spec);

    const Variant& variant() const noexcept { return variant_; }
    std::string name() const;

    /// Loss dimension the criterion needs, or 0 when any d >= 1 works.
    int required_dim() const;

    double evaluate(std::span<const double> q, const LossFunction& loss) const;
    double evaluate(const TripleTensor& q, const LossFunction& loss) const;

    /// A subgradient z in the subdifferential of f(.; l) at q.
    TripleField subgradient(const TripleTensor& q, const LossFunction& loss) const;

    /// F with sup |z(x,a,x')| <= F over valid occupancy measures and losses in [0,1]^d.
    double lipschitz_bound(int horizon) const;

    /// Feature maps h_j(l) as triple fields, so that f(q; l) = aggregate(<q, h_1(l)>, ..., <q, h_m(l)>).
    std::vector<TripleField> features(const LossFunction& loss) const;
    /// The convex aggregator g acting on the feature inner products.
    double aggregate(std::span<const double> u) const;
    /// A subgradient of g at u.
    std::vector<double> aggregate_subgradient(std::span<const double> u) const;

private:
    explicit Criterion(Variant v) : variant_(std::move(v)) {}
    void check_loss(const Shape& shape, const LossFunction& loss) const;

    Variant variant_;
};

} // namespace ucoreps
