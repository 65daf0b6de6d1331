#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace ucoreps {

/**
 * Index layout of a layered, loop-free state space X_0, ..., X_L with a
 * common action set A.
 *
 * States are dense per-layer indices 0..|X_k|-1 and also have a global id.
 * A "pair" is a decision pair (x, a) with x in layers 0..L-1; a "triple" is
 * (x, a, x') with x' in the next layer. Triples are stored layer by layer,
 * and within a layer in row-major (x, a, x') order, so the successors of a
 * pair form one contiguous row.
 */
class Shape {
public:
    Shape(std::vector<int> layer_sizes, int num_actions);

    /// Number of transitions per episode, L.
    int horizon() const noexcept { return static_cast<int>(layer_sizes_.size()) - 1; }
    int layer_size(int k) const { return layer_sizes_.at(static_cast<std::size_t>(k)); }
    const std::vector<int>& layer_sizes() const noexcept { return layer_sizes_; }
    int num_actions() const noexcept { return num_actions_; }

    /// |X| summed over all layers, including the terminal one.
    int num_states() const noexcept { return num_states_; }
    std::size_t num_pairs() const noexcept { return pair_layer_.size(); }
    std::size_t num_triples() const noexcept { return triple_pair_.size(); }

    int state_id(int k, int x) const { return state_offset_[static_cast<std::size_t>(k)] + x; }
    int state_layer(int state) const { return state_layer_[static_cast<std::size_t>(state)]; }
    int state_local(int state) const { return state - state_offset_[static_cast<std::size_t>(state_layer(state))]; }

    std::size_t pair_id(int k, int x, int a) const {
        return pair_offset_[static_cast<std::size_t>(k)] +
               static_cast<std::size_t>(x) * static_cast<std::size_t>(num_actions_) + static_cast<std::size_t>(a);
    }
    std::size_t pair_offset(int k) const { return pair_offset_[static_cast<std::size_t>(k)]; }
    int pair_layer(std::size_t p) const { return pair_layer_[p]; }
    int pair_state(std::size_t p) const { return pair_state_[p]; }
    int pair_action(std::size_t p) const;

    /// First triple of the row of pair `p`; the row has `row_length(p)` entries.
    std::size_t row_begin(std::size_t p) const { return row_begin_[p]; }
    std::size_t row_length(std::size_t p) const { return static_cast<std::size_t>(layer_size(pair_layer(p) + 1)); }

    std::size_t triple_id(int k, int x, int a, int next) const {
        return row_begin(pair_id(k, x, a)) + static_cast<std::size_t>(next);
    }
    std::size_t triple_offset(int k) const { return triple_offset_[static_cast<std::size_t>(k)]; }
    std::size_t triple_pair(std::size_t j) const { return triple_pair_[j]; }
    /// Global id of the source state of triple `j`.
    int triple_source(std::size_t j) const { return pair_state_[triple_pair_[j]]; }
    /// Global id of the successor state of triple `j`.
    int triple_target(std::size_t j) const { return triple_target_[j]; }
    int triple_layer(std::size_t j) const { return pair_layer_[triple_pair_[j]]; }

    bool operator==(const Shape& other) const noexcept {
        return layer_sizes_ == other.layer_sizes_ && num_actions_ == other.num_actions_;
    }

private:
    std::vector<int> layer_sizes_;
    int num_actions_;
    int num_states_ = 0;
    std::vector<int> state_offset_;
    std::vector<int> state_layer_;
    std::vector<std::size_t> pair_offset_;
    std::vector<std::size_t> triple_offset_;
    std::vector<int> pair_layer_;
    std::vector<int> pair_state_;
    std::vector<std::size_t> row_begin_;
    std::vector<std::size_t> triple_pair_;
    std::vector<int> triple_target_;
};

using ShapePtr = std::shared_ptr<const Shape>;

ShapePtr make_shape(std::vector<int> layer_sizes, int num_actions);

/// Throws StructuralError unless both shapes describe the same layout.
void require_same_shape(const Shape& a, const Shape& b, const char* what);

/// Dense real tensor over the triples of a shape.
class TripleTensor {
public:
    explicit TripleTensor(ShapePtr shape, double fill = 0.0);
    TripleTensor(ShapePtr shape, std::vector<double> values);

    const Shape& shape() const noexcept { return *shape_; }
    const ShapePtr& shape_ptr() const noexcept { return shape_; }

    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t j) const { return values_[j]; }
    double& operator[](std::size_t j) { return values_[j]; }
    double at(int k, int x, int a, int next) const { return values_[shape_->triple_id(k, x, a, next)]; }
    double& at(int k, int x, int a, int next) { return values_[shape_->triple_id(k, x, a, next)]; }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }
    std::span<const double> row(std::size_t pair) const {
        return std::span<const double>(values_).subspan(shape_->row_begin(pair), shape_->row_length(pair));
    }
    std::span<double> row(std::size_t pair) {
        return std::span<double>(values_).subspan(shape_->row_begin(pair), shape_->row_length(pair));
    }

private:
    ShapePtr shape_;
    std::vector<double> values_;
};

/// q(x, a, x'): probability of traversing each triple.
class OccupancyMeasure : public TripleTensor {
public:
    using TripleTensor::TripleTensor;
};

/// P(x' | x, a); each pair's row is a distribution over the next layer.
class TransitionFunction : public TripleTensor {
public:
    using TripleTensor::TripleTensor;
};

/// Plain real field over triples (subgradients, Bellman errors, ...).
class TripleField : public TripleTensor {
public:
    using TripleTensor::TripleTensor;
};

/// l(x, a, x') in [0,1]^d, stored component-major.
class LossFunction {
public:
    LossFunction(ShapePtr shape, int dim, double fill = 0.0);
    LossFunction(ShapePtr shape, int dim, std::vector<double> values);

    const Shape& shape() const noexcept { return *shape_; }
    const ShapePtr& shape_ptr() const noexcept { return shape_; }
    int dim() const noexcept { return dim_; }

    std::span<const double> component(int j) const;
    std::span<double> component(int j);
    std::span<const double> values() const noexcept { return values_; }

    /// Vector l(x, a, x') of triple `t` (copied, length d).
    std::vector<double> at_triple(std::size_t t) const;

    /// Throws DomainError unless every entry lies in [0, 1].
    void check_range() const;

private:
    ShapePtr shape_;
    int dim_;
    std::vector<double> values_;
};

/// pi(a | x) for the decision states of layers 0..L-1, indexed by pair.
class Policy {
public:
    explicit Policy(ShapePtr shape, double fill = 0.0);
    Policy(ShapePtr shape, std::vector<double> probs);

    const Shape& shape() const noexcept { return *shape_; }
    const ShapePtr& shape_ptr() const noexcept { return shape_; }

    double operator()(int k, int x, int a) const { return probs_[shape_->pair_id(k, x, a)]; }
    double& operator()(int k, int x, int a) { return probs_[shape_->pair_id(k, x, a)]; }
    double operator[](std::size_t pair) const { return probs_[pair]; }
    double& operator[](std::size_t pair) { return probs_[pair]; }

    /// Action distribution at state x of layer k.
    std::span<const double> at_state(int k, int x) const;
    std::span<const double> values() const noexcept { return probs_; }

private:
    ShapePtr shape_;
    std::vector<double> probs_;
};

/// (x_0, a_0, x_1, ..., a_{L-1}, x_L) as per-layer local indices.
struct Trajectory {
    std::vector<int> states;
    std::vector<int> actions;

    /// Triple id of step k.
    std::size_t triple(const Shape& shape, int k) const {
        return shape.triple_id(k, states[static_cast<std::size_t>(k)], actions[static_cast<std::size_t>(k)],
                               states[static_cast<std::size_t>(k) + 1]);
    }
    bool operator==(const Trajectory&) const = default;
};

} // namespace ucoreps
