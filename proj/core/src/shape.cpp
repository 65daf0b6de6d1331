#include "ucoreps/shape.hpp"

#include <string>

#include "ucoreps/errors.hpp"

namespace ucoreps {

Shape::Shape(std::vector<int> layer_sizes, int num_actions)
    : layer_sizes_(std::move(layer_sizes)), num_actions_(num_actions) {
    if (layer_sizes_.size() < 2)
        throw StructuralError("a layered MDP needs at least two layers");
    if (layer_sizes_.front() != 1 || layer_sizes_.back() != 1)
        throw StructuralError("first and last layers must be singletons");
    for (int n : layer_sizes_)
        if (n < 1)
            throw StructuralError("layer sizes must be at least 1");
    if (num_actions_ < 1)
        throw StructuralError("action set must be nonempty");

    const int L = horizon();
    for (int k = 0; k <= L; ++k) {
        state_offset_.push_back(num_states_);
        for (int x = 0; x < layer_sizes_[static_cast<std::size_t>(k)]; ++x)
            state_layer_.push_back(k);
        num_states_ += layer_sizes_[static_cast<std::size_t>(k)];
    }

    std::size_t pairs = 0, triples = 0;
    for (int k = 0; k < L; ++k) {
        pair_offset_.push_back(pairs);
        triple_offset_.push_back(triples);
        const int n = layer_sizes_[static_cast<std::size_t>(k)];
        const int next = layer_sizes_[static_cast<std::size_t>(k) + 1];
        for (int x = 0; x < n; ++x) {
            for (int a = 0; a < num_actions_; ++a) {
                const std::size_t p = pairs++;
                pair_layer_.push_back(k);
                pair_state_.push_back(state_offset_[static_cast<std::size_t>(k)] + x);
                row_begin_.push_back(triples);
                for (int y = 0; y < next; ++y) {
                    triple_pair_.push_back(p);
                    triple_target_.push_back(state_offset_[static_cast<std::size_t>(k) + 1] + y);
                    ++triples;
                }
            }
        }
    }
    pair_offset_.push_back(pairs);
    triple_offset_.push_back(triples);
}

int Shape::pair_action(std::size_t p) const {
    return static_cast<int>((p - pair_offset(pair_layer(p))) % static_cast<std::size_t>(num_actions_));
}

ShapePtr make_shape(std::vector<int> layer_sizes, int num_actions) {
    return std::make_shared<const Shape>(std::move(layer_sizes), num_actions);
}

void require_same_shape(const Shape& a, const Shape& b, const char* what) {
    if (!(a == b))
        throw StructuralError(std::string("shape mismatch: ") + what);
}

TripleTensor::TripleTensor(ShapePtr shape, double fill)
    : shape_(std::move(shape)), values_(shape_->num_triples(), fill) {}

TripleTensor::TripleTensor(ShapePtr shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
    if (values_.size() != shape_->num_triples())
        throw StructuralError("triple tensor has " + std::to_string(values_.size()) + " entries, shape needs " +
                              std::to_string(shape_->num_triples()));
}

LossFunction::LossFunction(ShapePtr shape, int dim, double fill) : shape_(std::move(shape)), dim_(dim) {
    if (dim_ < 1)
        throw StructuralError("loss dimension must be at least 1");
    values_.assign(shape_->num_triples() * static_cast<std::size_t>(dim_), fill);
}

LossFunction::LossFunction(ShapePtr shape, int dim, std::vector<double> values)
    : shape_(std::move(shape)), dim_(dim), values_(std::move(values)) {
    if (dim_ < 1)
        throw StructuralError("loss dimension must be at least 1");
    if (values_.size() != shape_->num_triples() * static_cast<std::size_t>(dim_))
        throw StructuralError("loss tensor size does not match shape and dimension");
}

std::span<const double> LossFunction::component(int j) const {
    if (j < 0 || j >= dim_)
        throw StructuralError("loss component out of range");
    const std::size_t n = shape_->num_triples();
    return std::span<const double>(values_).subspan(static_cast<std::size_t>(j) * n, n);
}

std::span<double> LossFunction::component(int j) {
    if (j < 0 || j >= dim_)
        throw StructuralError("loss component out of range");
    const std::size_t n = shape_->num_triples();
    return std::span<double>(values_).subspan(static_cast<std::size_t>(j) * n, n);
}

std::vector<double> LossFunction::at_triple(std::size_t t) const {
    std::vector<double> out(static_cast<std::size_t>(dim_));
    const std::size_t n = shape_->num_triples();
    for (int j = 0; j < dim_; ++j)
        out[static_cast<std::size_t>(j)] = values_[static_cast<std::size_t>(j) * n + t];
    return out;
}

void LossFunction::check_range() const {
    for (double v : values_)
        if (!(v >= 0.0 && v <= 1.0))
            throw DomainError("loss entries must lie in [0, 1]");
}

Policy::Policy(ShapePtr shape, double fill) : shape_(std::move(shape)), probs_(shape_->num_pairs(), fill) {}

Policy::Policy(ShapePtr shape, std::vector<double> probs) : shape_(std::move(shape)), probs_(std::move(probs)) {
    if (probs_.size() != shape_->num_pairs())
        throw StructuralError("policy size does not match shape");
}

std::span<const double> Policy::at_state(int k, int x) const {
    return std::span<const double>(probs_).subspan(shape_->pair_id(k, x, 0),
                                                   static_cast<std::size_t>(shape_->num_actions()));
}

} // namespace ucoreps
