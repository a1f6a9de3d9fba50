#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace fcvae::nn {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

namespace detail {

/// Graph node. Operations record their inputs and a closure that pushes
/// `grad` back into them; the graph is rebuilt on every forward pass.
struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // allocated lazily
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward;

    std::vector<double>& grad_buffer() {
        if (grad.empty()) grad.assign(value.size(), 0.0);
        return grad;
    }
};

}  // namespace detail

/// Dense row-major array of doubles taking part in reverse-mode differentiation.
/// Copies share the underlying node, like a handle.
class Tensor {
public:
    Tensor() = default;
    Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value);
    static Tensor scalar(double value);
    /// Builds the output of an operation; the backward closure is kept only if
    /// some parent requires a gradient.
    static Tensor from_op(Shape shape, std::vector<double> data, std::vector<Tensor> parents,
                          std::function<void(detail::Node&)> backward);

    bool defined() const noexcept { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t numel() const { return node_->value.size(); }
    std::size_t rows() const { return node_->shape.empty() ? 1 : node_->shape[0]; }
    std::size_t cols() const { return rows() == 0 ? 0 : numel() / rows(); }

    std::span<const double> data() const { return node_->value; }
    /// Direct write access; only meaningful for leaves (optimiser updates, finite differences).
    std::span<double> mutable_data() { return node_->value; }
    double item() const;
    double at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }
    std::vector<double> to_vector() const { return node_->value; }

    bool requires_grad() const { return node_ && node_->requires_grad; }
    void set_requires_grad(bool on);
    bool has_grad() const { return node_ && !node_->grad.empty(); }
    std::span<const double> grad() const { return node_->grad; }
    void zero_grad();

    /// Fresh leaf holding a copy of the values.
    Tensor detach() const;

    const std::shared_ptr<detail::Node>& node() const { return node_; }

private:
    std::shared_ptr<detail::Node> node_;
};

/// Populates grad on every reachable tensor that requires one. Leaf gradients
/// accumulate across calls; interior ones are recomputed.
void backward(const Tensor& loss);

}  // namespace fcvae::nn

namespace fcvae::nn {

/// While alive, operations on this thread record no graph (inference only).
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

    static bool active() noexcept;

private:
    bool previous_;
};

}  // namespace fcvae::nn
