#include "fcvae/nn/tensor.hpp"

#include <sstream>
#include <unordered_set>

#include "fcvae/errors.hpp"

namespace fcvae::nn {

namespace {
thread_local bool no_grad = false;
}  // namespace

NoGradGuard::NoGradGuard() : previous_(no_grad) { no_grad = true; }
NoGradGuard::~NoGradGuard() { no_grad = previous_; }
bool NoGradGuard::active() noexcept { return no_grad; }

std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
    os << ']';
    return os.str();
}

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad) : node_(std::make_shared<detail::Node>()) {
    if (shape_numel(shape) != data.size())
        throw ShapeError("shape " + shape_string(shape) + " does not match " + std::to_string(data.size()) + " values");
    node_->shape = std::move(shape);
    node_->value = std::move(data);
    node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    const auto n = shape_numel(shape);
    return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::full(Shape shape, double value) {
    const auto n = shape_numel(shape);
    return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::scalar(double value) { return Tensor({}, {value}); }

Tensor Tensor::from_op(Shape shape, std::vector<double> data, std::vector<Tensor> parents,
                       std::function<void(detail::Node&)> backward) {
    Tensor out(std::move(shape), std::move(data));
    bool needs = false;
    if (!no_grad)
        for (const auto& p : parents) needs = needs || p.requires_grad();
    if (needs) {
        out.node_->requires_grad = true;
        out.node_->backward = std::move(backward);
        out.node_->parents.reserve(parents.size());
        for (auto& p : parents) out.node_->parents.push_back(p.node_);
    }
    return out;
}

double Tensor::item() const {
    if (numel() != 1) throw UsageError("item() on tensor of shape " + shape_string(shape()));
    return node_->value[0];
}

void Tensor::set_requires_grad(bool on) { node_->requires_grad = on; }

void Tensor::zero_grad() {
    if (node_) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::detach() const { return Tensor(shape(), node_->value, false); }

void backward(const Tensor& loss) {
    if (!loss.defined() || loss.numel() != 1)
        throw UsageError("backward needs a scalar loss, got shape " +
                         (loss.defined() ? shape_string(loss.shape()) : std::string("<undefined>")));
    if (!loss.requires_grad()) return;

    // Post-order DFS gives a topological order with the loss last.
    std::vector<detail::Node*> order;
    std::unordered_set<detail::Node*> seen;
    std::vector<std::pair<detail::Node*, std::size_t>> stack{{loss.node().get(), 0}};
    seen.insert(loss.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            detail::Node* parent = node->parents[next++].get();
            if (parent->requires_grad && seen.insert(parent).second) stack.emplace_back(parent, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    for (auto* node : order) {
        if (node->backward) node->grad.assign(node->value.size(), 0.0);
    }
    loss.node()->grad_buffer()[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if ((*it)->backward) (*it)->backward(**it);
    }
}

}  // namespace fcvae::nn
