#include "fcvae/nn/optim.hpp"

#include <cmath>

#include "fcvae/errors.hpp"

namespace fcvae::nn {

Tensor& ParameterStore::add(const std::string& name, Tensor value) {
    if (!value.defined()) throw UsageError("parameter " + name + " is undefined");
    if (params_.count(name)) throw UsageError("duplicate parameter name " + name);
    value.set_requires_grad(true);
    return params_.emplace(name, std::move(value)).first->second;
}

const Tensor& ParameterStore::at(const std::string& name) const {
    const auto it = params_.find(name);
    if (it == params_.end()) throw UsageError("unknown parameter " + name);
    return it->second;
}

Tensor& ParameterStore::at(const std::string& name) {
    const auto it = params_.find(name);
    if (it == params_.end()) throw UsageError("unknown parameter " + name);
    return it->second;
}

std::size_t ParameterStore::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : params_) n += t.numel();
    return n;
}

std::vector<std::string> ParameterStore::names() const {
    std::vector<std::string> out;
    out.reserve(params_.size());
    for (const auto& [name, t] : params_) out.push_back(name);
    return out;
}

void ParameterStore::zero_grad() {
    for (auto& [name, t] : params_) t.zero_grad();
}

ParameterStore ParameterStore::clone() const {
    ParameterStore out;
    for (const auto& [name, t] : params_) out.add(name, t.detach());
    return out;
}

void Adam::step(ParameterStore& params) {
    for (const auto& [name, p] : params) {
        if (!p.has_grad()) throw UsageError("adam: parameter " + name + " has no gradient");
    }
    ++t_;
    const auto t = static_cast<double>(t_);
    const double correction1 = 1.0 - std::pow(options_.beta1, t);
    const double correction2 = 1.0 - std::pow(options_.beta2, t);
    for (auto& [name, p] : params) {
        auto& st = state_[name];
        if (st.m.empty()) {
            st.m.assign(p.numel(), 0.0);
            st.v.assign(p.numel(), 0.0);
        }
        auto values = p.mutable_data();
        const auto grad = p.grad();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double g = grad[i];
            st.m[i] = options_.beta1 * st.m[i] + (1.0 - options_.beta1) * g;
            st.v[i] = options_.beta2 * st.v[i] + (1.0 - options_.beta2) * g * g;
            const double m_hat = st.m[i] / correction1;
            const double v_hat = st.v[i] / correction2;
            values[i] -= options_.lr * m_hat / (std::sqrt(v_hat) + options_.eps);
        }
    }
}

}  // namespace fcvae::nn
