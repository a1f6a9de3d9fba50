#pragma once

#include <map>
#include <string>
#include <vector>

#include "fcvae/nn/tensor.hpp"

namespace fcvae::nn {

/// Named trainable tensors, iterated in sorted-name order.
class ParameterStore {
public:
    using Map = std::map<std::string, Tensor>;

    /// Registers `value` under `name` and marks it trainable.
    Tensor& add(const std::string& name, Tensor value);
    bool contains(const std::string& name) const { return params_.count(name) != 0; }
    const Tensor& at(const std::string& name) const;
    Tensor& at(const std::string& name);

    std::size_t size() const noexcept { return params_.size(); }
    std::size_t parameter_count() const;
    std::vector<std::string> names() const;

    Map::const_iterator begin() const { return params_.begin(); }
    Map::const_iterator end() const { return params_.end(); }
    Map::iterator begin() { return params_.begin(); }
    Map::iterator end() { return params_.end(); }

    void zero_grad();
    /// Deep copy with fresh leaves and no gradients.
    ParameterStore clone() const;

private:
    Map params_;
};

struct AdamOptions {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Bias-corrected adaptive-moment optimiser. Moment estimates live here and
/// persist between steps.
class Adam {
public:
    explicit Adam(AdamOptions options = {}) : options_(options) {}

    /// Applies one update to every parameter; all of them must carry a gradient.
    void step(ParameterStore& params);

    std::size_t steps() const noexcept { return t_; }
    const AdamOptions& options() const noexcept { return options_; }

private:
    struct Moments {
        std::vector<double> m;
        std::vector<double> v;
    };

    AdamOptions options_;
    std::size_t t_ = 0;
    std::map<std::string, Moments> state_;
};

}  // namespace fcvae::nn
