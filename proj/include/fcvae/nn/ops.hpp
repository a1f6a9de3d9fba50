#pragma once

#include <span>
#include <vector>

#include "fcvae/nn/noise.hpp"
#include "fcvae/nn/tensor.hpp"

namespace fcvae::nn {

// Shapes are [rows x cols] unless noted; a bias is [cols].

Tensor matmul(const Tensor& a, const Tensor& b);
/// x * weight + bias.
Tensor dense(const Tensor& x, const Tensor& weight, const Tensor& bias);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double value);

Tensor relu(const Tensor& x);
Tensor tanh(const Tensor& x);
/// log(1 + exp(x)), evaluated as x above 30.
Tensor softplus(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor square(const Tensor& x);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// [rows x cols] -> [rows x 1].
Tensor row_sum(const Tensor& x);

/// Horizontal concatenation of tensors with equal row counts.
Tensor concat_cols(const std::vector<Tensor>& parts);
/// Rows of `x` picked by index (repeats allowed).
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows);

/// Row-wise softmax.
Tensor softmax(const Tensor& x);

/// q [B x d], keys [B*m x d] -> [B x m] with out[b][j] = <q_b, keys_{b*m+j}>.
Tensor group_dot(const Tensor& q, const Tensor& keys);
/// weights [B x m], values [B*m x d] -> [B x d] with out[b] = sum_j w[b][j] values_{b*m+j}.
Tensor group_weighted_sum(const Tensor& weights, const Tensor& values);

/// Inverted dropout; identity when `training` is false or p == 0.
Tensor dropout(const Tensor& x, double p, bool training, NoiseSource& noise);

/// mu + sigma * eps with eps drawn from `noise`; eps is treated as a constant.
Tensor gaussian_sample(const Tensor& mu, const Tensor& sigma, NoiseSource& noise);
/// Same with caller-supplied eps.
Tensor gaussian_sample(const Tensor& mu, const Tensor& sigma, const Tensor& eps);

/// Elementwise log N(x; mu, sigma^2); differentiable in all three arguments.
Tensor gaussian_log_prob(const Tensor& x, const Tensor& mu, const Tensor& sigma);
/// Elementwise log N(x; 0, 1).
Tensor standard_normal_log_prob(const Tensor& x);

}  // namespace fcvae::nn
