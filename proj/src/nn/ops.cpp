#include "fcvae/nn/ops.hpp"

#include <Eigen/Core>
#include <cmath>
#include <numbers>

#include "fcvae/errors.hpp"

namespace fcvae::nn {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MutMap = Eigen::Map<RowMatrix>;

MutMap as_matrix(std::vector<double>& v, std::size_t rows, std::size_t cols) {
    return MutMap(v.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

void require_2d(const Tensor& t, const char* op) {
    if (t.shape().size() != 2) throw ShapeError(std::string(op) + " expects a matrix, got " + shape_string(t.shape()));
}

void require_same(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
}

void accumulate(detail::Node& parent, const std::vector<double>& g) {
    if (!parent.requires_grad) return;
    auto& pg = parent.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) pg[i] += g[i];
}

/// Elementwise unary op with derivative expressed from (input, output).
template <class F, class D>
Tensor unary(const Tensor& x, F f, D df) {
    const auto in = x.data();
    std::vector<double> out(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
    return Tensor::from_op(x.shape(), std::move(out), {x}, [df](detail::Node& self) {
        auto& p = *self.parents[0];
        auto& pg = p.grad_buffer();
        for (std::size_t i = 0; i < pg.size(); ++i) pg[i] += self.grad[i] * df(p.value[i], self.value[i]);
    });
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_2d(a, "matmul");
    require_2d(b, "matmul");
    const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    if (b.shape()[0] != k)
        throw ShapeError("matmul: cannot multiply " + shape_string(a.shape()) + " by " + shape_string(b.shape()));
    std::vector<double> out(m * n);
    as_matrix(out, m, n).noalias() = as_matrix(a.node()->value, m, k) * as_matrix(b.node()->value, k, n);
    return Tensor::from_op({m, n}, std::move(out), {a, b}, [m, k, n](detail::Node& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        const auto g = as_matrix(self.grad, m, n);
        if (pa.requires_grad) as_matrix(pa.grad_buffer(), m, k).noalias() += g * as_matrix(pb.value, k, n).transpose();
        if (pb.requires_grad) as_matrix(pb.grad_buffer(), k, n).noalias() += as_matrix(pa.value, m, k).transpose() * g;
    });
}

Tensor dense(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    require_2d(x, "dense");
    require_2d(weight, "dense");
    const std::size_t m = x.shape()[0], k = x.shape()[1], n = weight.shape()[1];
    if (weight.shape()[0] != k)
        throw ShapeError("dense: input " + shape_string(x.shape()) + " does not match weight " +
                         shape_string(weight.shape()));
    if (bias.numel() != n)
        throw ShapeError("dense: bias " + shape_string(bias.shape()) + " does not match weight " +
                         shape_string(weight.shape()));
    std::vector<double> out(m * n);
    auto o = as_matrix(out, m, n);
    o.noalias() = as_matrix(x.node()->value, m, k) * as_matrix(weight.node()->value, k, n);
    o.rowwise() += as_matrix(bias.node()->value, 1, n).row(0);
    return Tensor::from_op({m, n}, std::move(out), {x, weight, bias}, [m, k, n](detail::Node& self) {
        auto& px = *self.parents[0];
        auto& pw = *self.parents[1];
        auto& pb = *self.parents[2];
        const auto g = as_matrix(self.grad, m, n);
        if (px.requires_grad) as_matrix(px.grad_buffer(), m, k).noalias() += g * as_matrix(pw.value, k, n).transpose();
        if (pw.requires_grad) as_matrix(pw.grad_buffer(), k, n).noalias() += as_matrix(px.value, m, k).transpose() * g;
        if (pb.requires_grad) as_matrix(pb.grad_buffer(), 1, n) += g.colwise().sum();
    });
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same(a, b, "add");
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
    return Tensor::from_op(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
        accumulate(*self.parents[0], self.grad);
        accumulate(*self.parents[1], self.grad);
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same(a, b, "sub");
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
    return Tensor::from_op(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
        accumulate(*self.parents[0], self.grad);
        auto& pb = *self.parents[1];
        if (!pb.requires_grad) return;
        auto& g = pb.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same(a, b, "mul");
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
    return Tensor::from_op(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        if (pa.requires_grad) {
            auto& g = pa.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb.value[i];
        }
        if (pb.requires_grad) {
            auto& g = pb.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa.value[i];
        }
    });
}

Tensor scale(const Tensor& a, double factor) {
    return unary(a, [factor](double v) { return v * factor; }, [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double value) {
    return unary(a, [value](double v) { return v + value; }, [](double, double) { return 1.0; });
}

Tensor relu(const Tensor& x) {
    return unary(x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double in, double) { return in > 0.0 ? 1.0 : 0.0; });
}

Tensor tanh(const Tensor& x) {
    return unary(x, [](double v) { return std::tanh(v); }, [](double, double out) { return 1.0 - out * out; });
}

Tensor softplus(const Tensor& x) {
    return unary(
        x, [](double v) { return v > 30.0 ? v : std::log1p(std::exp(v)); },
        [](double in, double) { return 1.0 / (1.0 + std::exp(-in)); });
}

Tensor exp(const Tensor& x) {
    return unary(x, [](double v) { return std::exp(v); }, [](double, double out) { return out; });
}

Tensor log(const Tensor& x) {
    return unary(x, [](double v) { return std::log(v); }, [](double in, double) { return 1.0 / in; });
}

Tensor square(const Tensor& x) {
    return unary(x, [](double v) { return v * v; }, [](double in, double) { return 2.0 * in; });
}

Tensor sum(const Tensor& x) {
    double total = 0.0;
    for (double v : x.data()) total += v;
    return Tensor::from_op({}, {total}, {x}, [](detail::Node& self) {
        auto& p = *self.parents[0];
        auto& g = p.grad_buffer();
        for (auto& v : g) v += self.grad[0];
    });
}

Tensor mean(const Tensor& x) {
    if (x.numel() == 0) throw ShapeError("mean of an empty tensor");
    return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor row_sum(const Tensor& x) {
    require_2d(x, "row_sum");
    const std::size_t m = x.shape()[0], n = x.shape()[1];
    std::vector<double> out(m, 0.0);
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) out[r] += x.data()[r * n + c];
    return Tensor::from_op({m, 1}, std::move(out), {x}, [m, n](detail::Node& self) {
        auto& g = self.parents[0]->grad_buffer();
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c = 0; c < n; ++c) g[r * n + c] += self.grad[r];
    });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ShapeError("concat_cols of nothing");
    const std::size_t m = parts.front().rows();
    std::vector<std::size_t> widths;
    std::size_t total = 0;
    for (const auto& p : parts) {
        require_2d(p, "concat_cols");
        if (p.rows() != m)
            throw ShapeError("concat_cols: row mismatch " + shape_string(parts.front().shape()) + " vs " +
                             shape_string(p.shape()));
        widths.push_back(p.cols());
        total += p.cols();
    }
    std::vector<double> out(m * total);
    for (std::size_t r = 0; r < m; ++r) {
        std::size_t offset = 0;
        for (std::size_t i = 0; i < parts.size(); ++i) {
            const auto src = parts[i].data().subspan(r * widths[i], widths[i]);
            std::copy(src.begin(), src.end(), out.begin() + static_cast<std::ptrdiff_t>(r * total + offset));
            offset += widths[i];
        }
    }
    return Tensor::from_op({m, total}, std::move(out), parts, [m, total, widths](detail::Node& self) {
        std::size_t offset = 0;
        for (std::size_t i = 0; i < widths.size(); ++i) {
            auto& p = *self.parents[i];
            if (p.requires_grad) {
                auto& g = p.grad_buffer();
                for (std::size_t r = 0; r < m; ++r)
                    for (std::size_t c = 0; c < widths[i]; ++c) g[r * widths[i] + c] += self.grad[r * total + offset + c];
            }
            offset += widths[i];
        }
    });
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows) {
    require_2d(x, "gather_rows");
    const std::size_t n = x.cols();
    std::vector<double> out(rows.size() * n);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= x.rows()) throw ShapeError("gather_rows: row index out of range for " + shape_string(x.shape()));
        std::copy_n(x.data().begin() + static_cast<std::ptrdiff_t>(rows[i] * n), n,
                    out.begin() + static_cast<std::ptrdiff_t>(i * n));
    }
    std::vector<std::size_t> idx(rows.begin(), rows.end());
    return Tensor::from_op({rows.size(), n}, std::move(out), {x}, [idx = std::move(idx), n](detail::Node& self) {
        auto& g = self.parents[0]->grad_buffer();
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t c = 0; c < n; ++c) g[idx[i] * n + c] += self.grad[i * n + c];
    });
}

Tensor softmax(const Tensor& x) {
    require_2d(x, "softmax");
    const std::size_t m = x.shape()[0], n = x.shape()[1];
    if (n == 0) throw ShapeError("softmax over zero columns");
    std::vector<double> out(m * n);
    for (std::size_t r = 0; r < m; ++r) {
        const auto row = x.data().subspan(r * n, n);
        const double top = *std::max_element(row.begin(), row.end());
        double z = 0.0;
        for (std::size_t c = 0; c < n; ++c) z += out[r * n + c] = std::exp(row[c] - top);
        for (std::size_t c = 0; c < n; ++c) out[r * n + c] /= z;
    }
    return Tensor::from_op({m, n}, std::move(out), {x}, [m, n](detail::Node& self) {
        auto& g = self.parents[0]->grad_buffer();
        for (std::size_t r = 0; r < m; ++r) {
            double dot = 0.0;
            for (std::size_t c = 0; c < n; ++c) dot += self.grad[r * n + c] * self.value[r * n + c];
            for (std::size_t c = 0; c < n; ++c) g[r * n + c] += self.value[r * n + c] * (self.grad[r * n + c] - dot);
        }
    });
}

Tensor group_dot(const Tensor& q, const Tensor& keys) {
    require_2d(q, "group_dot");
    require_2d(keys, "group_dot");
    const std::size_t b = q.shape()[0], d = q.shape()[1];
    if (keys.shape()[1] != d || b == 0 || keys.shape()[0] % b != 0)
        throw ShapeError("group_dot: query " + shape_string(q.shape()) + " incompatible with keys " +
                         shape_string(keys.shape()));
    const std::size_t m = keys.shape()[0] / b;
    std::vector<double> out(b * m, 0.0);
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            double acc = 0.0;
            for (std::size_t c = 0; c < d; ++c) acc += q.data()[i * d + c] * keys.data()[(i * m + j) * d + c];
            out[i * m + j] = acc;
        }
    return Tensor::from_op({b, m}, std::move(out), {q, keys}, [b, m, d](detail::Node& self) {
        auto& pq = *self.parents[0];
        auto& pk = *self.parents[1];
        for (std::size_t i = 0; i < b; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                const double g = self.grad[i * m + j];
                if (pq.requires_grad) {
                    auto& gq = pq.grad_buffer();
                    for (std::size_t c = 0; c < d; ++c) gq[i * d + c] += g * pk.value[(i * m + j) * d + c];
                }
                if (pk.requires_grad) {
                    auto& gk = pk.grad_buffer();
                    for (std::size_t c = 0; c < d; ++c) gk[(i * m + j) * d + c] += g * pq.value[i * d + c];
                }
            }
    });
}

Tensor group_weighted_sum(const Tensor& weights, const Tensor& values) {
    require_2d(weights, "group_weighted_sum");
    require_2d(values, "group_weighted_sum");
    const std::size_t b = weights.shape()[0], m = weights.shape()[1], d = values.shape()[1];
    if (values.shape()[0] != b * m)
        throw ShapeError("group_weighted_sum: weights " + shape_string(weights.shape()) + " incompatible with values " +
                         shape_string(values.shape()));
    std::vector<double> out(b * d, 0.0);
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            const double w = weights.data()[i * m + j];
            for (std::size_t c = 0; c < d; ++c) out[i * d + c] += w * values.data()[(i * m + j) * d + c];
        }
    return Tensor::from_op({b, d}, std::move(out), {weights, values}, [b, m, d](detail::Node& self) {
        auto& pw = *self.parents[0];
        auto& pv = *self.parents[1];
        for (std::size_t i = 0; i < b; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                if (pw.requires_grad) {
                    double acc = 0.0;
                    for (std::size_t c = 0; c < d; ++c) acc += self.grad[i * d + c] * pv.value[(i * m + j) * d + c];
                    pw.grad_buffer()[i * m + j] += acc;
                }
                if (pv.requires_grad) {
                    auto& gv = pv.grad_buffer();
                    const double w = pw.value[i * m + j];
                    for (std::size_t c = 0; c < d; ++c) gv[(i * m + j) * d + c] += w * self.grad[i * d + c];
                }
            }
    });
}

Tensor dropout(const Tensor& x, double p, bool training, NoiseSource& noise) {
    if (!(p >= 0.0 && p < 1.0)) throw UsageError("dropout probability must lie in [0, 1)");
    if (!training || p == 0.0) return x;
    auto mask = noise.keep_mask(x.rows(), x.cols(), 1.0 - p);
    const double inv_keep = 1.0 / (1.0 - p);
    for (auto& v : mask) v *= inv_keep;
    return mul(x, Tensor(x.shape(), std::move(mask)));
}

Tensor gaussian_sample(const Tensor& mu, const Tensor& sigma, const Tensor& eps) {
    require_same(mu, sigma, "gaussian_sample");
    require_same(mu, eps, "gaussian_sample");
    for (double s : sigma.data()) {
        if (!(s > 0.0)) throw NumericError("gaussian_sample: non-positive standard deviation");
    }
    return add(mu, mul(sigma, eps));
}

Tensor gaussian_sample(const Tensor& mu, const Tensor& sigma, NoiseSource& noise) {
    return gaussian_sample(mu, sigma, Tensor(mu.shape(), noise.normal(mu.rows(), mu.cols())));
}

Tensor gaussian_log_prob(const Tensor& x, const Tensor& mu, const Tensor& sigma) {
    require_same(x, mu, "gaussian_log_prob");
    require_same(x, sigma, "gaussian_log_prob");
    constexpr double kHalfLog2Pi = 0.91893853320467274178;
    const std::size_t n = x.numel();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = sigma.data()[i];
        const double diff = x.data()[i] - mu.data()[i];
        out[i] = -kHalfLog2Pi - std::log(s) - diff * diff / (2.0 * s * s);
    }
    return Tensor::from_op(x.shape(), std::move(out), {x, mu, sigma}, [n](detail::Node& self) {
        auto& px = *self.parents[0];
        auto& pm = *self.parents[1];
        auto& ps = *self.parents[2];
        for (std::size_t i = 0; i < n; ++i) {
            const double g = self.grad[i];
            const double s = ps.value[i];
            const double diff = px.value[i] - pm.value[i];
            const double dmu = diff / (s * s);
            if (px.requires_grad) px.grad_buffer()[i] -= g * dmu;
            if (pm.requires_grad) pm.grad_buffer()[i] += g * dmu;
            if (ps.requires_grad) ps.grad_buffer()[i] += g * (diff * diff / (s * s * s) - 1.0 / s);
        }
    });
}

Tensor standard_normal_log_prob(const Tensor& x) {
    constexpr double kHalfLog2Pi = 0.91893853320467274178;
    return unary(x, [](double v) { return -kHalfLog2Pi - 0.5 * v * v; }, [](double in, double) { return -in; });
}

}  // namespace fcvae::nn
