#include "fcvae/model.hpp"

#include <cmath>

#include "fcvae/errors.hpp"
#include "fcvae/nn/ops.hpp"
#include "fcvae/rng.hpp"
#include "fcvae/spectral.hpp"

namespace fcvae {

using nn::Tensor;

namespace {

struct ParamSpec {
    std::string name;
    nn::Shape shape;
};

void add_dense(std::vector<ParamSpec>& out, const std::string& prefix, std::size_t in, std::size_t width) {
    out.push_back({prefix + ".weight", {in, width}});
    out.push_back({prefix + ".bias", {width}});
}

void add_mlp(std::vector<ParamSpec>& out, const std::string& prefix, std::size_t in,
             const std::vector<std::size_t>& hidden, std::size_t head) {
    std::size_t width = in;
    for (std::size_t i = 0; i < hidden.size(); ++i) {
        add_dense(out, prefix + ".hidden" + std::to_string(i), width, hidden[i]);
        width = hidden[i];
    }
    add_dense(out, prefix + ".mean", width, head);
    add_dense(out, prefix + ".std", width, head);
}

std::vector<ParamSpec> param_specs(const FcvaeConfig& c) {
    std::vector<ParamSpec> out;
    if (c.use_gfm) add_dense(out, "gfm.dense", spectral::amplitude_bins(c.window), c.embed_dim);
    if (c.use_lfm) {
        add_dense(out, "lfm.embed", spectral::amplitude_bins(c.small_window), c.embed_dim);
        add_dense(out, "lfm.ffn", c.embed_dim, c.embed_dim);
    }
    add_mlp(out, "encoder", c.window + 2 * c.embed_dim, c.hidden, c.latent_dim);
    add_mlp(out, "decoder", c.latent_dim + 2 * c.embed_dim, c.hidden, c.window);
    return out;
}

Tensor apply_dense(const nn::ParameterStore& p, const std::string& prefix, const Tensor& x) {
    return nn::dense(x, p.at(prefix + ".weight"), p.at(prefix + ".bias"));
}

}  // namespace

std::string to_string(LfmMode mode) {
    switch (mode) {
        case LfmMode::attention: return "attention";
        case LfmMode::latest: return "latest";
        case LfmMode::average_pooling: return "average_pooling";
    }
    return "attention";
}

LfmMode parse_lfm_mode(const std::string& text) {
    if (text == "attention") return LfmMode::attention;
    if (text == "latest") return LfmMode::latest;
    if (text == "average_pooling") return LfmMode::average_pooling;
    throw ConfigError("lfm_mode", "expected attention, latest or average_pooling, got '" + text + "'");
}

std::size_t FcvaeConfig::small_window_count() const {
    return spectral::small_window_count(window, small_window, small_stride);
}

void FcvaeConfig::validate() const {
    if (window < 8) throw ConfigError("window", "must be at least 8");
    if (small_window < 2 || small_window > window) throw ConfigError("small_window", "must satisfy 2 <= k <= window");
    if (small_stride == 0) throw ConfigError("small_stride", "must be positive");
    if ((window - small_window) % small_stride != 0)
        throw ConfigError("small_stride", "window - small_window must be divisible by small_stride");
    if (embed_dim == 0) throw ConfigError("embed_dim", "must be at least 1");
    if (latent_dim == 0) throw ConfigError("latent_dim", "must be at least 1");
    for (auto h : hidden) {
        if (h == 0) throw ConfigError("hidden", "layer widths must be positive");
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout", "must lie in [0, 1)");
    if (mc_samples == 0) throw ConfigError("mc_samples", "must be at least 1");
    if (use_lfm && lfm_mode == LfmMode::attention && small_window_count() < 2)
        throw ConfigError("small_window", "attention needs at least two small windows (one query, one key)");
}

FcvaeModel::FcvaeModel(FcvaeConfig config, std::uint64_t seed) : config_(std::move(config)) {
    config_.validate();
    Rng rng(seed);
    for (const auto& spec : param_specs(config_)) {
        std::vector<double> data(nn::shape_numel(spec.shape), 0.0);
        if (spec.shape.size() == 2) {
            const double limit = std::sqrt(6.0 / static_cast<double>(spec.shape[0] + spec.shape[1]));
            for (auto& v : data) v = rng.uniform(-limit, limit);
        }
        params_.add(spec.name, Tensor(spec.shape, std::move(data)));
    }
}

FcvaeModel::FcvaeModel(FcvaeConfig config, nn::ParameterStore params)
    : config_(std::move(config)), params_(std::move(params)) {
    config_.validate();
    check_params();
}

void FcvaeModel::check_params() const {
    const auto specs = param_specs(config_);
    if (specs.size() != params_.size())
        throw ConfigError("parameters", "expected " + std::to_string(specs.size()) + " tensors, found " +
                                            std::to_string(params_.size()));
    for (const auto& spec : specs) {
        if (!params_.contains(spec.name)) throw ConfigError("parameters", "missing tensor " + spec.name);
        const auto& shape = params_.at(spec.name).shape();
        if (shape != spec.shape)
            throw ConfigError("parameters", spec.name + " has shape " + nn::shape_string(shape) + ", expected " +
                                                nn::shape_string(spec.shape));
    }
}

Tensor window_tensor(std::span<const double> values, std::size_t window) {
    if (window == 0 || values.size() % window != 0) throw ShapeError("window values do not divide into rows");
    return Tensor({values.size() / window, window}, {values.begin(), values.end()});
}

Tensor mask_last_column(const Tensor& windows) {
    auto data = windows.to_vector();
    const std::size_t w = windows.cols();
    for (std::size_t r = 0; r < windows.rows(); ++r) data[r * w + w - 1] = 0.0;
    return Tensor(windows.shape(), std::move(data));
}

Tensor FcvaeModel::global_spectrum(const Tensor& masked) {
    const std::size_t b = masked.rows(), w = masked.cols();
    const std::size_t bins = spectral::amplitude_bins(w);
    std::vector<double> out(b * bins);
    for (std::size_t r = 0; r < b; ++r) {
        spectral::amplitude_features_into(masked.data().subspan(r * w, w), std::span(out).subspan(r * bins, bins));
    }
    return Tensor({b, bins}, std::move(out));
}

Tensor FcvaeModel::local_spectrum(const Tensor& masked) const {
    const std::size_t b = masked.rows(), w = masked.cols();
    const std::size_t k = config_.small_window, s = config_.small_stride;
    const std::size_t n = spectral::small_window_count(w, k, s);
    const std::size_t bins = spectral::amplitude_bins(k);
    std::vector<double> out(b * n * bins);
    for (std::size_t r = 0; r < b; ++r) {
        const auto row = masked.data().subspan(r * w, w);
        for (std::size_t j = 0; j < n; ++j) {
            spectral::amplitude_features_into(row.subspan(j * s, k),
                                              std::span(out).subspan((r * n + j) * bins, bins));
        }
    }
    return Tensor({b * n, bins}, std::move(out));
}

Tensor FcvaeModel::gfm(const Tensor& masked, bool training, nn::NoiseSource& noise) const {
    const auto embedded = apply_dense(params_, "gfm.dense", global_spectrum(masked));
    return nn::dropout(embedded, config_.dropout, training, noise);
}

Tensor FcvaeModel::lfm(const Tensor& masked, bool training, nn::NoiseSource& noise, Tensor* weights) const {
    const std::size_t b = masked.rows();
    const std::size_t n = config_.small_window_count();
    const auto embedded = apply_dense(params_, "lfm.embed", local_spectrum(masked));  // [B*n x d]

    std::vector<std::size_t> query_rows(b);
    for (std::size_t r = 0; r < b; ++r) query_rows[r] = r * n + n - 1;
    const auto query = nn::gather_rows(embedded, query_rows);

    Tensor context;
    switch (config_.lfm_mode) {
        case LfmMode::attention: {
            // The latest small window is the query; the others are keys and values.
            std::vector<std::size_t> key_rows;
            key_rows.reserve(b * (n - 1));
            for (std::size_t r = 0; r < b; ++r)
                for (std::size_t j = 0; j + 1 < n; ++j) key_rows.push_back(r * n + j);
            const auto keys = nn::gather_rows(embedded, key_rows);
            const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(config_.embed_dim));
            const auto attn = nn::softmax(nn::scale(nn::group_dot(query, keys), inv_sqrt_d));
            if (weights) *weights = attn;
            context = nn::group_weighted_sum(attn, keys);
            break;
        }
        case LfmMode::latest:
            context = query;
            break;
        case LfmMode::average_pooling:
            context = nn::group_weighted_sum(Tensor::full({b, n}, 1.0 / static_cast<double>(n)), embedded);
            break;
    }
    const auto ffn = nn::tanh(apply_dense(params_, "lfm.ffn", context));
    return nn::dropout(ffn, config_.dropout, training, noise);
}

Condition FcvaeModel::condition(const Tensor& windows, bool training, nn::NoiseSource& noise) const {
    if (windows.cols() != config_.window)
        throw ShapeError("windows have " + std::to_string(windows.cols()) + " columns, model expects " +
                         std::to_string(config_.window));
    const auto source = config_.mask_last ? mask_last_column(windows) : windows;
    const std::size_t b = windows.rows();
    Condition c;
    c.local = config_.use_lfm ? lfm(source, training, noise) : Tensor::zeros({b, config_.embed_dim});
    c.global = config_.use_gfm ? gfm(source, training, noise) : Tensor::zeros({b, config_.embed_dim});
    return c;
}

Tensor FcvaeModel::mlp(const std::string& prefix, const Tensor& input) const {
    Tensor h = input;
    for (std::size_t i = 0; i < config_.hidden.size(); ++i) {
        h = nn::tanh(apply_dense(params_, prefix + ".hidden" + std::to_string(i), h));
    }
    return h;
}

GaussianParams FcvaeModel::heads(const std::string& prefix, const Tensor& hidden) const {
    return {apply_dense(params_, prefix + ".mean", hidden),
            nn::add_scalar(nn::softplus(apply_dense(params_, prefix + ".std", hidden)), kStdFloor)};
}

GaussianParams FcvaeModel::encode(const Tensor& windows, const Condition& c) const {
    return heads("encoder", mlp("encoder", nn::concat_cols({windows, c.local, c.global})));
}

GaussianParams FcvaeModel::decode(const Tensor& z, const Condition& c) const {
    return heads("decoder", mlp("decoder", nn::concat_cols({z, c.local, c.global})));
}

Tensor FcvaeModel::bound(const Tensor& windows, const Tensor& alpha, ElboKind kind, bool training,
                         nn::NoiseSource& noise) const {
    if (alpha.shape() != windows.shape())
        throw ShapeError("alpha " + nn::shape_string(alpha.shape()) + " does not match windows " +
                         nn::shape_string(windows.shape()));
    const std::size_t b = windows.rows(), w = windows.cols();

    // beta = (sum_w alpha_w) / W per window; the plain bound uses alpha = 1, beta = 1.
    Tensor weights = kind == ElboKind::masked ? alpha : Tensor::full({b, w}, 1.0);
    std::vector<double> beta(b, 1.0);
    if (kind == ElboKind::masked) {
        for (std::size_t r = 0; r < b; ++r) {
            double s = 0.0;
            for (std::size_t j = 0; j < w; ++j) s += alpha.at(r, j);
            beta[r] = s / static_cast<double>(w);
        }
    }
    const Tensor beta_t({b, 1}, std::move(beta));

    const auto c = condition(windows, training, noise);
    const auto posterior = encode(windows, c);
    Tensor total;
    for (std::size_t sample = 0; sample < config_.mc_samples; ++sample) {
        const auto z = nn::gaussian_sample(posterior.mean, posterior.std, noise);
        const auto recon = decode(z, c);
        const auto log_px = nn::row_sum(nn::mul(weights, nn::gaussian_log_prob(windows, recon.mean, recon.std)));
        const auto log_pz = nn::mul(beta_t, nn::row_sum(nn::standard_normal_log_prob(z)));
        const auto log_qz = nn::row_sum(nn::gaussian_log_prob(z, posterior.mean, posterior.std));
        const auto term = nn::sub(nn::add(log_px, log_pz), log_qz);
        total = total.defined() ? nn::add(total, term) : term;
    }
    return config_.mc_samples == 1 ? total : nn::scale(total, 1.0 / static_cast<double>(config_.mc_samples));
}

Tensor FcvaeModel::loss(const Tensor& windows, const Tensor& alpha, ElboKind kind, bool training,
                        nn::NoiseSource& noise) const {
    return nn::scale(nn::mean(bound(windows, alpha, kind, training, noise)), -1.0);
}

ConditionVector FcvaeModel::condition(std::span<const double> window) const {
    nn::NoiseSource unused(0);
    const auto c = condition(window_tensor(window, config_.window), false, unused);
    return {c.global.to_vector(), c.local.to_vector()};
}

std::vector<double> FcvaeModel::attention_weights(std::span<const double> window) const {
    if (!config_.use_lfm || config_.lfm_mode != LfmMode::attention)
        throw UsageError("attention weights need the attention LFM");
    nn::NoiseSource unused(0);
    auto x = window_tensor(window, config_.window);
    if (config_.mask_last) x = mask_last_column(x);
    Tensor weights;
    lfm(x, false, unused, &weights);
    return weights.to_vector();
}

double FcvaeModel::cm_elbo(std::span<const double> window, std::span<const double> alpha, nn::NoiseSource& noise,
                           bool training) const {
    return -bound(window_tensor(window, config_.window), window_tensor(alpha, config_.window), ElboKind::masked,
                  training, noise)
                .item();
}

}  // namespace fcvae
