#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fcvae/nn/noise.hpp"
#include "fcvae/nn/optim.hpp"
#include "fcvae/nn/tensor.hpp"

namespace fcvae {

/// How the local frequency module pools its small-window embeddings.
enum class LfmMode { attention, latest, average_pooling };

std::string to_string(LfmMode mode);
LfmMode parse_lfm_mode(const std::string& text);

struct FcvaeConfig {
    std::size_t window = 120;        // W
    std::size_t small_window = 30;   // k
    std::size_t small_stride = 10;   // s
    std::size_t embed_dim = 32;      // d, shared by both condition modules
    std::size_t latent_dim = 8;      // d_z
    std::vector<std::size_t> hidden{100, 100};
    double dropout = 0.1;
    LfmMode lfm_mode = LfmMode::attention;
    bool use_gfm = true;
    bool use_lfm = true;
    bool mask_last = true;
    std::size_t mc_samples = 1;

    std::size_t small_window_count() const;
    /// Throws ConfigError naming the offending key.
    void validate() const;

    bool operator==(const FcvaeConfig&) const = default;
};

/// Condition c = (f_local, f_global); each [B x d].
struct Condition {
    nn::Tensor local;
    nn::Tensor global;
};

/// Diagonal Gaussian; mean and std have the same shape.
struct GaussianParams {
    nn::Tensor mean;
    nn::Tensor std;
};

/// Single-window view of a condition.
struct ConditionVector {
    std::vector<double> f_global;
    std::vector<double> f_local;
};

/// Which bound the loss uses.
enum class ElboKind {
    masked,  // alpha-weighted reconstruction, prior scaled by beta = mean(alpha)
    plain,   // every point counts, beta = 1
};

/// Lower bound on std produced by the softplus heads.
inline constexpr double kStdFloor = 1e-4;

/// Frequency-conditioned VAE. Batched methods take windows as a [B x W]
/// tensor; windows are data, so no gradient flows into them.
class FcvaeModel {
public:
    /// Fresh Glorot-initialised parameters.
    FcvaeModel(FcvaeConfig config, std::uint64_t seed);
    /// Wraps existing parameters; names and shapes must match the config.
    FcvaeModel(FcvaeConfig config, nn::ParameterStore params);

    const FcvaeConfig& config() const noexcept { return config_; }
    nn::ParameterStore& params() noexcept { return params_; }
    const nn::ParameterStore& params() const noexcept { return params_; }

    /// Global condition from an already-masked window batch.
    nn::Tensor gfm(const nn::Tensor& masked, bool training, nn::NoiseSource& noise) const;
    /// Local condition from an already-masked window batch. When `weights` is
    /// given and the mode is attention, it receives the [B x n-1] attention weights.
    nn::Tensor lfm(const nn::Tensor& masked, bool training, nn::NoiseSource& noise,
                   nn::Tensor* weights = nullptr) const;
    /// Both conditions; masks the last point first when the config says so.
    Condition condition(const nn::Tensor& windows, bool training, nn::NoiseSource& noise) const;

    GaussianParams encode(const nn::Tensor& windows, const Condition& c) const;
    GaussianParams decode(const nn::Tensor& z, const Condition& c) const;

    /// Per-window Monte-Carlo estimate of the bound, [B x 1].
    nn::Tensor bound(const nn::Tensor& windows, const nn::Tensor& alpha, ElboKind kind, bool training,
                     nn::NoiseSource& noise) const;
    /// Negated mean bound over the batch; the training objective.
    nn::Tensor loss(const nn::Tensor& windows, const nn::Tensor& alpha, ElboKind kind, bool training,
                    nn::NoiseSource& noise) const;

    // Single-window conveniences (evaluation mode unless stated).
    ConditionVector condition(std::span<const double> window) const;
    std::vector<double> attention_weights(std::span<const double> window) const;
    /// Negated masked bound of one window.
    double cm_elbo(std::span<const double> window, std::span<const double> alpha, nn::NoiseSource& noise,
                   bool training = false) const;

    /// Amplitude features of the whole window, [B x floor(W/2)+1].
    static nn::Tensor global_spectrum(const nn::Tensor& masked);
    /// Amplitude features of every small window, [B*n x floor(k/2)+1], grouped by window.
    nn::Tensor local_spectrum(const nn::Tensor& masked) const;

private:
    nn::Tensor mlp(const std::string& prefix, const nn::Tensor& input) const;
    GaussianParams heads(const std::string& prefix, const nn::Tensor& hidden) const;
    void check_params() const;

    FcvaeConfig config_;
    nn::ParameterStore params_;
};

/// Window batch tensor from row-major values.
nn::Tensor window_tensor(std::span<const double> values, std::size_t window);

/// Copy of a [B x W] batch with the final column zeroed.
nn::Tensor mask_last_column(const nn::Tensor& windows);

}  // namespace fcvae
