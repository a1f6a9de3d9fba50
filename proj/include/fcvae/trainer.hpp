#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "fcvae/data.hpp"
#include "fcvae/model.hpp"

namespace fcvae {

struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t batch_size = 256;
    double lr = 1e-3;
    double missing_rate = 0.05;  // lambda
    double augment_rate = 0.1;
    std::uint64_t seed = 0;
    double valid_fraction = 0.0;
    std::size_t stride = 1;
    ElboKind elbo = ElboKind::masked;
    /// Off reproduces the unsupervised setting: labels are zeroed before training.
    bool use_labels = false;

    void validate() const;
};

struct TrainHistory {
    std::vector<double> train_loss;  // per-epoch mean
    std::vector<double> valid_loss;  // empty without a validation split
    std::size_t windows_per_epoch = 0;
};

struct TrainResult {
    FcvaeModel model;
    TrainHistory history;
    std::map<std::string, data::Normalization> normalization;
};

/// Filled and standardised copy of a training curve.
struct PreparedCurve {
    data::TimeSeries series;
    data::Normalization normalization;
};

/// Fill then standardise; labels are zeroed first unless `use_labels`.
PreparedCurve prepare_training_curve(const data::TimeSeries& raw, bool use_labels);

/// `epoch` counts from 1.
using EpochCallback = std::function<void(std::size_t epoch, double train_loss, double valid_loss)>;

/// Minimises the bound over all windows of all curves with Adam. Each epoch
/// augments, then injects missing points, then shuffles; everything is derived
/// from the seed.
TrainResult train(const std::vector<data::TimeSeries>& dataset, const FcvaeConfig& model_config,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

/// `epoch,train_loss,valid_loss`.
void write_history_csv(const TrainHistory& history, const std::filesystem::path& path);

}  // namespace fcvae
