#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fcvae/data.hpp"
#include "fcvae/model.hpp"
#include "fcvae/model_io.hpp"

namespace fcvae {

struct DetectorConfig {
    std::size_t mcmc_steps = 10;     // M
    std::size_t score_samples = 32;  // L
    std::uint64_t seed = 0;
    std::size_t batch_size = 512;

    void validate() const;
};

/// Per-timestamp anomaly scores; undefined before the first full window.
struct ScoreSeries {
    std::string curve_id;
    std::vector<std::int64_t> timestamps;
    std::vector<std::optional<double>> scores;
    std::vector<int> labels;

    std::size_t size() const noexcept { return scores.size(); }
    std::size_t defined_count() const;
};

/// Replaces the last point of every window by iterated encode/sample/decode
/// refinement, starting from zero. Other positions are never touched.
nn::Tensor mcmc_impute(const FcvaeModel& model, const nn::Tensor& windows, std::size_t steps,
                       nn::NoiseSource& noise);
std::vector<double> mcmc_impute(const FcvaeModel& model, std::span<const double> window, std::size_t steps,
                                nn::NoiseSource& noise);

/// Negative mean log-likelihood of each window's observed last point under
/// `score_samples` decodes of the imputed window. Higher is more anomalous.
std::vector<double> anomaly_scores(const FcvaeModel& model, const nn::Tensor& windows, const DetectorConfig& config,
                                   nn::NoiseSource& noise);
double anomaly_score(const FcvaeModel& model, std::span<const double> window, const DetectorConfig& config,
                     nn::NoiseSource& noise);

/// Scores every window ending at index >= W-1 of a preprocessed series. Each
/// window draws from its own stream seeded by (seed, end index), so a score
/// does not depend on batching or on later points.
ScoreSeries score_series(const data::TimeSeries& ts, const FcvaeModel& model, const DetectorConfig& config);

/// Fills gaps (without reading labels) and applies the training statistics of
/// the matching curve, or the series' own statistics when the curve is unknown.
data::TimeSeries prepare_for_scoring(const data::TimeSeries& raw, const ModelBundle& bundle);

/// `timestamp,score,label` with an empty score where undefined.
void write_scores_csv(const ScoreSeries& scores, const std::filesystem::path& path);
ScoreSeries load_scores_csv(const std::filesystem::path& path);
/// All `*.csv` score files in a directory, sorted by curve id.
std::vector<ScoreSeries> load_scores_dir(const std::filesystem::path& dir);

}  // namespace fcvae
