#include "fcvae/detector.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "fcvae/errors.hpp"
#include "fcvae/nn/ops.hpp"
#include "fcvae/rng.hpp"

namespace fcvae {

using nn::Tensor;

namespace {

void set_last_column(std::vector<double>& windows, std::size_t w, const Tensor& source) {
    const std::size_t rows = windows.size() / w;
    const std::size_t src_cols = source.cols();
    for (std::size_t r = 0; r < rows; ++r) windows[r * w + w - 1] = source.data()[r * src_cols + src_cols - 1];
}

std::vector<std::size_t> repeated_rows(std::size_t rows, std::size_t times) {
    std::vector<std::size_t> idx;
    idx.reserve(rows * times);
    for (std::size_t t = 0; t < times; ++t)
        for (std::size_t r = 0; r < rows; ++r) idx.push_back(r);
    return idx;
}

}  // namespace

void DetectorConfig::validate() const {
    if (score_samples == 0) throw ConfigError("score_samples", "must be at least 1");
    if (batch_size == 0) throw ConfigError("score_batch_size", "must be at least 1");
}

std::size_t ScoreSeries::defined_count() const {
    return static_cast<std::size_t>(std::count_if(scores.begin(), scores.end(), [](const auto& s) { return s.has_value(); }));
}

Tensor mcmc_impute(const FcvaeModel& model, const Tensor& windows, std::size_t steps, nn::NoiseSource& noise) {
    nn::NoGradGuard guard;
    const std::size_t w = model.config().window;
    auto current = windows.to_vector();
    for (std::size_t r = 0; r < windows.rows(); ++r) current[r * w + w - 1] = 0.0;
    Tensor x = window_tensor(current, w);
    // With masking the condition never sees the last point, so it is fixed across iterations.
    Condition c = model.condition(x, false, noise);
    for (std::size_t step = 0; step < steps; ++step) {
        if (!model.config().mask_last && step > 0) c = model.condition(x, false, noise);
        const auto posterior = model.encode(x, c);
        const auto z = nn::gaussian_sample(posterior.mean, posterior.std, noise);
        const auto recon = model.decode(z, c);
        set_last_column(current, w, recon.mean);
        x = window_tensor(current, w);
    }
    return x;
}

std::vector<double> mcmc_impute(const FcvaeModel& model, std::span<const double> window, std::size_t steps,
                                nn::NoiseSource& noise) {
    return mcmc_impute(model, window_tensor(window, model.config().window), steps, noise).to_vector();
}

std::vector<double> anomaly_scores(const FcvaeModel& model, const Tensor& windows, const DetectorConfig& config,
                                   nn::NoiseSource& noise) {
    nn::NoGradGuard guard;
    const std::size_t b = windows.rows(), w = model.config().window;
    const std::size_t samples = config.score_samples;

    const auto imputed = mcmc_impute(model, windows, config.mcmc_steps, noise);
    const auto c = model.condition(imputed, false, noise);
    const auto posterior = model.encode(imputed, c);

    // Sample l of window b sits in row l*B + b, so it draws from window b's stream.
    const auto idx = repeated_rows(b, samples);
    const Condition c_rep{nn::gather_rows(c.local, idx), nn::gather_rows(c.global, idx)};
    const auto z = nn::gaussian_sample(nn::gather_rows(posterior.mean, idx), nn::gather_rows(posterior.std, idx), noise);
    const auto recon = model.decode(z, c_rep);

    std::vector<double> scores(b, 0.0);
    constexpr double kHalfLog2Pi = 0.91893853320467274178;
    for (std::size_t row = 0; row < b * samples; ++row) {
        const std::size_t r = row % b;
        const double x = windows.data()[r * w + w - 1];
        const double mu = recon.mean.data()[row * w + w - 1];
        const double sd = recon.std.data()[row * w + w - 1];
        const double log_p = -kHalfLog2Pi - std::log(sd) - (x - mu) * (x - mu) / (2.0 * sd * sd);
        scores[r] -= log_p;
    }
    for (auto& s : scores) s /= static_cast<double>(samples);
    return scores;
}

double anomaly_score(const FcvaeModel& model, std::span<const double> window, const DetectorConfig& config,
                     nn::NoiseSource& noise) {
    return anomaly_scores(model, window_tensor(window, model.config().window), config, noise).front();
}

ScoreSeries score_series(const data::TimeSeries& ts, const FcvaeModel& model, const DetectorConfig& config) {
    config.validate();
    const std::size_t w = model.config().window;
    ScoreSeries out;
    out.curve_id = ts.curve_id;
    out.timestamps = ts.timestamps;
    out.labels = ts.labels;
    out.scores.assign(ts.size(), std::nullopt);
    if (ts.size() < w) {
        std::cerr << "warning: " << ts.curve_id << " is shorter than the window; no scores\n";
        return out;
    }
    const auto windows = data::make_windows(ts, w, 1);
    for (std::size_t start = 0; start < windows.size(); start += config.batch_size) {
        const std::size_t count = std::min(config.batch_size, windows.size() - start);
        std::vector<std::uint64_t> seeds(count);
        for (std::size_t i = 0; i < count; ++i) seeds[i] = derive_seed(config.seed, windows.last_index[start + i]);
        auto noise = nn::NoiseSource::per_row(seeds);
        const auto batch = window_tensor(std::span(windows.values).subspan(start * w, count * w), w);
        const auto scores = anomaly_scores(model, batch, config, noise);
        for (std::size_t i = 0; i < count; ++i) {
            if (!std::isfinite(scores[i]))
                throw NumericError(ts.curve_id + ": non-finite score at index " +
                                   std::to_string(windows.last_index[start + i]));
            out.scores[windows.last_index[start + i]] = scores[i];
        }
    }
    return out;
}

data::TimeSeries prepare_for_scoring(const data::TimeSeries& raw, const ModelBundle& bundle) {
    // Labels must not steer interpolation here, or labelled anomalies would be smoothed away.
    data::TimeSeries unlabeled = raw;
    std::fill(unlabeled.labels.begin(), unlabeled.labels.end(), 0);
    auto filled = data::fill_missing(unlabeled);

    // Restore labels on the completed grid (inserted points are normal).
    std::size_t j = 0;
    for (std::size_t i = 0; i < filled.size(); ++i) {
        while (j < raw.size() && raw.timestamps[j] < filled.timestamps[i]) ++j;
        filled.labels[i] = (j < raw.size() && raw.timestamps[j] == filled.timestamps[i]) ? raw.labels[j] : 0;
    }

    const auto it = bundle.normalization.find(raw.curve_id);
    if (it != bundle.normalization.end()) return data::apply_normalization(filled, it->second);
    std::cerr << "warning: no training statistics for curve " << raw.curve_id << "; using its own\n";
    return data::standardize(filled).first;
}

void write_scores_csv(const ScoreSeries& scores, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << "timestamp,score,label\n";
    char buf[64];
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out << scores.timestamps[i] << ',';
        if (scores.scores[i]) {
            const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, *scores.scores[i]);
            out.write(buf, end - buf);
        }
        out << ',' << scores.labels[i] << '\n';
    }
}

ScoreSeries load_scores_csv(const std::filesystem::path& path) {
    // Same layout as a data CSV with the value column holding scores.
    const auto ts = data::load_csv(path);
    ScoreSeries out;
    out.curve_id = ts.curve_id;
    out.timestamps = ts.timestamps;
    out.labels = ts.labels;
    out.scores.resize(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (!ts.missing[i]) out.scores[i] = ts.values[i];
    }
    return out;
}

std::vector<ScoreSeries> load_scores_dir(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no score CSV files in " + dir.string());
    std::vector<ScoreSeries> out;
    for (const auto& f : files) out.push_back(load_scores_csv(f));
    return out;
}

}  // namespace fcvae
