#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fcvae/rng.hpp"

namespace fcvae::data {

/// One labelled univariate metric stream.
struct TimeSeries {
    std::string curve_id;
    std::vector<std::int64_t> timestamps;
    std::vector<double> values;
    std::vector<int> labels;     // 0 = normal, 1 = anomalous
    std::vector<bool> missing;

    std::size_t size() const noexcept { return values.size(); }
    /// Neither missing nor labelled anomalous.
    bool is_normal(std::size_t i) const { return !missing[i] && labels[i] == 0; }
};

/// Sliding windows with the per-point normality mask used by the bound.
struct WindowBatch {
    std::size_t window = 0;
    std::vector<double> values;           // n_windows x window, row-major
    std::vector<double> alpha;            // 1 = normal point, 0 = excluded
    std::vector<std::size_t> last_index;  // index in the source series of each window's final point
    std::vector<std::size_t> curve;       // source curve of each window

    std::size_t size() const noexcept { return last_index.size(); }
    std::span<double> row(std::size_t i) { return {values.data() + i * window, window}; }
    std::span<const double> row(std::size_t i) const { return {values.data() + i * window, window}; }
    std::span<double> alpha_row(std::size_t i) { return {alpha.data() + i * window, window}; }
    std::span<const double> alpha_row(std::size_t i) const { return {alpha.data() + i * window, window}; }

    /// Appends all windows of `other` (same window length).
    void append(const WindowBatch& other);
};

struct PreprocessConfig {
    std::size_t window = 120;
    std::size_t stride = 1;
    double missing_rate = 0.05;
    double augment_rate = 0.1;
    std::uint64_t seed = 0;

    /// Throws ConfigError naming the key on violation.
    void validate() const;
};

struct Normalization {
    double mean = 0.0;
    double std = 1.0;
};

/// Parses a `timestamp,value,label` CSV; rows are returned sorted by timestamp.
TimeSeries load_csv(const std::filesystem::path& path);

/// Same as load_csv but reads from an in-memory document.
TimeSeries parse_csv(const std::string& text, std::string curve_id);

void write_csv(const TimeSeries& ts, const std::filesystem::path& path);

/// All `*.csv` files directly inside `dir`, sorted by curve id.
std::vector<TimeSeries> load_dataset(const std::filesystem::path& dir);

/// Z-score normalisation with statistics taken over normal points only.
std::pair<TimeSeries, Normalization> standardize(const TimeSeries& ts);

/// Applies known statistics.
TimeSeries apply_normalization(const TimeSeries& ts, Normalization norm);

/// Completes the timestamp grid and interpolates missing and labelled points.
TimeSeries fill_missing(const TimeSeries& ts);

WindowBatch make_windows(const TimeSeries& ts, std::size_t window, std::size_t stride,
                         std::size_t curve = 0);

/// Sets each point to 0 with probability `rate`, clearing its alpha.
WindowBatch inject_missing(const WindowBatch& batch, double rate, Rng& rng);

struct AugmentedWindow {
    std::vector<double> values;
    std::vector<double> alpha;
};

/// Splices the prefix of `a` onto the suffix of `b`; the junction is marked abnormal.
AugmentedWindow augment_pattern(std::span<const double> a, std::span<const double> b, Rng& rng);

/// Same as above with an explicit cut point in [1, W-1].
AugmentedWindow augment_pattern_at(std::span<const double> a, std::span<const double> b,
                                   std::size_t cut);

/// Overwrites a few random points with out-of-pattern values.
AugmentedWindow augment_value(std::span<const double> window, Rng& rng);

struct AugmentStats {
    std::size_t pattern = 0;
    std::size_t value = 0;
};

/// Replaces a fraction `rate` of the windows with augmented ones, half of each
/// kind. Pattern splices need a partner window from another curve; without one
/// the value kind is used instead.
WindowBatch augment(const WindowBatch& batch, double rate, Rng& rng, AugmentStats* stats = nullptr);

}  // namespace fcvae::data
