#include "fcvae/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include "fcvae/errors.hpp"

namespace fcvae::data {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::int64_t parse_int(std::string_view field, std::size_t line, const char* what) {
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size())
        throw ParseError(line, std::string("invalid ") + what + " '" + std::string(field) + "'");
    return v;
}

double parse_double(std::string_view field, std::size_t line) {
    // from_chars for double is missing on older libstdc++; strtod is locale-bound but fine for C locale.
    std::string tmp(field);
    char* end = nullptr;
    const double v = std::strtod(tmp.c_str(), &end);
    if (tmp.empty() || end != tmp.c_str() + tmp.size() || !std::isfinite(v))
        throw ParseError(line, "invalid value '" + tmp + "'");
    return v;
}

std::int64_t modal_interval(const std::vector<std::int64_t>& ts) {
    std::map<std::int64_t, std::size_t> counts;
    for (std::size_t i = 1; i < ts.size(); ++i) ++counts[ts[i] - ts[i - 1]];
    std::int64_t best = 0;
    std::size_t best_count = 0;
    for (const auto& [gap, count] : counts) {
        if (count > best_count) {  // ties resolve to the smaller interval
            best = gap;
            best_count = count;
        }
    }
    return best;
}

}  // namespace

void WindowBatch::append(const WindowBatch& other) {
    if (other.size() == 0) return;
    if (size() == 0) window = other.window;
    if (other.window != window) throw UsageError("cannot append windows of different length");
    values.insert(values.end(), other.values.begin(), other.values.end());
    alpha.insert(alpha.end(), other.alpha.begin(), other.alpha.end());
    last_index.insert(last_index.end(), other.last_index.begin(), other.last_index.end());
    curve.insert(curve.end(), other.curve.begin(), other.curve.end());
}

void PreprocessConfig::validate() const {
    if (window < 8) throw ConfigError("window", "must be at least 8");
    if (stride == 0 || stride > window) throw ConfigError("stride", "must satisfy 0 < stride <= window");
    if (!(missing_rate >= 0.0 && missing_rate < 1.0)) throw ConfigError("missing_rate", "must lie in [0, 1)");
    if (!(augment_rate >= 0.0 && augment_rate < 1.0)) throw ConfigError("augment_rate", "must lie in [0, 1)");
}

TimeSeries parse_csv(const std::string& text, std::string curve_id) {
    struct Row {
        std::int64_t timestamp;
        double value;
        int label;
        bool missing;
    };
    std::vector<Row> rows;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto stripped = trim(line);
        if (stripped.empty()) continue;
        const auto fields = split_fields(stripped);
        if (line_no == 1 && !fields.empty() && fields[0] == "timestamp") continue;
        if (fields.size() != 3) throw ParseError(line_no, "expected 3 fields, got " + std::to_string(fields.size()));
        Row row{};
        row.timestamp = parse_int(fields[0], line_no, "timestamp");
        row.missing = fields[1].empty();
        row.value = row.missing ? 0.0 : parse_double(fields[1], line_no);
        const auto label = parse_int(fields[2], line_no, "label");
        if (label != 0 && label != 1) throw ParseError(line_no, "label must be 0 or 1");
        row.label = static_cast<int>(label);
        rows.push_back(row);
    }

    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& a, const Row& b) { return a.timestamp < b.timestamp; });
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].timestamp == rows[i - 1].timestamp)
            throw DataError(curve_id + ": duplicate timestamp " + std::to_string(rows[i].timestamp));
    }

    TimeSeries ts;
    ts.curve_id = std::move(curve_id);
    for (const auto& r : rows) {
        ts.timestamps.push_back(r.timestamp);
        ts.values.push_back(r.value);
        ts.labels.push_back(r.label);
        ts.missing.push_back(r.missing);
    }
    return ts;
}

TimeSeries load_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_csv(buf.str(), path.stem().string());
    } catch (const ParseError& e) {
        throw ParseError(e.line(), e.detail(), path.string());
    }
}

void write_csv(const TimeSeries& ts, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << "timestamp,value,label\n";
    char buf[64];
    for (std::size_t i = 0; i < ts.size(); ++i) {
        out << ts.timestamps[i] << ',';
        if (!ts.missing[i]) {
            const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, ts.values[i]);
            out.write(buf, end - buf);
        }
        out << ',' << ts.labels[i] << '\n';
    }
}

std::vector<TimeSeries> load_dataset(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no CSV files in " + dir.string());
    std::vector<TimeSeries> out;
    out.reserve(files.size());
    for (const auto& f : files) out.push_back(load_csv(f));
    return out;
}

std::pair<TimeSeries, Normalization> standardize(const TimeSeries& ts) {
    if (ts.size() < 2) throw DataError(ts.curve_id + ": standardize needs at least 2 points");
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (ts.is_normal(i)) {
            sum += ts.values[i];
            ++n;
        }
    }
    const bool use_all = n == 0;
    if (use_all) {
        sum = std::accumulate(ts.values.begin(), ts.values.end(), 0.0);
        n = ts.size();
    }
    const double mean = sum / static_cast<double>(n);
    double sq = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (use_all || ts.is_normal(i)) sq += (ts.values[i] - mean) * (ts.values[i] - mean);
    }
    double sd = std::sqrt(sq / static_cast<double>(n));
    if (sd < 1e-8) sd = 1.0;
    Normalization norm{mean, sd};
    return {apply_normalization(ts, norm), norm};
}

TimeSeries apply_normalization(const TimeSeries& ts, Normalization norm) {
    TimeSeries out = ts;
    for (auto& v : out.values) v = (v - norm.mean) / norm.std;
    return out;
}

TimeSeries fill_missing(const TimeSeries& ts) {
    if (ts.size() == 0) throw DataError(ts.curve_id + ": empty series");

    TimeSeries out;
    out.curve_id = ts.curve_id;
    const std::int64_t interval = ts.size() > 1 ? modal_interval(ts.timestamps) : 1;
    if (interval <= 0) throw DataError(ts.curve_id + ": cannot determine sampling interval");

    // Grid completion.
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (i > 0) {
            const auto gap = ts.timestamps[i] - ts.timestamps[i - 1];
            if (gap % interval != 0)
                throw DataError(ts.curve_id + ": timestamp " + std::to_string(ts.timestamps[i]) +
                                " is not aligned to interval " + std::to_string(interval));
            for (auto t = ts.timestamps[i - 1] + interval; t < ts.timestamps[i]; t += interval) {
                out.timestamps.push_back(t);
                out.values.push_back(0.0);
                out.labels.push_back(0);
                out.missing.push_back(true);
            }
        }
        out.timestamps.push_back(ts.timestamps[i]);
        out.values.push_back(ts.values[i]);
        out.labels.push_back(ts.labels[i]);
        out.missing.push_back(ts.missing[i]);
    }

    std::vector<std::size_t> normal;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out.is_normal(i)) normal.push_back(i);
    }
    if (normal.empty()) throw DataError(ts.curve_id + ": no normal points to interpolate from");

    // Linear interpolation between the nearest normal neighbours.
    std::size_t next = 0;  // index into `normal` of the first normal point >= i
    for (std::size_t i = 0; i < out.size(); ++i) {
        while (next < normal.size() && normal[next] < i) ++next;
        if (next < normal.size() && normal[next] == i) continue;
        if (next == 0) {
            out.values[i] = out.values[normal.front()];
        } else if (next == normal.size()) {
            out.values[i] = out.values[normal.back()];
        } else {
            const auto lo = normal[next - 1];
            const auto hi = normal[next];
            const double frac = static_cast<double>(i - lo) / static_cast<double>(hi - lo);
            out.values[i] = out.values[lo] + frac * (out.values[hi] - out.values[lo]);
        }
    }
    return out;
}

WindowBatch make_windows(const TimeSeries& ts, std::size_t window, std::size_t stride, std::size_t curve) {
    if (window == 0 || stride == 0) throw UsageError("window and stride must be positive");
    WindowBatch batch;
    batch.window = window;
    if (ts.size() < window) {
        std::cerr << "warning: " << ts.curve_id << " has " << ts.size() << " points, fewer than window "
                  << window << "; no windows produced\n";
        return batch;
    }
    const std::size_t count = (ts.size() - window) / stride + 1;
    batch.values.reserve(count * window);
    batch.alpha.reserve(count * window);
    for (std::size_t w = 0; w < count; ++w) {
        const std::size_t start = w * stride;
        for (std::size_t j = start; j < start + window; ++j) {
            batch.values.push_back(ts.values[j]);
            batch.alpha.push_back(ts.is_normal(j) ? 1.0 : 0.0);
        }
        batch.last_index.push_back(start + window - 1);
        batch.curve.push_back(curve);
    }
    return batch;
}

WindowBatch inject_missing(const WindowBatch& batch, double rate, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) throw UsageError("missing rate must lie in [0, 1)");
    WindowBatch out = batch;
    if (rate == 0.0) return out;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        if (rng.bernoulli(rate)) {
            out.values[i] = 0.0;
            out.alpha[i] = 0.0;
        }
    }
    return out;
}

AugmentedWindow augment_pattern_at(std::span<const double> a, std::span<const double> b, std::size_t cut) {
    const std::size_t w = a.size();
    if (b.size() != w) throw UsageError("pattern augmentation needs equal-length windows");
    if (cut < 1 || cut >= w) throw UsageError("cut point must lie in [1, W-1]");
    AugmentedWindow out;
    out.values.assign(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(cut));
    out.values.insert(out.values.end(), b.begin() + static_cast<std::ptrdiff_t>(cut), b.end());
    out.alpha.assign(w, 1.0);
    const std::size_t last = std::min(cut + 3, w - 1);
    for (std::size_t j = cut; j <= last; ++j) out.alpha[j] = 0.0;
    return out;
}

AugmentedWindow augment_pattern(std::span<const double> a, std::span<const double> b, Rng& rng) {
    if (a.size() < 2) throw UsageError("pattern augmentation needs windows of length >= 2");
    const auto cut = static_cast<std::size_t>(rng.between(1, static_cast<std::int64_t>(a.size()) - 1));
    return augment_pattern_at(a, b, cut);
}

AugmentedWindow augment_value(std::span<const double> window, Rng& rng) {
    const std::size_t w = window.size();
    if (w == 0) throw UsageError("value augmentation needs a non-empty window");
    AugmentedWindow out{{window.begin(), window.end()}, std::vector<double>(w, 1.0)};

    const auto [lo, hi] = std::minmax_element(window.begin(), window.end());
    const double mean = std::accumulate(window.begin(), window.end(), 0.0) / static_cast<double>(w);
    const double range = std::max(*hi - *lo, 1.0);
    constexpr double kSpread = 3.0;

    const std::size_t max_points = std::max<std::size_t>(1, w / 20);
    const auto m = static_cast<std::size_t>(rng.between(1, static_cast<std::int64_t>(max_points)));
    // Partial Fisher-Yates for m distinct positions.
    std::vector<std::size_t> pos(w);
    std::iota(pos.begin(), pos.end(), std::size_t{0});
    for (std::size_t k = 0; k < m; ++k) {
        const auto j = k + static_cast<std::size_t>(rng.below(w - k));
        std::swap(pos[k], pos[j]);
        out.values[pos[k]] = rng.uniform(mean - kSpread * range, mean + kSpread * range);
        out.alpha[pos[k]] = 0.0;
    }
    return out;
}

WindowBatch augment(const WindowBatch& batch, double rate, Rng& rng, AugmentStats* stats) {
    if (!(rate >= 0.0 && rate < 1.0)) throw UsageError("augment rate must lie in [0, 1)");
    WindowBatch out = batch;
    AugmentStats local;
    const std::size_t n = batch.size();
    const auto count = static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));
    if (count > 0) {
        const bool multi_curve = std::any_of(batch.curve.begin(), batch.curve.end(),
                                             [&](std::size_t c) { return c != batch.curve.front(); });
        const auto n_pattern = multi_curve ? static_cast<std::size_t>(std::llround(count / 2.0)) : 0;

        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t k = 0; k < count; ++k) {
            const auto j = k + static_cast<std::size_t>(rng.below(n - k));
            std::swap(order[k], order[j]);
        }
        for (std::size_t k = 0; k < count; ++k) {
            const std::size_t target = order[k];
            AugmentedWindow aug;
            if (k < n_pattern) {
                std::size_t partner = 0;
                do {
                    partner = static_cast<std::size_t>(rng.below(n));
                } while (batch.curve[partner] == batch.curve[target]);
                aug = augment_pattern(batch.row(target), batch.row(partner), rng);
                ++local.pattern;
            } else {
                aug = augment_value(batch.row(target), rng);
                ++local.value;
            }
            std::copy(aug.values.begin(), aug.values.end(), out.row(target).begin());
            // Points that were already excluded stay excluded.
            auto alpha = out.alpha_row(target);
            for (std::size_t j = 0; j < alpha.size(); ++j) alpha[j] = std::min(alpha[j], aug.alpha[j]);
        }
    }
    if (stats) *stats = local;
    return out;
}

}  // namespace fcvae::data
