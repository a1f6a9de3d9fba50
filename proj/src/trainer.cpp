#include "fcvae/trainer.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include "fcvae/errors.hpp"
#include "fcvae/nn/ops.hpp"
#include "fcvae/rng.hpp"

namespace fcvae {

namespace {

// Stream ids for derive_seed.
constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kEpochStream = 1ULL << 40;
constexpr std::uint64_t kBatchStream = 2ULL << 40;
constexpr std::uint64_t kValidStream = 3ULL << 40;

double batch_loss_value(FcvaeModel& model, const data::WindowBatch& batch, std::span<const std::size_t> rows,
                        ElboKind kind, nn::NoiseSource& noise, bool training, bool step, nn::Adam* adam) {
    const std::size_t w = batch.window;
    std::vector<double> x(rows.size() * w), a(rows.size() * w);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy_n(batch.row(rows[i]).begin(), w, x.begin() + static_cast<std::ptrdiff_t>(i * w));
        std::copy_n(batch.alpha_row(rows[i]).begin(), w, a.begin() + static_cast<std::ptrdiff_t>(i * w));
    }
    const auto xt = window_tensor(x, w);
    const auto at = window_tensor(a, w);
    if (!step) {
        nn::NoGradGuard guard;
        return model.loss(xt, at, kind, training, noise).item();
    }
    auto& params = model.params();
    const auto loss = model.loss(xt, at, kind, training, noise);
    const double value = loss.item();
    if (!std::isfinite(value)) return value;
    params.zero_grad();
    nn::backward(loss);
    adam->step(params);
    return value;
}

}  // namespace

void TrainConfig::validate() const {
    if (epochs == 0) throw ConfigError("epochs", "must be at least 1");
    if (batch_size == 0) throw ConfigError("batch_size", "must be at least 1");
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("lr", "must be a non-negative number");
    if (!(missing_rate >= 0.0 && missing_rate < 1.0)) throw ConfigError("missing_rate", "must lie in [0, 1)");
    if (!(augment_rate >= 0.0 && augment_rate < 1.0)) throw ConfigError("augment_rate", "must lie in [0, 1)");
    if (!(valid_fraction >= 0.0 && valid_fraction <= 0.5)) throw ConfigError("valid_fraction", "must lie in [0, 0.5]");
    if (stride == 0) throw ConfigError("stride", "must be positive");
}

PreparedCurve prepare_training_curve(const data::TimeSeries& raw, bool use_labels) {
    data::TimeSeries ts = raw;
    if (!use_labels) std::fill(ts.labels.begin(), ts.labels.end(), 0);
    auto [standardized, norm] = data::standardize(data::fill_missing(ts));
    return {std::move(standardized), norm};
}

TrainResult train(const std::vector<data::TimeSeries>& dataset, const FcvaeConfig& model_config,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
    if (dataset.empty()) throw UsageError("train: empty dataset");
    model_config.validate();
    config.validate();
    const std::size_t w = model_config.window;
    if (config.stride > w) throw ConfigError("stride", "must not exceed window");

    std::map<std::string, data::Normalization> normalization;
    data::WindowBatch train_windows, valid_windows;
    for (std::size_t c = 0; c < dataset.size(); ++c) {
        auto prepared = prepare_training_curve(dataset[c], config.use_labels);
        const auto& ts = prepared.series;
        if (ts.size() < w)
            throw DataError(ts.curve_id + ": " + std::to_string(ts.size()) + " points, fewer than window " +
                            std::to_string(w));
        normalization[ts.curve_id] = prepared.normalization;

        const auto tail = static_cast<std::size_t>(std::floor(config.valid_fraction * static_cast<double>(ts.size())));
        const std::size_t split = ts.size() - tail;
        auto all = data::make_windows(ts, w, config.stride, c);
        for (std::size_t i = 0; i < all.size(); ++i) {
            data::WindowBatch one;
            one.window = w;
            one.values.assign(all.row(i).begin(), all.row(i).end());
            one.alpha.assign(all.alpha_row(i).begin(), all.alpha_row(i).end());
            one.last_index = {all.last_index[i]};
            one.curve = {c};
            (all.last_index[i] < split ? train_windows : valid_windows).append(one);
        }
    }
    if (train_windows.size() == 0) throw DataError("no training windows after the validation split");

    FcvaeModel model(model_config, derive_seed(config.seed, kInitStream));
    nn::Adam adam(nn::AdamOptions{config.lr, 0.9, 0.999, 1e-8});
    TrainHistory history;
    history.windows_per_epoch = train_windows.size();

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        Rng rng(derive_seed(config.seed, kEpochStream + epoch));
        auto batch = data::augment(train_windows, config.augment_rate, rng);
        batch = data::inject_missing(batch, config.missing_rate, rng);

        std::vector<std::size_t> order(batch.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

        double total = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
            const auto rows = std::span(order).subspan(start, std::min(config.batch_size, order.size() - start));
            nn::NoiseSource noise(derive_seed(config.seed, kBatchStream + (epoch << 20) + batch_index));
            const std::string where = "epoch " + std::to_string(epoch + 1) + ", batch " + std::to_string(batch_index);
            double value = 0.0;
            try {
                value = batch_loss_value(model, batch, rows, config.elbo, noise, true, true, &adam);
            } catch (const NumericError& e) {
                throw NumericError(std::string(e.what()) + " at " + where);
            }
            if (!std::isfinite(value)) throw NumericError("non-finite loss at " + where);
            total += value * static_cast<double>(rows.size());
        }
        history.train_loss.push_back(total / static_cast<double>(order.size()));

        double valid = std::nan("");
        if (valid_windows.size() > 0) {
            std::vector<std::size_t> rows(valid_windows.size());
            std::iota(rows.begin(), rows.end(), std::size_t{0});
            double vtotal = 0.0;
            for (std::size_t start = 0; start < rows.size(); start += config.batch_size) {
                const auto part = std::span(rows).subspan(start, std::min(config.batch_size, rows.size() - start));
                nn::NoiseSource noise(derive_seed(config.seed, kValidStream + start));
                vtotal += batch_loss_value(model, valid_windows, part, config.elbo, noise, false, false, nullptr) *
                          static_cast<double>(part.size());
            }
            valid = vtotal / static_cast<double>(rows.size());
            history.valid_loss.push_back(valid);
        }
        if (on_epoch) on_epoch(epoch + 1, history.train_loss.back(), valid);
    }
    return {std::move(model), std::move(history), std::move(normalization)};
}

void write_history_csv(const TrainHistory& history, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << "epoch,train_loss,valid_loss\n";
    char buf[64];
    for (std::size_t e = 0; e < history.train_loss.size(); ++e) {
        out << e + 1 << ',';
        out.write(buf, std::to_chars(buf, buf + sizeof buf, history.train_loss[e]).ptr - buf);
        out << ',';
        if (e < history.valid_loss.size()) {
            out.write(buf, std::to_chars(buf, buf + sizeof buf, history.valid_loss[e]).ptr - buf);
        }
        out << '\n';
    }
}

}  // namespace fcvae
