#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "fcvae/data.hpp"
#include "fcvae/model.hpp"
#include "fcvae/rng.hpp"
#include "fcvae/trainer.hpp"

namespace fcvae::testing {

inline data::TimeSeries sine_series(std::size_t n, double period, double noise = 0.0, std::uint64_t seed = 0,
                                    std::string id = "sine") {
    Rng rng(seed);
    data::TimeSeries ts;
    ts.curve_id = std::move(id);
    for (std::size_t i = 0; i < n; ++i) {
        ts.timestamps.push_back(1000 + static_cast<std::int64_t>(i) * 60);
        const double t = static_cast<double>(i);
        ts.values.push_back(3.0 + 2.0 * std::sin(2.0 * std::numbers::pi * t / period) +
                            0.5 * std::sin(4.0 * std::numbers::pi * t / period + 1.0) + noise * rng.normal());
        ts.labels.push_back(0);
        ts.missing.push_back(false);
    }
    return ts;
}

/// Small geometry that trains in seconds.
inline FcvaeConfig small_config() {
    FcvaeConfig c;
    c.window = 32;
    c.small_window = 8;
    c.small_stride = 4;
    c.embed_dim = 8;
    c.latent_dim = 4;
    c.hidden = {48, 48};
    c.dropout = 0.05;
    return c;
}

inline TrainConfig small_train(std::size_t epochs) {
    TrainConfig t;
    t.epochs = epochs;
    t.batch_size = 64;
    t.lr = 3e-3;
    t.seed = 7;
    return t;
}

}  // namespace fcvae::testing
