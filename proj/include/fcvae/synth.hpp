#pragma once

#include <cstdint>
#include <vector>

#include "fcvae/data.hpp"

namespace fcvae {

/// Built-in benchmark: sinusoid mixtures with labelled value spikes and
/// pattern-change segments.
struct SynthConfig {
    std::size_t curves = 5;
    std::size_t length = 5000;
    double anomaly_rate = 0.01;
    std::uint64_t seed = 0;
    std::int64_t start_timestamp = 1'600'000'000;
    std::int64_t interval = 60;
    /// No anomaly starts before this index, so every one is scorable.
    std::size_t warmup = 150;

    void validate() const;
};

enum class AnomalyKind { spike, pattern };

struct InjectedAnomaly {
    std::size_t begin = 0;
    std::size_t length = 0;
    AnomalyKind kind = AnomalyKind::spike;
};

struct SynthCurve {
    data::TimeSeries series;
    std::vector<InjectedAnomaly> anomalies;
};

SynthCurve synthesize_curve(const SynthConfig& config, std::size_t index);
std::vector<SynthCurve> synthesize(const SynthConfig& config);

}  // namespace fcvae
