#include "fcvae/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fcvae/errors.hpp"
#include "fcvae/rng.hpp"

namespace fcvae {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Waveform {
    double level = 0.0;
    double amplitude = 1.0;
    double period = 100.0;
    double phase = 0.0;
    double harmonic_amplitude = 0.0;
    double harmonic_divisor = 2.0;
    double slow_amplitude = 0.0;
    double slow_period = 1000.0;

    double at(double t) const {
        return level + amplitude * std::sin(kTwoPi * t / period + phase) +
               harmonic_amplitude * std::sin(kTwoPi * t * harmonic_divisor / period + 2.0 * phase) +
               slow_amplitude * std::sin(kTwoPi * t / slow_period);
    }
};

Waveform random_waveform(Rng& rng) {
    Waveform w;
    w.level = rng.uniform(-10.0, 10.0);
    w.amplitude = rng.uniform(1.0, 3.0);
    w.period = rng.uniform(40.0, 150.0);
    w.phase = rng.uniform(0.0, kTwoPi);
    w.harmonic_amplitude = w.amplitude * rng.uniform(0.2, 0.6);
    w.harmonic_divisor = static_cast<double>(rng.between(2, 4));
    w.slow_amplitude = w.amplitude * rng.uniform(0.1, 0.5);
    w.slow_period = rng.uniform(600.0, 2000.0);
    return w;
}

}  // namespace

void SynthConfig::validate() const {
    if (curves == 0) throw ConfigError("curves", "must be at least 1");
    if (length < 2) throw ConfigError("length", "must be at least 2");
    if (!(anomaly_rate >= 0.0 && anomaly_rate < 0.5)) throw ConfigError("anomaly_rate", "must lie in [0, 0.5)");
    if (interval <= 0) throw ConfigError("interval", "must be positive");
}

SynthCurve synthesize_curve(const SynthConfig& config, std::size_t index) {
    config.validate();
    Rng rng(derive_seed(config.seed, index));
    const Waveform base = random_waveform(rng);
    const double noise = 0.05 * base.amplitude;

    SynthCurve out;
    auto& ts = out.series;
    ts.curve_id = "curve_" + std::to_string(index);
    ts.timestamps.resize(config.length);
    ts.values.resize(config.length);
    ts.labels.assign(config.length, 0);
    ts.missing.assign(config.length, false);
    for (std::size_t i = 0; i < config.length; ++i) {
        ts.timestamps[i] = config.start_timestamp + static_cast<std::int64_t>(i) * config.interval;
        ts.values[i] = base.at(static_cast<double>(i)) + noise * rng.normal();
    }

    // Alternate spikes (1-3 points) and pattern changes (10-25 points) until
    // the labelled budget is spent; segments keep a gap so they stay distinct.
    const auto budget = static_cast<std::size_t>(std::llround(config.anomaly_rate * static_cast<double>(config.length)));
    std::size_t labelled = 0;
    bool spike_next = rng.bernoulli(0.5);
    std::size_t attempts = 0;
    while (labelled < budget && attempts < 10000) {
        ++attempts;
        const auto kind = spike_next ? AnomalyKind::spike : AnomalyKind::pattern;
        std::size_t len = kind == AnomalyKind::spike ? static_cast<std::size_t>(rng.between(1, 3))
                                                     : static_cast<std::size_t>(rng.between(10, 25));
        len = std::min(len, budget - labelled);
        if (config.length < config.warmup + len + 1) break;
        const auto begin = static_cast<std::size_t>(
            rng.between(static_cast<std::int64_t>(config.warmup), static_cast<std::int64_t>(config.length - len)));
        const std::size_t gap = 20;
        bool clash = false;
        for (std::size_t i = begin >= gap ? begin - gap : 0; i < std::min(config.length, begin + len + gap); ++i) {
            clash = clash || ts.labels[i] == 1;
        }
        if (clash) continue;

        if (kind == AnomalyKind::spike) {
            for (std::size_t i = begin; i < begin + len; ++i) {
                const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
                ts.values[i] += sign * base.amplitude * rng.uniform(1.0, 2.0);
            }
        } else {
            // Splice in a different waveform, shifted so the junction jumps.
            Waveform other = base;
            other.period = base.period * rng.uniform(0.25, 0.5);
            other.phase = rng.uniform(0.0, kTwoPi);
            const double shift = (rng.bernoulli(0.5) ? 1.0 : -1.0) * base.amplitude * rng.uniform(0.8, 1.5);
            for (std::size_t i = begin; i < begin + len; ++i) {
                ts.values[i] = other.at(static_cast<double>(i)) + shift + noise * rng.normal();
            }
        }
        for (std::size_t i = begin; i < begin + len; ++i) ts.labels[i] = 1;
        out.anomalies.push_back({begin, len, kind});
        labelled += len;
        spike_next = !spike_next;
    }
    std::sort(out.anomalies.begin(), out.anomalies.end(),
              [](const InjectedAnomaly& a, const InjectedAnomaly& b) { return a.begin < b.begin; });
    return out;
}

std::vector<SynthCurve> synthesize(const SynthConfig& config) {
    config.validate();
    std::vector<SynthCurve> out;
    out.reserve(config.curves);
    for (std::size_t c = 0; c < config.curves; ++c) out.push_back(synthesize_curve(config, c));
    return out;
}

}  // namespace fcvae
