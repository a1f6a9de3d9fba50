#pragma once

#include <cstdint>
#include <vector>

#include "fcvae/rng.hpp"

namespace fcvae::nn {

/// Source of the stochastic inputs of a forward pass (reparameterisation noise
/// and dropout masks). Row r of every drawn matrix comes from stream
/// r % streams(), so a per-row source makes each row's draws independent of
/// whatever else is in the batch.
class NoiseSource {
public:
    explicit NoiseSource(std::uint64_t seed) : streams_{Rng(seed)} {}

    static NoiseSource per_row(const std::vector<std::uint64_t>& seeds);

    std::size_t streams() const noexcept { return streams_.size(); }

    std::vector<double> normal(std::size_t rows, std::size_t cols);
    /// 1 with probability keep, else 0.
    std::vector<double> keep_mask(std::size_t rows, std::size_t cols, double keep);

private:
    NoiseSource() = default;
    Rng& stream(std::size_t row) { return streams_[row % streams_.size()]; }

    std::vector<Rng> streams_;
};

}  // namespace fcvae::nn
