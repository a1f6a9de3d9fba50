#include "fcvae/nn/noise.hpp"

#include "fcvae/errors.hpp"

namespace fcvae::nn {

NoiseSource NoiseSource::per_row(const std::vector<std::uint64_t>& seeds) {
    if (seeds.empty()) throw UsageError("per-row noise needs at least one seed");
    NoiseSource src;
    src.streams_.reserve(seeds.size());
    for (auto s : seeds) src.streams_.emplace_back(s);
    return src;
}

std::vector<double> NoiseSource::normal(std::size_t rows, std::size_t cols) {
    std::vector<double> out(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
        auto& rng = stream(r);
        for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = rng.normal();
    }
    return out;
}

std::vector<double> NoiseSource::keep_mask(std::size_t rows, std::size_t cols, double keep) {
    std::vector<double> out(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
        auto& rng = stream(r);
        for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = rng.bernoulli(keep) ? 1.0 : 0.0;
    }
    return out;
}

}  // namespace fcvae::nn
