#include "fcvae/spectral.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <unordered_map>

#include "fcvae/errors.hpp"

namespace fcvae::spectral {

namespace {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_power_of_two(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

/// exp(-2 pi i k / n) for k < n/2, cached per length.
const std::vector<Complex>& twiddles(std::size_t n) {
    thread_local std::unordered_map<std::size_t, std::vector<Complex>> cache;
    auto& table = cache[n];
    if (table.empty() && n >= 2) {
        table.resize(n / 2);
        for (std::size_t k = 0; k < n / 2; ++k) {
            const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
            table[k] = Complex(std::cos(angle), std::sin(angle));
        }
    }
    return table;
}

/// In-place iterative radix-2 transform; n must be a power of two.
void radix2(std::vector<Complex>& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    const auto& table = twiddles(n);
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        const std::size_t step = n / len;
        for (std::size_t k = 0; k < half; ++k) {
            const Complex w = inverse ? std::conj(table[k * step]) : table[k * step];
            for (std::size_t i = k; i < n; i += len) {
                const Complex u = a[i];
                const Complex v = a[i + half] * w;
                a[i] = u + v;
                a[i + half] = u - v;
            }
        }
    }
}

/// Chirp tables for Bluestein's algorithm at one length.
struct BluesteinPlan {
    std::size_t n = 0;
    std::size_t m = 0;                // padded power-of-two length >= 2n-1
    std::vector<Complex> chirp;       // exp(-i pi k^2 / n), k < n
    std::vector<Complex> kernel_fft;  // FFT of conj(chirp) arranged circularly

    explicit BluesteinPlan(std::size_t len) : n(len), m(next_power_of_two(2 * len - 1)), chirp(len) {
        for (std::size_t k = 0; k < n; ++k) {
            // k^2 mod 2n keeps the angle argument small.
            const auto k2 = (static_cast<unsigned long long>(k) * k) % (2 * n);
            const double angle = std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n);
            chirp[k] = Complex(std::cos(angle), -std::sin(angle));
        }
        kernel_fft.assign(m, Complex{});
        kernel_fft[0] = std::conj(chirp[0]);
        for (std::size_t k = 1; k < n; ++k) {
            kernel_fft[k] = std::conj(chirp[k]);
            kernel_fft[m - k] = std::conj(chirp[k]);
        }
        radix2(kernel_fft, false);
    }

    std::vector<Complex> forward(std::span<const Complex> x) const {
        std::vector<Complex> a(m, Complex{});
        for (std::size_t k = 0; k < n; ++k) a[k] = x[k] * chirp[k];
        radix2(a, false);
        for (std::size_t k = 0; k < m; ++k) a[k] *= kernel_fft[k];
        radix2(a, true);
        std::vector<Complex> out(n);
        const double scale = 1.0 / static_cast<double>(m);
        for (std::size_t k = 0; k < n; ++k) out[k] = a[k] * scale * chirp[k];
        return out;
    }
};

const BluesteinPlan& bluestein_plan(std::size_t n) {
    thread_local std::unordered_map<std::size_t, std::unique_ptr<BluesteinPlan>> cache;
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<BluesteinPlan>(n);
    return *slot;
}

}  // namespace

std::vector<Complex> fft(std::span<const Complex> x, bool inverse) {
    const std::size_t n = x.size();
    if (n == 0) throw UsageError("fft of an empty signal");
    if (is_power_of_two(n)) {
        std::vector<Complex> a(x.begin(), x.end());
        radix2(a, inverse);
        return a;
    }
    if (!inverse) return bluestein_plan(n).forward(x);
    // Inverse via conjugation: conj(F(conj(x))).
    std::vector<Complex> c(n);
    for (std::size_t i = 0; i < n; ++i) c[i] = std::conj(x[i]);
    auto out = bluestein_plan(n).forward(c);
    for (auto& v : out) v = std::conj(v);
    return out;
}

std::vector<Complex> dft(std::span<const double> x) {
    std::vector<Complex> c(x.begin(), x.end());
    return fft(c, false);
}

void amplitude_features_into(std::span<const double> x, std::span<double> out) {
    const std::size_t n = x.size();
    if (out.size() != amplitude_bins(n)) throw ShapeError("amplitude output has wrong length");
    const auto spectrum = dft(x);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t f = 0; f < out.size(); ++f) out[f] = std::abs(spectrum[f]) * inv_n;
}

Spectrum amplitude_features(std::span<const double> x) {
    if (x.size() < 2) throw UsageError("amplitude features need at least 2 samples");
    Spectrum s;
    s.source_length = x.size();
    s.amplitudes.resize(amplitude_bins(x.size()));
    amplitude_features_into(x, s.amplitudes);
    return s;
}

std::size_t small_window_count(std::size_t w, std::size_t k, std::size_t s) {
    if (k == 0 || k > w) throw ConfigError("small_window", "must satisfy 0 < k <= window");
    if (s == 0) throw ConfigError("small_stride", "must be positive");
    if ((w - k) % s != 0) throw ConfigError("small_stride", "window - small_window must be divisible by small_stride");
    return (w - k) / s + 1;
}

std::vector<double> sliding_small_windows(std::span<const double> x, std::size_t k, std::size_t s) {
    const std::size_t count = small_window_count(x.size(), k, s);
    std::vector<double> out;
    out.reserve(count * k);
    for (std::size_t j = 0; j < count; ++j) {
        out.insert(out.end(), x.begin() + static_cast<std::ptrdiff_t>(j * s),
                   x.begin() + static_cast<std::ptrdiff_t>(j * s + k));
    }
    return out;
}

std::vector<double> mask_last(std::span<const double> x) {
    if (x.empty()) throw UsageError("mask_last of an empty window");
    std::vector<double> out(x.begin(), x.end());
    out.back() = 0.0;
    return out;
}

}  // namespace fcvae::spectral
