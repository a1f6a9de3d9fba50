#pragma once

#include <complex>
#include <span>
#include <vector>

namespace fcvae::spectral {

using Complex = std::complex<double>;

/// One-sided amplitude spectrum of a real signal.
struct Spectrum {
    std::vector<double> amplitudes;  // floor(n/2)+1 bins, bin 0 = DC
    std::size_t source_length = 0;
};

/// X[f] = sum_t x[t] exp(-2 pi i f t / n). Radix-2 for powers of two, Bluestein otherwise.
std::vector<Complex> dft(std::span<const double> x);

/// Complex-input transform; `inverse` flips the exponent sign (no 1/n scaling).
std::vector<Complex> fft(std::span<const Complex> x, bool inverse = false);

/// |X[f]| / n for f = 0..floor(n/2).
Spectrum amplitude_features(std::span<const double> x);

/// Writes the floor(n/2)+1 normalised amplitudes into `out`.
void amplitude_features_into(std::span<const double> x, std::span<double> out);

inline std::size_t amplitude_bins(std::size_t n) { return n / 2 + 1; }

/// Number of length-k slices with stride s inside a length-w window.
std::size_t small_window_count(std::size_t w, std::size_t k, std::size_t s);

/// Row j = x[j*s .. j*s+k-1], returned row-major (count x k).
std::vector<double> sliding_small_windows(std::span<const double> x, std::size_t k, std::size_t s);

/// Copy of x with the final element set to zero.
std::vector<double> mask_last(std::span<const double> x);

}  // namespace fcvae::spectral
