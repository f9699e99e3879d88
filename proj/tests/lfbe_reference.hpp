#pragma once

// Test-only reference implementation of the log filterbank energy
// frontend, written independently of the library: direct O(n^2) DFT,
// explicit per-sample Hamming weights, and a from-scratch triangular
// mel filterbank.

#include <cmath>
#include <vector>

namespace lfbe_reference {

inline double mel_of_hz(double hz) {
  return 1127.0 * std::log(1.0 + hz / 700.0);
}

inline double hz_of_mel(double mel) {
  return 700.0 * (std::exp(mel / 1127.0) - 1.0);
}

// T x 40 log energies for 25 ms / 10 ms framing with a 512-point DFT.
inline std::vector<std::vector<double>> compute(
    const std::vector<double>& samples, int sample_rate) {
  const int window = sample_rate * 25 / 1000;
  const int hop = sample_rate * 10 / 1000;
  const int n_fft = 512;
  const int n_bins = n_fft / 2 + 1;
  const int n_mels = 40;
  const double pi = 3.14159265358979323846;

  // Triangular filters with centers equally spaced on the mel scale
  // between 0 and Nyquist, mapped onto DFT bin frequencies.
  const double mel_max = mel_of_hz(sample_rate / 2.0);
  std::vector<double> centers_hz(n_mels + 2);
  for (int m = 0; m < n_mels + 2; ++m) {
    centers_hz[m] = hz_of_mel(mel_max * m / (n_mels + 1));
  }
  std::vector<std::vector<double>> filters(
      n_mels, std::vector<double>(n_bins, 0.0));
  for (int m = 0; m < n_mels; ++m) {
    const double lo = centers_hz[m], mid = centers_hz[m + 1],
                 hi = centers_hz[m + 2];
    for (int k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / n_fft;
      if (f > lo && f < mid) {
        filters[m][k] = (f - lo) / (mid - lo);
      } else if (f >= mid && f < hi) {
        filters[m][k] = (hi - f) / (hi - mid);
      }
    }
  }

  const int n = static_cast<int>(samples.size());
  const int frames = (n - window) / hop + 1;
  std::vector<std::vector<double>> out;
  for (int t = 0; t < frames; ++t) {
    std::vector<double> windowed(n_fft, 0.0);
    for (int i = 0; i < window; ++i) {
      const double w =
          0.54 - 0.46 * std::cos(2.0 * pi * i / (window - 1));
      windowed[i] = samples[static_cast<std::size_t>(t * hop + i)] * w;
    }
    std::vector<double> power(n_bins);
    for (int k = 0; k < n_bins; ++k) {
      double re = 0.0, im = 0.0;
      for (int i = 0; i < n_fft; ++i) {
        const double angle = -2.0 * pi * k * i / n_fft;
        re += windowed[i] * std::cos(angle);
        im += windowed[i] * std::sin(angle);
      }
      power[k] = re * re + im * im;
    }
    std::vector<double> row(n_mels);
    for (int m = 0; m < n_mels; ++m) {
      double e = 0.0;
      for (int k = 0; k < n_bins; ++k) e += filters[m][k] * power[k];
      row[m] = std::log(std::max(e, 1e-10));
    }
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace lfbe_reference
