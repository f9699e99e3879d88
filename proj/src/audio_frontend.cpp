#include "csat/audio_frontend.hpp"

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "csat/errors.hpp"

namespace csat {

namespace {

constexpr double kPi = 3.14159265358979323846;

double hz_to_mel(double hz) { return 1127.0 * std::log(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::exp(mel / 1127.0) - 1.0); }

// Iterative radix-2 complex FFT, in place. n must be a power of two.
void fft(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * kPi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const auto u = a[i + k];
        const auto v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

Eigen::MatrixXd frame_signal(const std::vector<double>& samples,
                             int sample_rate, const LfbeConfig& cfg) {
  if (sample_rate != 8000 && sample_rate != 16000) {
    throw ConfigError("frame_signal: sample_rate must be 8000 or 16000");
  }
  const int window = static_cast<int>(
      std::lround(cfg.window_ms * 1e-3 * sample_rate));
  const int hop = static_cast<int>(std::lround(cfg.hop_ms * 1e-3 * sample_rate));
  const auto n = static_cast<long>(samples.size());
  if (n < window) {
    throw DataError("frame_signal: signal shorter than one window (" +
                    std::to_string(n) + " < " + std::to_string(window) + ")");
  }
  const long frames = (n - window) / hop + 1;

  Eigen::VectorXd ham(window);
  for (int i = 0; i < window; ++i) {
    ham(i) = 0.54 - 0.46 * std::cos(2.0 * kPi * i / (window - 1));
  }

  Eigen::MatrixXd out(frames, window);
  for (long t = 0; t < frames; ++t) {
    for (int i = 0; i < window; ++i) {
      out(t, i) = samples[static_cast<std::size_t>(t * hop + i)] * ham(i);
    }
  }
  return out;
}

Eigen::MatrixXd mel_filterbank(int n_mels, int n_fft, int sample_rate) {
  const int n_bins = n_fft / 2 + 1;
  const double nyquist = sample_rate / 2.0;
  const double mel_max = hz_to_mel(nyquist);
  std::vector<double> centers_hz(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i) {
    centers_hz[i] = mel_to_hz(mel_max * i / (n_mels + 1));
  }
  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(n_mels, n_bins);
  for (int m = 0; m < n_mels; ++m) {
    const double lo = centers_hz[m];
    const double mid = centers_hz[m + 1];
    const double hi = centers_hz[m + 2];
    for (int k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / n_fft;
      if (f > lo && f < hi) {
        fb(m, k) = (f <= mid) ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
      }
    }
  }
  return fb;
}

Eigen::MatrixXd compute_lfbe(const Eigen::MatrixXd& frames, int sample_rate,
                             const LfbeConfig& cfg) {
  if (frames.rows() == 0) throw DataError("compute_lfbe: no frames");
  if (!is_power_of_two(cfg.n_fft)) {
    throw ConfigError("compute_lfbe: n_fft must be a power of two");
  }
  if (frames.cols() > cfg.n_fft) {
    throw ConfigError("compute_lfbe: frame longer than n_fft");
  }
  const int n_bins = cfg.n_fft / 2 + 1;
  const Eigen::MatrixXd fb = mel_filterbank(cfg.n_mels, cfg.n_fft, sample_rate);

  Eigen::MatrixXd out(frames.rows(), cfg.n_mels);
  std::vector<std::complex<double>> buf(static_cast<std::size_t>(cfg.n_fft));
  Eigen::VectorXd power(n_bins);
  for (long t = 0; t < frames.rows(); ++t) {
    for (int i = 0; i < cfg.n_fft; ++i) {
      buf[static_cast<std::size_t>(i)] =
          (i < frames.cols()) ? std::complex<double>(frames(t, i), 0.0)
                              : std::complex<double>(0.0, 0.0);
    }
    fft(buf);
    for (int k = 0; k < n_bins; ++k) {
      power(k) = std::norm(buf[static_cast<std::size_t>(k)]);
    }
    const Eigen::VectorXd energies = fb * power;
    for (int m = 0; m < cfg.n_mels; ++m) {
      out(t, m) = std::log(std::max(energies(m), cfg.energy_floor));
    }
  }
  return out;
}

Eigen::MatrixXd stack_context(const Eigen::MatrixXd& lfbe) {
  const long t_count = lfbe.rows();
  if (t_count < 1) throw DataError("stack_context: empty input");
  const long d = lfbe.cols();
  Eigen::MatrixXd out(t_count, 3 * d);
  for (long t = 0; t < t_count; ++t) {
    const long prev = std::max<long>(0, t - 1);
    const long next = std::min<long>(t_count - 1, t + 1);
    out.block(t, 0, 1, d) = lfbe.row(prev);
    out.block(t, d, 1, d) = lfbe.row(t);
    out.block(t, 2 * d, 1, d) = lfbe.row(next);
  }
  return out;
}

Eigen::MatrixXd extract_stacked_lfbe(const std::vector<double>& samples,
                                     int sample_rate, const LfbeConfig& cfg) {
  return stack_context(
      compute_lfbe(frame_signal(samples, sample_rate, cfg), sample_rate, cfg));
}

namespace {
constexpr char kFeatMagic[4] = {'C', 'S', 'F', 'T'};
}

void write_feature_file(const std::string& path, const Eigen::MatrixXd& m,
                        double hop_ms, int sample_rate) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open feature file for writing: " + path);
  out.write(kFeatMagic, 4);
  const std::uint32_t version = 1;
  const std::uint32_t rows = static_cast<std::uint32_t>(m.rows());
  const std::uint32_t cols = static_cast<std::uint32_t>(m.cols());
  const std::uint32_t rate = static_cast<std::uint32_t>(sample_rate);
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&rows), 4);
  out.write(reinterpret_cast<const char*>(&cols), 4);
  out.write(reinterpret_cast<const char*>(&rate), 4);
  out.write(reinterpret_cast<const char*>(&hop_ms), 8);
  for (long r = 0; r < m.rows(); ++r) {
    for (long c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      out.write(reinterpret_cast<const char*>(&v), 8);
    }
  }
}

Eigen::MatrixXd read_feature_file(const std::string& path, double* hop_ms,
                                  int* sample_rate) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open feature file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kFeatMagic, 4) != 0) {
    throw DataError("not a feature file: " + path);
  }
  std::uint32_t version = 0, rows = 0, cols = 0, rate = 0;
  double hop = 0.0;
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&rows), 4);
  in.read(reinterpret_cast<char*>(&cols), 4);
  in.read(reinterpret_cast<char*>(&rate), 4);
  in.read(reinterpret_cast<char*>(&hop), 8);
  if (version != 1) throw DataError("unsupported feature file version");
  Eigen::MatrixXd m(rows, cols);
  for (std::uint32_t r = 0; r < rows; ++r) {
    for (std::uint32_t c = 0; c < cols; ++c) {
      double v;
      in.read(reinterpret_cast<char*>(&v), 8);
      m(r, c) = v;
    }
  }
  if (!in) throw DataError("truncated feature file: " + path);
  if (hop_ms) *hop_ms = hop;
  if (sample_rate) *sample_rate = static_cast<int>(rate);
  return m;
}

}  // namespace csat
