#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace csat {

// Frontend defaults: 25 ms Hamming window, 10 ms hop, 512-point DFT,
// 40 triangular mel filters spanning 0..Nyquist, natural log with a
// 1e-10 energy floor, no pre-emphasis. All values are recorded in run
// configs so they are auditable.
struct LfbeConfig {
  double window_ms = 25.0;
  double hop_ms = 10.0;
  int n_fft = 512;
  int n_mels = 40;
  double energy_floor = 1e-10;
};

// Frames the signal with T = floor((N - W)/H) + 1 and applies a Hamming
// window. Signals shorter than one window raise DataError.
Eigen::MatrixXd frame_signal(const std::vector<double>& samples,
                             int sample_rate,
                             const LfbeConfig& cfg = LfbeConfig{});

// Per frame: power spectrum of the zero-padded n_fft-point DFT, triangular
// mel filterbank, then ln(max(energy, floor)). Returns T x n_mels.
Eigen::MatrixXd compute_lfbe(const Eigen::MatrixXd& frames, int sample_rate,
                             const LfbeConfig& cfg = LfbeConfig{});

// Sliding [t-1, t, t+1] concatenation with edge replication; output keeps
// the input row count, width triples.
Eigen::MatrixXd stack_context(const Eigen::MatrixXd& lfbe);

// Full frontend: frame -> LFBE -> context stacking (T x 120 by default).
Eigen::MatrixXd extract_stacked_lfbe(const std::vector<double>& samples,
                                     int sample_rate,
                                     const LfbeConfig& cfg = LfbeConfig{});

// Triangular mel filterbank weights, n_mels x (n_fft/2 + 1).
Eigen::MatrixXd mel_filterbank(int n_mels, int n_fft, int sample_rate);

// Self-describing binary feature matrix, row-major float64.
void write_feature_file(const std::string& path, const Eigen::MatrixXd& m,
                        double hop_ms, int sample_rate);
Eigen::MatrixXd read_feature_file(const std::string& path,
                                  double* hop_ms = nullptr,
                                  int* sample_rate = nullptr);

}  // namespace csat
