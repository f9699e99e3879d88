#pragma once

#include <Eigen/Dense>
#include <vector>

#include "csat/rng.hpp"

namespace csat::nn {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Gate layout in the stacked weight matrices: [input, forget, candidate,
// output], each block of hidden_dim rows.
struct LstmParams {
  Mat w_in;   // 4H x D
  Mat w_rec;  // 4H x H
  Mat bias;   // 4H x 1

  int input_dim() const { return static_cast<int>(w_in.cols()); }
  int hidden_dim() const { return static_cast<int>(w_rec.cols()); }
  std::vector<Mat*> tensors() { return {&w_in, &w_rec, &bias}; }
  std::vector<const Mat*> tensors() const { return {&w_in, &w_rec, &bias}; }
};

// Uniform(-1/sqrt(H), 1/sqrt(H)) weights, forget-gate bias 1, other
// biases 0.
LstmParams make_lstm(int input_dim, int hidden_dim, Rng& rng);

struct LstmCache {
  Mat input;      // T x D
  Mat gate_i, gate_f, gate_g, gate_o;  // T x H
  Mat cell, cell_tanh, hidden;         // T x H
};

// Returns the T x H hidden sequence; zero initial state. The final cell
// state is cache->cell last row when a cache is supplied.
Mat lstm_forward(const LstmParams& p, const Mat& seq,
                 LstmCache* cache = nullptr);

struct LstmGrads {
  Mat w_in, w_rec, bias;
  Mat input;  // T x D, gradient w.r.t. the input sequence
};

// d_hidden is T x H (upstream gradient for every step; fold any
// final-state gradient into the last row). d_cell_final may be empty.
LstmGrads lstm_backward(const LstmParams& p, const LstmCache& cache,
                        const Mat& d_hidden,
                        const Mat& d_cell_final = Mat());

struct Dense {
  Mat w;  // out x in
  Mat b;  // out x 1
  std::vector<Mat*> tensors() { return {&w, &b}; }
};

Dense make_dense(int in_dim, int out_dim, Rng& rng);

Vec dense_forward(const Dense& d, const Vec& x);

struct DenseGrads {
  Mat w, b;
  Vec input;
};

DenseGrads dense_backward(const Dense& d, const Vec& x, const Vec& d_out);

struct BlstmParams {
  LstmParams fwd, bwd;
  std::vector<Mat*> tensors() {
    return {&fwd.w_in, &fwd.w_rec, &fwd.bias,
            &bwd.w_in, &bwd.w_rec, &bwd.bias};
  }
};

struct BlstmCache {
  LstmCache fwd;
  LstmCache bwd;  // computed on the reversed sequence
};

// Row t = [h_fwd(t) || h_bwd(t)] where the backward pass runs on the
// reversed sequence (h_bwd(t) is its step T-1-t).
Mat blstm_forward(const BlstmParams& p, const Mat& seq,
                  BlstmCache* cache = nullptr);

struct BlstmGrads {
  LstmGrads fwd, bwd;
  Mat input;  // T x D
};

BlstmGrads blstm_backward(const BlstmParams& p, const BlstmCache& cache,
                          const Mat& d_hidden /* T x 2H */);

double global_norm(const std::vector<Mat>& grads);

// Global-norm clipping: if ||g||_2 > threshold, scale all gradients by
// threshold/||g||_2. Direction-preserving and idempotent.
void clip_gradients(std::vector<Mat>& grads, double threshold);

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long t = 0;
  std::vector<Mat> m, v;

  // Standard bias-corrected update. Moment buffers are lazily shaped on
  // the first call.
  void step(const std::vector<Mat*>& params, const std::vector<Mat>& grads);
};

}  // namespace csat::nn
