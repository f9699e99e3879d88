#include <cmath>
#include <vector>

#include "csat/nn.hpp"
#include "doctest.h"

using csat::Rng;
using csat::nn::Mat;
using csat::nn::Vec;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Scalar loss used for finite-difference checks: a fixed random
// projection of the hidden sequence plus the final cell state.
double lstm_loss(const csat::nn::LstmParams& p, const Mat& seq,
                 const Mat& w_h, const Mat& w_c) {
  csat::nn::LstmCache cache;
  const Mat h = csat::nn::lstm_forward(p, seq, &cache);
  return (h.array() * w_h.array()).sum() +
         (cache.cell.row(cache.cell.rows() - 1).array() *
          w_c.transpose().array())
             .sum();
}

double blstm_loss(const csat::nn::BlstmParams& p, const Mat& seq,
                  const Mat& w_h) {
  const Mat h = csat::nn::blstm_forward(p, seq);
  return (h.array() * w_h.array()).sum();
}

}  // namespace

TEST_CASE("lstm: zero parameters give zero hidden states") {
  csat::nn::LstmParams p;
  p.w_in = Mat::Zero(12, 2);
  p.w_rec = Mat::Zero(12, 3);
  p.bias = Mat::Zero(12, 1);
  Rng rng(1);
  Mat seq(5, 2);
  for (long i = 0; i < seq.size(); ++i) seq(i) = rng.normal();
  const Mat h = csat::nn::lstm_forward(p, seq);
  REQUIRE(h.rows() == 5);
  REQUIRE(h.cols() == 3);
  CHECK(h.norm() == 0.0);
}

TEST_CASE("lstm: scalar two-step hand evaluation") {
  // H = 1, D = 1; gate rows are [input, forget, candidate, output].
  csat::nn::LstmParams p;
  p.w_in = Mat(4, 1);
  p.w_in << 0.3, -0.2, 0.5, 0.1;
  p.w_rec = Mat(4, 1);
  p.w_rec << 0.4, 0.6, -0.3, 0.2;
  p.bias = Mat(4, 1);
  p.bias << 0.05, 1.0, -0.1, 0.15;

  Mat seq(2, 1);
  seq << 0.7, -1.2;
  csat::nn::LstmCache cache;
  const Mat h = csat::nn::lstm_forward(p, seq, &cache);

  // Step 0 (zero initial state).
  const double i0 = sigmoid(0.3 * 0.7 + 0.05);
  const double f0 = sigmoid(-0.2 * 0.7 + 1.0);
  const double g0 = std::tanh(0.5 * 0.7 - 0.1);
  const double o0 = sigmoid(0.1 * 0.7 + 0.15);
  const double c0 = i0 * g0;
  const double h0 = o0 * std::tanh(c0);
  CHECK(h(0, 0) == doctest::Approx(h0).epsilon(1e-12));
  CHECK(cache.cell(0, 0) == doctest::Approx(c0).epsilon(1e-12));

  // Step 1 carries (h0, c0).
  const double x1 = -1.2;
  const double i1 = sigmoid(0.3 * x1 + 0.4 * h0 + 0.05);
  const double f1 = sigmoid(-0.2 * x1 + 0.6 * h0 + 1.0);
  const double g1 = std::tanh(0.5 * x1 - 0.3 * h0 - 0.1);
  const double o1 = sigmoid(0.1 * x1 + 0.2 * h0 + 0.15);
  const double c1 = f1 * c0 + i1 * g1;
  const double h1 = o1 * std::tanh(c1);
  CHECK(h(1, 0) == doctest::Approx(h1).epsilon(1e-12));
  CHECK(cache.cell(1, 0) == doctest::Approx(c1).epsilon(1e-12));
}

TEST_CASE("lstm: analytic gradients match central finite differences") {
  Rng rng(33);
  csat::nn::LstmParams p = csat::nn::make_lstm(3, 4, rng);
  Mat seq(6, 3);
  for (long i = 0; i < seq.size(); ++i) seq(i) = rng.normal();
  Mat w_h(6, 4), w_c(4, 1);
  for (long i = 0; i < w_h.size(); ++i) w_h(i) = rng.normal();
  for (long i = 0; i < w_c.size(); ++i) w_c(i) = rng.normal();

  csat::nn::LstmCache cache;
  csat::nn::lstm_forward(p, seq, &cache);
  const auto grads =
      csat::nn::lstm_backward(p, cache, w_h, w_c.transpose());

  const double h = 1e-6;
  auto fd_check = [&](Mat& param, const Mat& analytic) {
    for (long i = 0; i < param.size(); ++i) {
      const double keep = param(i);
      param(i) = keep + h;
      const double up = lstm_loss(p, seq, w_h, w_c);
      param(i) = keep - h;
      const double dn = lstm_loss(p, seq, w_h, w_c);
      param(i) = keep;
      const double fd = (up - dn) / (2.0 * h);
      CHECK(analytic(i) == doctest::Approx(fd).epsilon(1e-5));
    }
  };
  fd_check(p.w_in, grads.w_in);
  fd_check(p.w_rec, grads.w_rec);
  fd_check(p.bias, grads.bias);

  // Input gradient too.
  for (long i = 0; i < seq.size(); ++i) {
    const double keep = seq(i);
    seq(i) = keep + h;
    const double up = lstm_loss(p, seq, w_h, w_c);
    seq(i) = keep - h;
    const double dn = lstm_loss(p, seq, w_h, w_c);
    seq(i) = keep;
    CHECK(grads.input(i) ==
          doctest::Approx((up - dn) / (2.0 * h)).epsilon(1e-5));
  }
}

TEST_CASE("blstm: forward concatenates directions, gradients check out") {
  Rng rng(44);
  csat::nn::BlstmParams p;
  p.fwd = csat::nn::make_lstm(2, 3, rng);
  p.bwd = csat::nn::make_lstm(2, 3, rng);
  Mat seq(5, 2);
  for (long i = 0; i < seq.size(); ++i) seq(i) = rng.normal();

  // Direction semantics: forward half equals a plain LSTM, backward half
  // equals a plain LSTM on the reversed sequence, re-reversed.
  const Mat h = csat::nn::blstm_forward(p, seq);
  REQUIRE(h.cols() == 6);
  const Mat h_f = csat::nn::lstm_forward(p.fwd, seq);
  const Mat h_b =
      csat::nn::lstm_forward(p.bwd, seq.colwise().reverse());
  CHECK((h.leftCols(3) - h_f).norm() == 0.0);
  CHECK((h.rightCols(3) - Mat(h_b.colwise().reverse())).norm() == 0.0);

  Mat w_h(5, 6);
  for (long i = 0; i < w_h.size(); ++i) w_h(i) = rng.normal();
  csat::nn::BlstmCache cache;
  csat::nn::blstm_forward(p, seq, &cache);
  const auto grads = csat::nn::blstm_backward(p, cache, w_h);

  const double step = 1e-6;
  auto fd_check = [&](Mat& param, const Mat& analytic) {
    for (long i = 0; i < param.size(); ++i) {
      const double keep = param(i);
      param(i) = keep + step;
      const double up = blstm_loss(p, seq, w_h);
      param(i) = keep - step;
      const double dn = blstm_loss(p, seq, w_h);
      param(i) = keep;
      CHECK(analytic(i) ==
            doctest::Approx((up - dn) / (2.0 * step)).epsilon(1e-5));
    }
  };
  fd_check(p.fwd.w_in, grads.fwd.w_in);
  fd_check(p.fwd.w_rec, grads.fwd.w_rec);
  fd_check(p.fwd.bias, grads.fwd.bias);
  fd_check(p.bwd.w_in, grads.bwd.w_in);
  fd_check(p.bwd.w_rec, grads.bwd.w_rec);
  fd_check(p.bwd.bias, grads.bwd.bias);
  fd_check(seq, grads.input);
}

TEST_CASE("dense: forward and gradient") {
  Rng rng(5);
  csat::nn::Dense d = csat::nn::make_dense(3, 2, rng);
  Vec x(3);
  x << 0.5, -1.0, 2.0;
  const Vec y = csat::nn::dense_forward(d, x);
  CHECK((y - (d.w * x + d.b.col(0))).norm() == 0.0);

  Vec d_out(2);
  d_out << 1.3, -0.7;
  const auto g = csat::nn::dense_backward(d, x, d_out);
  CHECK((g.w - d_out * x.transpose()).norm() < 1e-14);
  CHECK((g.b.col(0) - d_out).norm() < 1e-14);
  CHECK((g.input - d.w.transpose() * d_out).norm() < 1e-14);
}

TEST_CASE("gradient clipping: global norm, idempotent") {
  std::vector<Mat> grads;
  grads.push_back(Mat::Constant(2, 2, 3.0));   // norm 6
  grads.push_back(Mat::Constant(1, 2, -4.0));  // joint norm sqrt(36+32)

  const double norm = csat::nn::global_norm(grads);
  CHECK(norm == doctest::Approx(std::sqrt(68.0)).epsilon(1e-12));

  auto small = grads;
  csat::nn::clip_gradients(small, 100.0);  // below threshold: untouched
  CHECK((small[0] - grads[0]).norm() == 0.0);

  csat::nn::clip_gradients(grads, 1.0);
  CHECK(csat::nn::global_norm(grads) == doctest::Approx(1.0).epsilon(1e-12));
  // Direction preserved: components keep their ratio.
  CHECK(grads[0](0, 0) / grads[1](0, 0) ==
        doctest::Approx(3.0 / -4.0).epsilon(1e-12));
  // Idempotent.
  auto again = grads;
  csat::nn::clip_gradients(again, 1.0);
  CHECK((again[0] - grads[0]).norm() < 1e-15);
}

TEST_CASE("adam: first step from zero with g = 0.5") {
  Mat param = Mat::Zero(1, 1);
  csat::nn::AdamState adam;
  adam.lr = 1e-3;
  adam.step({&param}, {Mat::Constant(1, 1, 0.5)});
  // m_hat = 0.5, v_hat = 0.25 -> delta = -lr * 0.5 / (0.5 + 1e-8).
  CHECK(param(0, 0) ==
        doctest::Approx(-1e-3 * 0.5 / (0.5 + 1e-8)).epsilon(1e-12));
}

TEST_CASE("adam: two-step hand unroll") {
  Mat param = Mat::Constant(1, 1, 0.1);
  csat::nn::AdamState adam;
  adam.lr = 0.01;

  double m = 0.0, v = 0.0, x = 0.1;
  const double g1 = 0.3, g2 = -0.2;
  for (int t = 1; t <= 2; ++t) {
    const double g = (t == 1) ? g1 : g2;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double m_hat = m / (1.0 - std::pow(0.9, t));
    const double v_hat = v / (1.0 - std::pow(0.999, t));
    x -= 0.01 * m_hat / (std::sqrt(v_hat) + 1e-8);
  }
  adam.step({&param}, {Mat::Constant(1, 1, g1)});
  adam.step({&param}, {Mat::Constant(1, 1, g2)});
  CHECK(param(0, 0) == doctest::Approx(x).epsilon(1e-12));
}
