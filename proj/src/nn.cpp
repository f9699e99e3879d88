#include "csat/nn.hpp"

#include <cmath>

#include "csat/errors.hpp"

namespace csat::nn {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void fill_uniform(Mat& m, double scale, Rng& rng) {
  for (long c = 0; c < m.cols(); ++c) {
    for (long r = 0; r < m.rows(); ++r) {
      m(r, c) = rng.uniform(-scale, scale);
    }
  }
}

}  // namespace

LstmParams make_lstm(int input_dim, int hidden_dim, Rng& rng) {
  LstmParams p;
  const double scale = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  p.w_in = Mat(4 * hidden_dim, input_dim);
  p.w_rec = Mat(4 * hidden_dim, hidden_dim);
  fill_uniform(p.w_in, scale, rng);
  fill_uniform(p.w_rec, scale, rng);
  p.bias = Mat::Zero(4 * hidden_dim, 1);
  p.bias.block(hidden_dim, 0, hidden_dim, 1).setOnes();  // forget gate
  return p;
}

Mat lstm_forward(const LstmParams& p, const Mat& seq, LstmCache* cache) {
  const long t_count = seq.rows();
  const int h = p.hidden_dim();
  if (t_count < 1) throw DataError("lstm_forward: empty sequence");
  if (seq.cols() != p.input_dim()) {
    throw DataError("lstm_forward: input dim " + std::to_string(seq.cols()) +
                    " != expected " + std::to_string(p.input_dim()));
  }

  Mat hidden(t_count, h);
  Mat gi(t_count, h), gf(t_count, h), gg(t_count, h), go(t_count, h);
  Mat cell(t_count, h), cell_tanh(t_count, h);

  Vec h_prev = Vec::Zero(h);
  Vec c_prev = Vec::Zero(h);
  for (long t = 0; t < t_count; ++t) {
    const Vec z = p.w_in * seq.row(t).transpose() + p.w_rec * h_prev + p.bias;
    for (int j = 0; j < h; ++j) {
      const double i_g = sigmoid(z(j));
      const double f_g = sigmoid(z(h + j));
      const double g_g = std::tanh(z(2 * h + j));
      const double o_g = sigmoid(z(3 * h + j));
      const double c = f_g * c_prev(j) + i_g * g_g;
      const double ct = std::tanh(c);
      gi(t, j) = i_g;
      gf(t, j) = f_g;
      gg(t, j) = g_g;
      go(t, j) = o_g;
      cell(t, j) = c;
      cell_tanh(t, j) = ct;
      hidden(t, j) = o_g * ct;
    }
    h_prev = hidden.row(t).transpose();
    c_prev = cell.row(t).transpose();
  }
  if (cache) {
    cache->input = seq;
    cache->gate_i = std::move(gi);
    cache->gate_f = std::move(gf);
    cache->gate_g = std::move(gg);
    cache->gate_o = std::move(go);
    cache->cell = std::move(cell);
    cache->cell_tanh = std::move(cell_tanh);
    cache->hidden = hidden;
  }
  return hidden;
}

LstmGrads lstm_backward(const LstmParams& p, const LstmCache& cache,
                        const Mat& d_hidden, const Mat& d_cell_final) {
  const long t_count = cache.input.rows();
  const int h = p.hidden_dim();
  if (d_hidden.rows() != t_count || d_hidden.cols() != h) {
    throw DataError("lstm_backward: d_hidden shape mismatch");
  }

  LstmGrads g;
  g.w_in = Mat::Zero(p.w_in.rows(), p.w_in.cols());
  g.w_rec = Mat::Zero(p.w_rec.rows(), p.w_rec.cols());
  g.bias = Mat::Zero(p.bias.rows(), 1);
  g.input = Mat::Zero(t_count, p.input_dim());

  Vec dh_next = Vec::Zero(h);
  Vec dc_next = Vec::Zero(h);
  if (d_cell_final.size() > 0) {
    if (d_cell_final.size() != h) {
      throw DataError("lstm_backward: d_cell_final size mismatch");
    }
    // Accept either a row or a column.
    dc_next = d_cell_final.reshaped();
  }

  Vec dz(4 * h);
  for (long t = t_count - 1; t >= 0; --t) {
    for (int j = 0; j < h; ++j) {
      const double dh = d_hidden(t, j) + dh_next(j);
      const double o_g = cache.gate_o(t, j);
      const double ct = cache.cell_tanh(t, j);
      const double dz_o = dh * ct * o_g * (1.0 - o_g);
      const double dc = dh * o_g * (1.0 - ct * ct) + dc_next(j);
      const double i_g = cache.gate_i(t, j);
      const double f_g = cache.gate_f(t, j);
      const double g_g = cache.gate_g(t, j);
      const double c_prev = (t > 0) ? cache.cell(t - 1, j) : 0.0;
      const double dz_i = dc * g_g * i_g * (1.0 - i_g);
      const double dz_f = dc * c_prev * f_g * (1.0 - f_g);
      const double dz_g = dc * i_g * (1.0 - g_g * g_g);
      dz(j) = dz_i;
      dz(h + j) = dz_f;
      dz(2 * h + j) = dz_g;
      dz(3 * h + j) = dz_o;
      dc_next(j) = dc * f_g;
    }
    g.w_in.noalias() += dz * cache.input.row(t);
    if (t > 0) {
      g.w_rec.noalias() += dz * cache.hidden.row(t - 1);
    }
    g.bias += dz;
    g.input.row(t) = (p.w_in.transpose() * dz).transpose();
    dh_next = p.w_rec.transpose() * dz;
  }
  return g;
}

Dense make_dense(int in_dim, int out_dim, Rng& rng) {
  Dense d;
  const double scale = 1.0 / std::sqrt(static_cast<double>(in_dim));
  d.w = Mat(out_dim, in_dim);
  fill_uniform(d.w, scale, rng);
  d.b = Mat::Zero(out_dim, 1);
  return d;
}

Vec dense_forward(const Dense& d, const Vec& x) {
  if (x.size() != d.w.cols()) throw DataError("dense_forward: dim mismatch");
  return d.w * x + d.b.col(0);
}

DenseGrads dense_backward(const Dense& d, const Vec& x, const Vec& d_out) {
  DenseGrads g;
  g.w = d_out * x.transpose();
  g.b = d_out;
  g.input = d.w.transpose() * d_out;
  return g;
}

Mat blstm_forward(const BlstmParams& p, const Mat& seq, BlstmCache* cache) {
  const long t_count = seq.rows();
  const int h = p.fwd.hidden_dim();
  if (p.bwd.hidden_dim() != h) {
    throw DataError("blstm_forward: direction hidden dims differ");
  }
  const Mat reversed = seq.colwise().reverse();
  BlstmCache local;
  BlstmCache* c = cache ? cache : &local;
  const Mat h_fwd = lstm_forward(p.fwd, seq, &c->fwd);
  const Mat h_bwd = lstm_forward(p.bwd, reversed, &c->bwd);
  Mat out(t_count, 2 * h);
  out.leftCols(h) = h_fwd;
  out.rightCols(h) = h_bwd.colwise().reverse();
  return out;
}

BlstmGrads blstm_backward(const BlstmParams& p, const BlstmCache& cache,
                          const Mat& d_hidden) {
  const int h = p.fwd.hidden_dim();
  const long t_count = cache.fwd.input.rows();
  if (d_hidden.rows() != t_count || d_hidden.cols() != 2 * h) {
    throw DataError("blstm_backward: d_hidden shape mismatch");
  }
  BlstmGrads g;
  g.fwd = lstm_backward(p.fwd, cache.fwd, d_hidden.leftCols(h));
  const Mat d_bwd = d_hidden.rightCols(h).colwise().reverse();
  g.bwd = lstm_backward(p.bwd, cache.bwd, d_bwd);
  g.input = g.fwd.input + g.bwd.input.colwise().reverse();
  return g;
}

double global_norm(const std::vector<Mat>& grads) {
  double sq = 0.0;
  for (const auto& g : grads) sq += g.squaredNorm();
  return std::sqrt(sq);
}

void clip_gradients(std::vector<Mat>& grads, double threshold) {
  if (threshold <= 0.0) throw ConfigError("clip_gradients: threshold <= 0");
  const double norm = global_norm(grads);
  if (norm > threshold) {
    const double scale = threshold / norm;
    for (auto& g : grads) g *= scale;
  }
}

void AdamState::step(const std::vector<Mat*>& params,
                     const std::vector<Mat>& grads) {
  if (params.size() != grads.size()) {
    throw DataError("adam: params/grads count mismatch");
  }
  if (m.empty()) {
    for (const auto* p : params) {
      m.push_back(Mat::Zero(p->rows(), p->cols()));
      v.push_back(Mat::Zero(p->rows(), p->cols()));
    }
  }
  ++t;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->rows() != grads[i].rows() ||
        params[i]->cols() != grads[i].cols()) {
      throw DataError("adam: tensor shape mismatch");
    }
    m[i] = beta1 * m[i] + (1.0 - beta1) * grads[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * grads[i].cwiseProduct(grads[i]);
    const Mat m_hat = m[i] / bc1;
    const Mat v_hat = v[i] / bc2;
    *params[i] -= lr * m_hat.cwiseQuotient(
                           v_hat.cwiseSqrt() + Mat::Constant(v_hat.rows(),
                                                             v_hat.cols(), eps));
  }
}

}  // namespace csat::nn
