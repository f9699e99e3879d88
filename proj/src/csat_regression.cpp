#include "csat/csat_regression.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "csat/checkpoint.hpp"
#include "csat/errors.hpp"

namespace csat {

FeatureSpec feature_spec_from_string(const std::string& s) {
  if (s == "2d") return FeatureSpec::Mean2d;
  if (s == "3d") return FeatureSpec::Mean3d;
  if (s == "extended") return FeatureSpec::Extended;
  throw ConfigError("unknown feature spec: " + s);
}

std::string feature_spec_to_string(FeatureSpec spec) {
  switch (spec) {
    case FeatureSpec::Mean2d: return "2d";
    case FeatureSpec::Mean3d: return "3d";
    case FeatureSpec::Extended: return "extended";
  }
  return "unknown";
}

int feature_dim(FeatureSpec spec) {
  switch (spec) {
    case FeatureSpec::Mean2d: return 2;
    case FeatureSpec::Mean3d: return 3;
    case FeatureSpec::Extended: return 9;
  }
  return 0;
}

namespace {

struct DimStats {
  double mean = 0.0;
  double std_dev = 0.0;  // population
  double iqr = 0.0;      // q75 - q25, linear interpolation
};

double interp_quantile(std::vector<double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

DimStats dim_stats(const std::vector<double>& v) {
  DimStats s;
  const double n = static_cast<double>(v.size());
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double sq = 0.0;
  for (double x : v) sq += (x - s.mean) * (x - s.mean);
  s.std_dev = std::sqrt(sq / n);
  std::vector<double> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  s.iqr = interp_quantile(sorted, 0.75) - interp_quantile(sorted, 0.25);
  return s;
}

}  // namespace

Eigen::VectorXd aggregate_features(const std::vector<SentimentScores>& scores,
                                   FeatureSpec spec) {
  if (scores.empty()) throw DataError("aggregate_features: empty sequence");
  std::vector<double> val, act, sat;
  val.reserve(scores.size());
  act.reserve(scores.size());
  sat.reserve(scores.size());
  for (const auto& s : scores) {
    val.push_back(s.valence);
    act.push_back(s.activation);
    sat.push_back(s.satisfaction);
  }
  const DimStats sv = dim_stats(val);
  const DimStats sa = dim_stats(act);
  const DimStats ss = dim_stats(sat);

  Eigen::VectorXd out(feature_dim(spec));
  switch (spec) {
    case FeatureSpec::Mean2d:
      out << sv.mean, ss.mean;
      break;
    case FeatureSpec::Mean3d:
      out << sv.mean, sa.mean, ss.mean;
      break;
    case FeatureSpec::Extended:
      out << sv.mean, sv.std_dev, sv.iqr, sa.mean, sa.std_dev, sa.iqr,
          ss.mean, ss.std_dev, ss.iqr;
      break;
  }
  return out;
}

Eigen::MatrixXd score_sequence(const std::vector<SentimentScores>& scores,
                               int dim) {
  if (scores.empty()) throw DataError("score_sequence: empty sequence");
  if (dim != 2 && dim != 3) throw ConfigError("score_sequence: dim must be 2 or 3");
  Eigen::MatrixXd seq(static_cast<long>(scores.size()), dim);
  for (std::size_t t = 0; t < scores.size(); ++t) {
    const auto r = static_cast<long>(t);
    if (dim == 2) {
      seq(r, 0) = scores[t].valence;
      seq(r, 1) = scores[t].satisfaction;
    } else {
      seq(r, 0) = scores[t].valence;
      seq(r, 1) = scores[t].activation;
      seq(r, 2) = scores[t].satisfaction;
    }
  }
  return seq;
}

BlstmRegressor make_blstm_regressor(int input_dim,
                                    const BlstmCsatHyper& hyper) {
  Rng rng(hyper.seed);
  BlstmRegressor model;
  model.input_dim = input_dim;
  model.readout = hyper.readout;
  model.blstm.fwd = nn::make_lstm(input_dim, hyper.hidden, rng);
  model.blstm.bwd = nn::make_lstm(input_dim, hyper.hidden, rng);
  model.head = nn::make_dense(2 * hyper.hidden, 1, rng);
  return model;
}

namespace {

// Forward with readout on a single sequence; returns the raw prediction
// and fills the cache for backward.
double blstm_csat_forward(const BlstmRegressor& model,
                          const Eigen::MatrixXd& seq, nn::BlstmCache* cache,
                          nn::Mat* hidden_out) {
  const nn::Mat hidden = nn::blstm_forward(model.blstm, seq, cache);
  const int h2 = static_cast<int>(hidden.cols());
  nn::Vec readout(h2);
  if (model.readout == BlstmReadout::FinalStates) {
    const int h = h2 / 2;
    readout.head(h) = hidden.row(hidden.rows() - 1).head(h).transpose();
    readout.tail(h) = hidden.row(0).tail(h).transpose();
  } else {
    readout = hidden.colwise().mean().transpose();
  }
  if (hidden_out) *hidden_out = hidden;
  return nn::dense_forward(model.head, readout)(0);
}

}  // namespace

double predict_blstm_csat_raw(const BlstmRegressor& model,
                              const Eigen::MatrixXd& seq) {
  if (seq.rows() < 1) throw DataError("predict_blstm_csat: empty sequence");
  if (seq.cols() != model.input_dim) {
    throw DataError("predict_blstm_csat: dim mismatch");
  }
  return blstm_csat_forward(model, seq, nullptr, nullptr);
}

double predict_blstm_csat(const BlstmRegressor& model,
                          const Eigen::MatrixXd& seq) {
  return std::min(5.0, std::max(1.0, predict_blstm_csat_raw(model, seq)));
}

std::vector<double> predict_blstm_csat_batch(const BlstmRegressor& model,
                                             const Eigen::MatrixXd& padded,
                                             const std::vector<int>& lengths,
                                             int max_len) {
  const auto batch = static_cast<long>(lengths.size());
  if (padded.rows() != batch * max_len) {
    throw DataError("predict_blstm_csat_batch: padded shape mismatch");
  }
  std::vector<double> out;
  out.reserve(lengths.size());
  for (long b = 0; b < batch; ++b) {
    const int len = lengths[static_cast<std::size_t>(b)];
    if (len < 1 || len > max_len) {
      throw DataError("predict_blstm_csat_batch: bad true length");
    }
    // masked readout: only the first `len` rows of the slot participate
    out.push_back(
        predict_blstm_csat(model, padded.block(b * max_len, 0, len,
                                               padded.cols())));
  }
  return out;
}

BlstmTrainStats train_blstm_csat(BlstmRegressor& model,
                                 const std::vector<Eigen::MatrixXd>& sequences,
                                 const std::vector<double>& csat,
                                 const BlstmCsatHyper& hyper) {
  if (sequences.empty()) throw DataError("train_blstm_csat: empty corpus");
  if (sequences.size() != csat.size()) {
    throw DataError("train_blstm_csat: sequences/labels length mismatch");
  }
  for (const auto& s : sequences) {
    if (s.cols() != model.input_dim) {
      throw DataError("train_blstm_csat: sequence dim mismatch");
    }
    if (s.rows() < 1) throw DataError("train_blstm_csat: empty sequence");
  }

  // Sort by length so each mini-batch pads similar-length sequences.
  std::vector<std::size_t> order(sequences.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sequences[a].rows() < sequences[b].rows();
  });

  const auto params = model.tensors();
  nn::AdamState adam;
  adam.lr = hyper.lr;

  // Start the head at the label mean: with Adam steps bounded by ~lr the
  // output would otherwise spend most of the epoch budget crawling from 0
  // up to the rating scale.
  if (model.head.b(0, 0) == 0.0) {
    model.head.b(0, 0) =
        std::accumulate(csat.begin(), csat.end(), 0.0) /
        static_cast<double>(csat.size());
  }

  BlstmTrainStats stats;
  const int h = hyper.hidden;
  for (int epoch = 0; epoch < hyper.max_epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(hyper.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(hyper.batch_size));
      const auto batch_n = static_cast<double>(end - start);

      std::vector<nn::Mat> grads;
      for (const auto* p : params) {
        grads.push_back(nn::Mat::Zero(p->rows(), p->cols()));
      }
      for (std::size_t b = start; b < end; ++b) {
        const auto& seq = sequences[order[b]];
        const double target = csat[order[b]];
        nn::BlstmCache cache;
        nn::Mat hidden;
        const double pred = blstm_csat_forward(model, seq, &cache, &hidden);
        const double err = pred - target;
        epoch_loss += err * err;

        // d(MSE term)/d(pred), averaged over the batch
        const double d_pred = 2.0 * err / batch_n;
        const int h2 = 2 * h;
        nn::Vec readout(h2);
        if (model.readout == BlstmReadout::FinalStates) {
          readout.head(h) = hidden.row(hidden.rows() - 1).head(h).transpose();
          readout.tail(h) = hidden.row(0).tail(h).transpose();
        } else {
          readout = hidden.colwise().mean().transpose();
        }
        nn::Vec d_out(1);
        d_out(0) = d_pred;
        const auto head_g = nn::dense_backward(model.head, readout, d_out);

        nn::Mat d_hidden = nn::Mat::Zero(hidden.rows(), h2);
        if (model.readout == BlstmReadout::FinalStates) {
          d_hidden.row(hidden.rows() - 1).head(h) =
              head_g.input.head(h).transpose();
          d_hidden.row(0).tail(h) = head_g.input.tail(h).transpose();
        } else {
          const double inv_t = 1.0 / static_cast<double>(hidden.rows());
          for (long t = 0; t < hidden.rows(); ++t) {
            d_hidden.row(t) = head_g.input.transpose() * inv_t;
          }
        }
        const auto blstm_g = nn::blstm_backward(model.blstm, cache, d_hidden);
        grads[0] += blstm_g.fwd.w_in;
        grads[1] += blstm_g.fwd.w_rec;
        grads[2] += blstm_g.fwd.bias;
        grads[3] += blstm_g.bwd.w_in;
        grads[4] += blstm_g.bwd.w_rec;
        grads[5] += blstm_g.bwd.bias;
        grads[6] += head_g.w;
        grads[7] += head_g.b;
      }
      nn::clip_gradients(grads, hyper.clip_threshold);
      adam.step(params, grads);
    }
    stats.epoch_loss.push_back(epoch_loss /
                               static_cast<double>(sequences.size()));
  }
  return stats;
}

void save_blstm_regressor(const std::string& path,
                          const BlstmRegressor& model) {
  Checkpoint ckpt;
  ckpt.config = {{"model", "blstm_csat"},
                 {"input_dim", model.input_dim},
                 {"hidden", model.blstm.fwd.hidden_dim()},
                 {"readout", model.readout == BlstmReadout::FinalStates
                                 ? "final"
                                 : "meanpool"}};
  ckpt.tensors = {{"fwd.w_in", model.blstm.fwd.w_in},
                  {"fwd.w_rec", model.blstm.fwd.w_rec},
                  {"fwd.bias", model.blstm.fwd.bias},
                  {"bwd.w_in", model.blstm.bwd.w_in},
                  {"bwd.w_rec", model.blstm.bwd.w_rec},
                  {"bwd.bias", model.blstm.bwd.bias},
                  {"head.w", model.head.w},
                  {"head.b", model.head.b}};
  save_checkpoint(path, ckpt);
}

BlstmRegressor load_blstm_regressor(const std::string& path) {
  const Checkpoint ckpt = load_checkpoint(path);
  if (ckpt.config.value("model", "") != "blstm_csat") {
    throw DataError("checkpoint is not a blstm_csat model: " + path);
  }
  BlstmRegressor model;
  model.input_dim = ckpt.config.at("input_dim").get<int>();
  model.readout = ckpt.config.value("readout", "final") == "meanpool"
                      ? BlstmReadout::MeanPool
                      : BlstmReadout::FinalStates;
  model.blstm.fwd.w_in = ckpt.tensor("fwd.w_in");
  model.blstm.fwd.w_rec = ckpt.tensor("fwd.w_rec");
  model.blstm.fwd.bias = ckpt.tensor("fwd.bias");
  model.blstm.bwd.w_in = ckpt.tensor("bwd.w_in");
  model.blstm.bwd.w_rec = ckpt.tensor("bwd.w_rec");
  model.blstm.bwd.bias = ckpt.tensor("bwd.bias");
  model.head.w = ckpt.tensor("head.w");
  model.head.b = ckpt.tensor("head.b");
  return model;
}

void save_svr_model(const std::string& path, const SvrModel& model,
                    FeatureSpec spec) {
  Checkpoint ckpt;
  ckpt.config = {{"model", "nu_svr"},
                 {"features", feature_spec_to_string(spec)},
                 {"kernel", kernel_kind_to_string(model.kernel.kind)},
                 {"gamma", model.kernel.gamma},
                 {"coef0", model.kernel.coef0},
                 {"degree", model.kernel.degree},
                 {"nu", model.nu},
                 {"C", model.c},
                 {"bias", model.bias},
                 {"epsilon", model.epsilon}};
  ckpt.tensors = {{"support_vectors", model.support_vectors},
                  {"dual_coef", model.dual_coef}};
  save_checkpoint(path, ckpt);
}

SvrModel load_svr_model(const std::string& path, FeatureSpec* spec) {
  const Checkpoint ckpt = load_checkpoint(path);
  if (ckpt.config.value("model", "") != "nu_svr") {
    throw DataError("checkpoint is not a nu_svr model: " + path);
  }
  SvrModel model;
  model.kernel.kind =
      kernel_kind_from_string(ckpt.config.at("kernel").get<std::string>());
  model.kernel.gamma = ckpt.config.at("gamma").get<double>();
  model.kernel.coef0 = ckpt.config.at("coef0").get<double>();
  model.kernel.degree = ckpt.config.at("degree").get<int>();
  model.nu = ckpt.config.at("nu").get<double>();
  model.c = ckpt.config.at("C").get<double>();
  model.bias = ckpt.config.at("bias").get<double>();
  model.epsilon = ckpt.config.at("epsilon").get<double>();
  model.support_vectors = ckpt.tensor("support_vectors");
  model.dual_coef = ckpt.tensor("dual_coef");
  if (spec) {
    *spec = feature_spec_from_string(
        ckpt.config.at("features").get<std::string>());
  }
  return model;
}

}  // namespace csat
