#include "csat/sentiment_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "csat/checkpoint.hpp"
#include "csat/errors.hpp"
#include "csat/metrics.hpp"

namespace csat {

std::vector<nn::Mat*> SentimentModel::tensors() {
  std::vector<nn::Mat*> out;
  for (auto& layer : acoustic) {
    for (auto* t : layer.tensors()) out.push_back(t);
  }
  for (auto* t : lexical.tensors()) out.push_back(t);
  for (auto& head : heads) {
    for (auto* t : head.tensors()) out.push_back(t);
  }
  return out;
}

SentimentModel make_sentiment_model(int acoustic_dim, int lexical_dim,
                                    const SentimentHyper& hyper) {
  if (hyper.acoustic_layers < 1) {
    throw ConfigError("sentiment model needs at least one acoustic layer");
  }
  Rng rng(hyper.seed);
  SentimentModel model;
  int in_dim = acoustic_dim;
  for (int i = 0; i < hyper.acoustic_layers; ++i) {
    model.acoustic.push_back(nn::make_lstm(in_dim, hyper.acoustic_hidden, rng));
    in_dim = hyper.acoustic_hidden;
  }
  model.lexical = nn::make_lstm(lexical_dim, hyper.lexical_hidden, rng);
  const int concat = hyper.acoustic_hidden + hyper.lexical_hidden;
  for (auto& head : model.heads) head = nn::make_dense(concat, 1, rng);
  return model;
}

namespace {

struct ForwardCaches {
  std::vector<nn::LstmCache> acoustic;  // one per layer
  nn::LstmCache lexical;
  nn::Vec concat;
};

Eigen::Vector3d forward_impl(const SentimentModel& model,
                             const UtteranceFeatures& feats,
                             ForwardCaches* caches) {
  if (feats.acoustic.rows() < 1 || feats.lexical.rows() < 1) {
    throw DataError("sentiment forward: both feature streams must be nonempty");
  }
  std::vector<nn::LstmCache> local_caches(model.acoustic.size());
  nn::Mat seq = feats.acoustic;
  for (std::size_t i = 0; i < model.acoustic.size(); ++i) {
    seq = nn::lstm_forward(model.acoustic[i], seq,
                           caches ? &caches->acoustic[i] : &local_caches[i]);
  }
  nn::LstmCache lex_local;
  const nn::Mat lex_hidden = nn::lstm_forward(
      model.lexical, feats.lexical, caches ? &caches->lexical : &lex_local);

  const int ha = model.acoustic.back().hidden_dim();
  const int hl = model.lexical.hidden_dim();
  nn::Vec concat(ha + hl);
  concat.head(ha) = seq.row(seq.rows() - 1).transpose();
  concat.tail(hl) = lex_hidden.row(lex_hidden.rows() - 1).transpose();
  if (caches) caches->concat = concat;

  Eigen::Vector3d out;
  for (int k = 0; k < 3; ++k) {
    out(k) = nn::dense_forward(model.heads[static_cast<std::size_t>(k)],
                               concat)(0);
  }
  return out;
}

}  // namespace

Eigen::Vector3d sentiment_forward_raw(const SentimentModel& model,
                                      const UtteranceFeatures& feats) {
  return forward_impl(model, feats, nullptr);
}

SentimentScores predict_sentiment(const SentimentModel& model,
                                  const UtteranceFeatures& feats) {
  const Eigen::Vector3d raw = sentiment_forward_raw(model, feats);
  return SentimentScores{raw(0), raw(1), raw(2)}.clamped();
}

std::vector<nn::Mat> sentiment_backward(const SentimentModel& model,
                                        const UtteranceFeatures& feats,
                                        const Eigen::Vector3d& d_output) {
  ForwardCaches caches;
  caches.acoustic.resize(model.acoustic.size());
  forward_impl(model, feats, &caches);

  const int ha = model.acoustic.back().hidden_dim();
  const int hl = model.lexical.hidden_dim();

  nn::Vec d_concat = nn::Vec::Zero(ha + hl);
  std::vector<nn::DenseGrads> head_grads(3);
  for (int k = 0; k < 3; ++k) {
    nn::Vec d_out(1);
    d_out(0) = d_output(k);
    head_grads[static_cast<std::size_t>(k)] = nn::dense_backward(
        model.heads[static_cast<std::size_t>(k)], caches.concat, d_out);
    d_concat += head_grads[static_cast<std::size_t>(k)].input;
  }

  // Loss touches only the final hidden state of each branch.
  std::vector<nn::LstmGrads> acoustic_grads(model.acoustic.size());
  {
    const long t_top = caches.acoustic.back().hidden.rows();
    nn::Mat d_hidden = nn::Mat::Zero(t_top, ha);
    d_hidden.row(t_top - 1) = d_concat.head(ha).transpose();
    for (long i = static_cast<long>(model.acoustic.size()) - 1; i >= 0; --i) {
      acoustic_grads[static_cast<std::size_t>(i)] = nn::lstm_backward(
          model.acoustic[static_cast<std::size_t>(i)],
          caches.acoustic[static_cast<std::size_t>(i)], d_hidden);
      if (i > 0) d_hidden = acoustic_grads[static_cast<std::size_t>(i)].input;
    }
  }
  nn::LstmGrads lexical_grads;
  {
    const long t_lex = caches.lexical.hidden.rows();
    nn::Mat d_hidden = nn::Mat::Zero(t_lex, hl);
    d_hidden.row(t_lex - 1) = d_concat.tail(hl).transpose();
    lexical_grads = nn::lstm_backward(model.lexical, caches.lexical, d_hidden);
  }

  std::vector<nn::Mat> grads;
  for (auto& g : acoustic_grads) {
    grads.push_back(std::move(g.w_in));
    grads.push_back(std::move(g.w_rec));
    grads.push_back(std::move(g.bias));
  }
  grads.push_back(std::move(lexical_grads.w_in));
  grads.push_back(std::move(lexical_grads.w_rec));
  grads.push_back(std::move(lexical_grads.bias));
  for (auto& hg : head_grads) {
    grads.push_back(std::move(hg.w));
    grads.push_back(std::move(hg.b));
  }
  return grads;
}

SentimentTrainStats train_sentiment(SentimentModel& model,
                                    const std::vector<SentimentExample>& data,
                                    const SentimentHyper& hyper) {
  if (data.empty()) throw DataError("train_sentiment: empty training set");
  const auto params = model.tensors();
  nn::AdamState adam;
  adam.lr = hyper.lr;
  Rng rng(hyper.seed ^ 0x5e1ec7edULL);

  SentimentTrainStats stats;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < hyper.max_epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(hyper.batch_size)) {
      const std::size_t end = std::min(
          order.size(), start + static_cast<std::size_t>(hyper.batch_size));
      const auto batch_n = static_cast<double>(end - start);

      std::vector<nn::Mat> grads;
      for (const auto* p : params) {
        grads.push_back(nn::Mat::Zero(p->rows(), p->cols()));
      }
      std::vector<Eigen::Vector3d> preds, targets;
      for (std::size_t b = start; b < end; ++b) {
        const auto& ex = data[order[b]];
        preds.push_back(sentiment_forward_raw(model, ex.features));
        targets.push_back(Eigen::Vector3d(
            ex.target.activation, ex.target.valence, ex.target.satisfaction));
      }
      std::vector<Eigen::Vector3d> d_outs(preds.size(),
                                          Eigen::Vector3d::Zero());
      if (hyper.loss == SentimentLoss::Mse) {
        for (std::size_t b = 0; b < preds.size(); ++b) {
          const Eigen::Vector3d err = preds[b] - targets[b];
          epoch_loss += err.squaredNorm();
          d_outs[b] = 2.0 * err / batch_n;
        }
      } else {
        // 1 - CCC per head over the batch; gradient through the batch
        // moments, with a small regularizer against zero denominators.
        for (int k = 0; k < 3; ++k) {
          double mx = 0.0, my = 0.0;
          for (std::size_t b = 0; b < preds.size(); ++b) {
            mx += preds[b](k);
            my += targets[b](k);
          }
          mx /= batch_n;
          my /= batch_n;
          double vx = 0.0, vy = 0.0, cov = 0.0;
          for (std::size_t b = 0; b < preds.size(); ++b) {
            const double dx = preds[b](k) - mx;
            const double dy = targets[b](k) - my;
            vx += dx * dx;
            vy += dy * dy;
            cov += dx * dy;
          }
          vx /= batch_n;
          vy /= batch_n;
          cov /= batch_n;
          const double denom = vx + vy + (mx - my) * (mx - my) + 1e-8;
          const double ccc_k = 2.0 * cov / denom;
          epoch_loss += (1.0 - ccc_k) * batch_n / 3.0;
          for (std::size_t b = 0; b < preds.size(); ++b) {
            const double d_cov = (targets[b](k) - my) / batch_n;
            const double d_denom =
                2.0 * (preds[b](k) - mx) / batch_n + 2.0 * (mx - my) / batch_n;
            const double d_ccc = (2.0 * d_cov - ccc_k * d_denom) / denom;
            d_outs[b](k) = -d_ccc;
          }
        }
      }
      for (std::size_t b = 0; b < preds.size(); ++b) {
        const auto& ex = data[order[start + b]];
        const auto example_grads =
            sentiment_backward(model, ex.features, d_outs[b]);
        for (std::size_t g = 0; g < grads.size(); ++g) {
          grads[g] += example_grads[g];
        }
      }
      nn::clip_gradients(grads, hyper.clip_threshold);
      adam.step(params, grads);
    }
    stats.epoch_loss.push_back(epoch_loss / static_cast<double>(data.size()));

    // Train-set CCC per dimension for progress logging.
    std::vector<SentimentScores> preds, targets;
    preds.reserve(data.size());
    targets.reserve(data.size());
    for (const auto& ex : data) {
      preds.push_back(predict_sentiment(model, ex.features));
      targets.push_back(ex.target);
    }
    // Agreement needs at least two points; tiny train sets log zeros.
    if (data.size() >= 2) {
      stats.epoch_ccc.push_back(evaluate_agreement(preds, targets));
    } else {
      stats.epoch_ccc.push_back({0.0, 0.0, 0.0});
    }
  }
  return stats;
}

std::array<double, 3> evaluate_agreement(
    const std::vector<SentimentScores>& predictions,
    const std::vector<SentimentScores>& annotations) {
  if (predictions.size() != annotations.size()) {
    throw DataError("evaluate_agreement: length mismatch");
  }
  if (predictions.empty()) throw DataError("evaluate_agreement: empty input");
  std::vector<double> pa, pv, ps, aa, av, as;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    pa.push_back(predictions[i].activation);
    pv.push_back(predictions[i].valence);
    ps.push_back(predictions[i].satisfaction);
    aa.push_back(annotations[i].activation);
    av.push_back(annotations[i].valence);
    as.push_back(annotations[i].satisfaction);
  }
  return {ccc(pa, aa), ccc(pv, av), ccc(ps, as)};
}

void save_sentiment_model(const std::string& path, const SentimentModel& model,
                          const SentimentHyper& hyper) {
  Checkpoint ckpt;
  ckpt.config = {{"model", "sentiment"},
                 {"acoustic_layers", static_cast<int>(model.acoustic.size())},
                 {"acoustic_hidden", model.acoustic.back().hidden_dim()},
                 {"acoustic_dim", model.acoustic.front().input_dim()},
                 {"lexical_hidden", model.lexical.hidden_dim()},
                 {"lexical_dim", model.lexical.input_dim()},
                 {"lr", hyper.lr},
                 {"batch_size", hyper.batch_size},
                 {"max_epochs", hyper.max_epochs},
                 {"clip_threshold", hyper.clip_threshold},
                 {"seed", hyper.seed}};
  for (std::size_t i = 0; i < model.acoustic.size(); ++i) {
    const std::string prefix = "acoustic." + std::to_string(i) + ".";
    ckpt.tensors.emplace_back(prefix + "w_in", model.acoustic[i].w_in);
    ckpt.tensors.emplace_back(prefix + "w_rec", model.acoustic[i].w_rec);
    ckpt.tensors.emplace_back(prefix + "bias", model.acoustic[i].bias);
  }
  ckpt.tensors.emplace_back("lexical.w_in", model.lexical.w_in);
  ckpt.tensors.emplace_back("lexical.w_rec", model.lexical.w_rec);
  ckpt.tensors.emplace_back("lexical.bias", model.lexical.bias);
  const char* head_names[3] = {"head.act", "head.val", "head.sat"};
  for (std::size_t k = 0; k < 3; ++k) {
    ckpt.tensors.emplace_back(std::string(head_names[k]) + ".w",
                              model.heads[k].w);
    ckpt.tensors.emplace_back(std::string(head_names[k]) + ".b",
                              model.heads[k].b);
  }
  save_checkpoint(path, ckpt);
}

SentimentModel load_sentiment_model(const std::string& path) {
  const Checkpoint ckpt = load_checkpoint(path);
  if (ckpt.config.value("model", "") != "sentiment") {
    throw DataError("checkpoint is not a sentiment model: " + path);
  }
  SentimentModel model;
  const int layers = ckpt.config.at("acoustic_layers").get<int>();
  for (int i = 0; i < layers; ++i) {
    const std::string prefix = "acoustic." + std::to_string(i) + ".";
    nn::LstmParams p;
    p.w_in = ckpt.tensor(prefix + "w_in");
    p.w_rec = ckpt.tensor(prefix + "w_rec");
    p.bias = ckpt.tensor(prefix + "bias");
    model.acoustic.push_back(std::move(p));
  }
  model.lexical.w_in = ckpt.tensor("lexical.w_in");
  model.lexical.w_rec = ckpt.tensor("lexical.w_rec");
  model.lexical.bias = ckpt.tensor("lexical.bias");
  const char* head_names[3] = {"head.act", "head.val", "head.sat"};
  for (std::size_t k = 0; k < 3; ++k) {
    model.heads[k].w = ckpt.tensor(std::string(head_names[k]) + ".w");
    model.heads[k].b = ckpt.tensor(std::string(head_names[k]) + ".b");
  }
  return model;
}

}  // namespace csat
