#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "csat/corpus.hpp"
#include "csat/nn.hpp"

namespace csat {

// Per-utterance inputs: stacked LFBE frames plus word vectors. The lexical
// matrix always has at least one row (a zero row for empty transcripts);
// the acoustic matrix gets the same treatment when no audio exists.
struct UtteranceFeatures {
  Eigen::MatrixXd acoustic;  // T x 120
  Eigen::MatrixXd lexical;   // L x 300
};

enum class SentimentLoss { Mse, Ccc };

struct SentimentHyper {
  int acoustic_layers = 5;
  int acoustic_hidden = 64;
  int lexical_hidden = 64;
  double lr = 1e-3;
  int batch_size = 10;
  int max_epochs = 30;
  double clip_threshold = 1.0;
  std::uint64_t seed = 0;
  SentimentLoss loss = SentimentLoss::Mse;
};

// Stacked acoustic LSTM + single lexical LSTM; their final hidden states
// are concatenated and fed to one dense head per sentiment dimension
// (activation, valence, satisfaction).
struct SentimentModel {
  std::vector<nn::LstmParams> acoustic;
  nn::LstmParams lexical;
  std::array<nn::Dense, 3> heads;

  std::vector<nn::Mat*> tensors();
};

SentimentModel make_sentiment_model(int acoustic_dim, int lexical_dim,
                                    const SentimentHyper& hyper);

// Raw (unclamped) head outputs, order (activation, valence, satisfaction).
Eigen::Vector3d sentiment_forward_raw(const SentimentModel& model,
                                      const UtteranceFeatures& feats);

// Inference contract: scores clamped to [-3, +3].
SentimentScores predict_sentiment(const SentimentModel& model,
                                  const UtteranceFeatures& feats);

// Gradients of a scalar loss w.r.t. every model tensor, aligned with
// tensors(). d_output is dLoss/d(raw head outputs).
std::vector<nn::Mat> sentiment_backward(const SentimentModel& model,
                                        const UtteranceFeatures& feats,
                                        const Eigen::Vector3d& d_output);

struct SentimentExample {
  UtteranceFeatures features;
  SentimentScores target;
};

struct SentimentTrainStats {
  std::vector<double> epoch_loss;
  std::vector<std::array<double, 3>> epoch_ccc;  // act, val, sat on train set
};

SentimentTrainStats train_sentiment(SentimentModel& model,
                                    const std::vector<SentimentExample>& data,
                                    const SentimentHyper& hyper);

// CCC per dimension, order (activation, valence, satisfaction).
std::array<double, 3> evaluate_agreement(
    const std::vector<SentimentScores>& predictions,
    const std::vector<SentimentScores>& annotations);

void save_sentiment_model(const std::string& path, const SentimentModel& model,
                          const SentimentHyper& hyper);
SentimentModel load_sentiment_model(const std::string& path);

}  // namespace csat
