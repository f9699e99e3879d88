#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "csat/corpus.hpp"
#include "csat/nn.hpp"
#include "csat/svr.hpp"

namespace csat {

enum class FeatureSpec {
  Mean2d,    // mean(valence, satisfaction)
  Mean3d,    // mean(valence, activation, satisfaction)
  Extended,  // per dim (val, act, sat): mean, population std, q75-q25
};

FeatureSpec feature_spec_from_string(const std::string& s);
std::string feature_spec_to_string(FeatureSpec spec);
int feature_dim(FeatureSpec spec);

// Statistics of the per-utterance score sequence. Quantiles use linear
// interpolation on the sorted values. Empty input raises DataError.
Eigen::VectorXd aggregate_features(const std::vector<SentimentScores>& scores,
                                   FeatureSpec spec);

// Per-utterance score sequence as a T x dim matrix; dim 2 = (val, sat),
// dim 3 = (val, act, sat), matching the feature spec orderings.
Eigen::MatrixXd score_sequence(const std::vector<SentimentScores>& scores,
                               int dim);

enum class BlstmReadout { FinalStates, MeanPool };

struct BlstmCsatHyper {
  int hidden = 20;  // per direction
  double lr = 1e-3;
  int batch_size = 10;
  int max_epochs = 30;
  double clip_threshold = 1.0;
  std::uint64_t seed = 0;
  BlstmReadout readout = BlstmReadout::FinalStates;
};

struct BlstmRegressor {
  nn::BlstmParams blstm;
  nn::Dense head;  // 2H -> 1
  int input_dim = 3;
  BlstmReadout readout = BlstmReadout::FinalStates;

  std::vector<nn::Mat*> tensors() {
    auto t = blstm.tensors();
    t.push_back(&head.w);
    t.push_back(&head.b);
    return t;
  }
};

BlstmRegressor make_blstm_regressor(int input_dim,
                                    const BlstmCsatHyper& hyper);

struct BlstmTrainStats {
  std::vector<double> epoch_loss;
};

// Sequences are bucketed by length (batches of batch_size, ascending
// length) and zero-padded within each batch; each sequence's readout uses
// its true length, so padding never reaches the loss. MSE loss, Adam,
// global-norm clipping.
BlstmTrainStats train_blstm_csat(BlstmRegressor& model,
                                 const std::vector<Eigen::MatrixXd>& sequences,
                                 const std::vector<double>& csat,
                                 const BlstmCsatHyper& hyper);

double predict_blstm_csat_raw(const BlstmRegressor& model,
                              const Eigen::MatrixXd& seq);

// Prediction clamped to [1, 5].
double predict_blstm_csat(const BlstmRegressor& model,
                          const Eigen::MatrixXd& seq);

// Batch prediction over zero-padded sequences with explicit true lengths;
// results are identical to predicting each sequence alone.
std::vector<double> predict_blstm_csat_batch(
    const BlstmRegressor& model, const Eigen::MatrixXd& padded /* B*T x D */,
    const std::vector<int>& lengths, int max_len);

void save_blstm_regressor(const std::string& path,
                          const BlstmRegressor& model);
BlstmRegressor load_blstm_regressor(const std::string& path);

void save_svr_model(const std::string& path, const SvrModel& model,
                    FeatureSpec spec);
SvrModel load_svr_model(const std::string& path, FeatureSpec* spec = nullptr);

}  // namespace csat
