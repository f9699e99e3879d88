#pragma once

#include <optional>
#include <string>
#include <vector>

#include "csat/corpus.hpp"
#include "csat/csat_regression.hpp"
#include "csat/lexical_frontend.hpp"
#include "csat/metrics.hpp"
#include "csat/sentiment_model.hpp"
#include "csat/svr.hpp"
#include "csat/synthetic.hpp"
#include "json.hpp"

namespace csat {

inline constexpr const char* kVersionString = "csat 0.1.0";

// Declarative run configuration; unknown keys are rejected so typos never
// silently fall back to defaults. The fully resolved config is embedded
// in every report.
struct RunConfig {
  std::uint64_t seed = 42;
  std::string manifest;                       // empty when generating
  std::optional<GeneratorConfig> generator;
  int filter_min = 5;
  int filter_max = 50;
  int folds = 5;
  std::string scores = "annotated";           // annotated | predicted
  std::string sentiment_checkpoint;
  std::string embeddings;
  std::string audio_root;
  std::string model = "svr";                  // svr | blstm | both

  FeatureSpec svr_features = FeatureSpec::Mean2d;
  KernelSpec svr_kernel = KernelSpec::linear();
  double svr_nu = 0.5;
  double svr_c = 1.0;

  BlstmCsatHyper blstm;
  int blstm_input_dim = 3;

  nlohmann::json resolved() const;
};

RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

struct ModelEvaluation {
  std::string model_name;
  CrossvalResult crossval;
  // Pooled out-of-fold Spearman on all data and the two CSAT subsets;
  // NaN with a marker string when degenerate.
  double rho_all = 0.0, p_all = 1.0;
  double rho_r1 = 0.0, p_r1 = 1.0;
  double rho_r2 = 0.0, p_r2 = 1.0;
  int n_all = 0, n_r1 = 0, n_r2 = 0;
};

struct CorrelationCell {
  bool valid = false;
  double rho = 0.0;
  double p_value = 1.0;
  std::string error;  // degenerate-series marker
};

// 2 x 3 table: (conversation, utterance) level x (valence, activation,
// satisfaction). Utterance level pairs each utterance's score with its
// conversation's CSAT; conversation level uses per-conversation means.
struct CorrelationTable {
  CorrelationCell conversation[3];
  CorrelationCell utterance[3];
};

struct PipelineReport {
  nlohmann::json config;
  std::string version = kVersionString;
  int n_conversations = 0;
  std::size_t n_utterances = 0;
  double mean_length = 0.0;
  CorrelationTable correlations;
  std::vector<ModelEvaluation> models;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

// Per-conversation score sequences (feedback stripped). "annotated" reads
// the manifest annotations; "predicted" runs the sentiment model over
// audio + transcripts.
std::vector<std::vector<SentimentScores>> extract_scores(
    const Corpus& corpus, const RunConfig& cfg);

CorrelationTable correlation_report(
    const std::vector<std::vector<SentimentScores>>& scores,
    const std::vector<double>& csat);

// Full chain: strip -> filter -> scores -> k-fold CSAT regression ->
// subset analysis. Any stage error propagates with stage context.
PipelineReport run_pipeline(const RunConfig& cfg);

// Feature assembly for one utterance (zero acoustic row when no audio).
UtteranceFeatures utterance_features(const Utterance& utt,
                                     const std::string& audio_root,
                                     const EmbeddingTable& table);

}  // namespace csat
