#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "csat/corpus.hpp"
#include "csat/rng.hpp"

namespace csat {

enum class CsatLink {
  MeanValence,  // CSAT = affine(mean latent valence) + rounding
  TailValence,  // CSAT driven by the final third of the conversation
};

CsatLink csat_link_from_string(const std::string& s);
std::string csat_link_to_string(CsatLink link);

// Latent (act, val, sat) follow a bounded random walk with reflection at
// +-3; observed (annotated) scores add emission noise. CSAT comes from
// the configured link, rounded and clamped to [1, 5]. Conversations pass
// the standard corpus filters by construction, with two trailing
// feedback utterances appended for the stripping stage to remove.
struct GeneratorConfig {
  std::uint64_t seed = 1;
  int n_conversations = 100;
  int min_length = 5;
  int max_length = 50;
  double drift = 0.4;           // latent walk step scale
  double emission_noise = 0.5;  // sigma on observed scores
  CsatLink link = CsatLink::MeanValence;
  double link_gain = 1.6;       // csat_raw = 3 + gain * link signal
  bool round_csat = true;
};

Corpus generate_corpus(const GeneratorConfig& cfg);

struct OracleEstimate {
  double mean_rho = 0.0;
  double std_error = 0.0;  // predictive SE for one new estimator realization
  int replicates = 0;
};

// Monte Carlo estimate of the Spearman correlation between mean observed
// valence and CSAT under the mean-valence link, simulating the actual
// estimator: each replicate draws `folds` independent datasets of
// `dataset_size` conversations and averages their per-dataset Spearman.
// std_error covers both the oracle mean and one fresh realization, i.e.
// sd * sqrt(1/replicates + 1).
OracleEstimate analytic_correlation(const GeneratorConfig& cfg,
                                    int dataset_size, int folds,
                                    int replicates, std::uint64_t oracle_seed);

// Tone burst whose energy encodes activation; used when the generator is
// asked to synthesize audio.
std::vector<double> synthesize_utterance_audio(double activation,
                                               int sample_rate, Rng& rng);

}  // namespace csat
