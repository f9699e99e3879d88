#include "csat/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "csat/errors.hpp"
#include "csat/metrics.hpp"

namespace csat {

CsatLink csat_link_from_string(const std::string& s) {
  if (s == "mean") return CsatLink::MeanValence;
  if (s == "tail") return CsatLink::TailValence;
  throw ConfigError("unknown csat link: " + s);
}

std::string csat_link_to_string(CsatLink link) {
  return link == CsatLink::MeanValence ? "mean" : "tail";
}

namespace {

double reflect_into_range(double x) {
  while (x > 3.0 || x < -3.0) {
    if (x > 3.0) x = 6.0 - x;
    if (x < -3.0) x = -6.0 - x;
  }
  return x;
}

double clamp_score(double x) { return std::min(3.0, std::max(-3.0, x)); }

const char* kPositiveWords[] = {"great", "awesome", "fun",  "nice",
                                "love",  "cool",    "yes",  "happy"};
const char* kNegativeWords[] = {"boring", "bad",      "no",    "stop",
                                "awful",  "confused", "wrong", "sad"};
const char* kNeutralWords[] = {"the",  "a",     "you",    "i",      "it",
                               "chat", "talk",  "tell",   "me",     "about",
                               "music", "movies", "weather", "news"};

std::string sample_transcript(double valence, Rng& rng) {
  const int n_tokens = rng.uniform_int(3, 8);
  std::string text;
  for (int i = 0; i < n_tokens; ++i) {
    const double u = rng.uniform();
    const char* word;
    if (u < 0.4 && valence > 0.5) {
      word = kPositiveWords[rng.uniform_index(8)];
    } else if (u < 0.4 && valence < -0.5) {
      word = kNegativeWords[rng.uniform_index(8)];
    } else {
      word = kNeutralWords[rng.uniform_index(14)];
    }
    if (!text.empty()) text += ' ';
    text += word;
  }
  return text;
}

void validate(const GeneratorConfig& cfg) {
  if (cfg.n_conversations < 1) {
    throw ConfigError("generator: n_conversations must be positive");
  }
  if (cfg.min_length < 1 || cfg.min_length > cfg.max_length) {
    throw ConfigError("generator: invalid length range");
  }
  if (cfg.drift < 0.0 || cfg.emission_noise < 0.0) {
    throw ConfigError("generator: drift and emission_noise must be >= 0");
  }
}

}  // namespace

Corpus generate_corpus(const GeneratorConfig& cfg) {
  validate(cfg);
  const Rng base(cfg.seed);
  Corpus corpus;
  corpus.manifest_path = "<synthetic seed=" + std::to_string(cfg.seed) + ">";
  corpus.conversations.reserve(static_cast<std::size_t>(cfg.n_conversations));

  for (int c = 0; c < cfg.n_conversations; ++c) {
    Rng rng = base.fork(static_cast<std::uint64_t>(c));
    char conv_id[32];
    std::snprintf(conv_id, sizeof(conv_id), "synth-%06d", c);

    Conversation conv;
    conv.id = conv_id;
    const int length = rng.uniform_int(cfg.min_length, cfg.max_length);

    double latent[3];  // act, val, sat
    for (double& d : latent) d = rng.uniform(-1.5, 1.5);

    std::vector<double> latent_valence;
    latent_valence.reserve(static_cast<std::size_t>(length));
    for (int t = 0; t < length; ++t) {
      if (t > 0) {
        for (double& d : latent) {
          d = reflect_into_range(d + cfg.drift * rng.normal());
        }
      }
      latent_valence.push_back(latent[1]);

      Utterance u;
      char utt_id[48];
      std::snprintf(utt_id, sizeof(utt_id), "%s-u%03d", conv_id, t);
      u.id = utt_id;
      SentimentScores observed;
      observed.activation =
          clamp_score(latent[0] + cfg.emission_noise * rng.normal());
      observed.valence =
          clamp_score(latent[1] + cfg.emission_noise * rng.normal());
      observed.satisfaction =
          clamp_score(latent[2] + cfg.emission_noise * rng.normal());
      u.annotated_sentiment = observed;
      u.transcript = sample_transcript(observed.valence, rng);
      conv.utterances.push_back(std::move(u));
    }

    double signal = 0.0;
    if (cfg.link == CsatLink::MeanValence) {
      signal = std::accumulate(latent_valence.begin(), latent_valence.end(),
                               0.0) /
               static_cast<double>(length);
    } else {
      const int tail = (length + 2) / 3;  // final third, rounded up
      double tail_sum = 0.0;
      for (int t = length - tail; t < length; ++t) {
        tail_sum += latent_valence[static_cast<std::size_t>(t)];
      }
      signal = tail_sum / static_cast<double>(tail);
    }
    double raw = 3.0 + cfg.link_gain * signal;
    if (cfg.round_csat) raw = std::round(raw);
    conv.csat = std::min(5.0, std::max(1.0, raw));

    // Trailing rating + freeform feedback turns, removed by strip_feedback.
    const char* rating_words[] = {"one", "two", "three", "four", "five"};
    Utterance rating;
    rating.id = conv.id + "-f1";
    rating.transcript =
        rating_words[static_cast<int>(std::round(conv.csat)) - 1];
    rating.is_feedback = true;
    conv.utterances.push_back(std::move(rating));
    Utterance feedback;
    feedback.id = conv.id + "-f2";
    feedback.transcript = conv.csat >= 3.0 ? "it was fun to talk"
                                           : "it kept getting confused";
    feedback.is_feedback = true;
    conv.utterances.push_back(std::move(feedback));

    corpus.conversations.push_back(std::move(conv));
  }
  return corpus;
}

OracleEstimate analytic_correlation(const GeneratorConfig& cfg,
                                    int dataset_size, int folds,
                                    int replicates,
                                    std::uint64_t oracle_seed) {
  if (cfg.link != CsatLink::MeanValence) {
    throw ConfigError(
        "analytic_correlation: only the mean-valence link is supported");
  }
  if (dataset_size < 3 || folds < 1 || replicates < 2) {
    throw ConfigError("analytic_correlation: invalid sampling parameters");
  }
  std::vector<double> replicate_rho;
  replicate_rho.reserve(static_cast<std::size_t>(replicates));
  for (int r = 0; r < replicates; ++r) {
    double rho_sum = 0.0;
    for (int f = 0; f < folds; ++f) {
      GeneratorConfig sim = cfg;
      sim.n_conversations = dataset_size;
      sim.seed = Rng(oracle_seed)
                     .fork(static_cast<std::uint64_t>(r) * 1000003ULL +
                           static_cast<std::uint64_t>(f))
                     .seed();
      const Corpus corpus = generate_corpus(sim);
      std::vector<double> mean_valence, csat;
      for (const auto& conv : corpus.conversations) {
        double sum = 0.0;
        int n = 0;
        for (const auto& u : conv.utterances) {
          if (u.is_feedback || !u.annotated_sentiment) continue;
          sum += u.annotated_sentiment->valence;
          ++n;
        }
        mean_valence.push_back(sum / n);
        csat.push_back(conv.csat);
      }
      rho_sum += spearman(mean_valence, csat).rho;
    }
    replicate_rho.push_back(rho_sum / folds);
  }
  OracleEstimate est;
  est.replicates = replicates;
  est.mean_rho = std::accumulate(replicate_rho.begin(), replicate_rho.end(),
                                 0.0) /
                 replicates;
  double sq = 0.0;
  for (double v : replicate_rho) sq += (v - est.mean_rho) * (v - est.mean_rho);
  const double sd = std::sqrt(sq / (replicates - 1));
  est.std_error = sd * std::sqrt(1.0 + 1.0 / replicates);
  return est;
}

std::vector<double> synthesize_utterance_audio(double activation,
                                               int sample_rate, Rng& rng) {
  // 0.3 s tone burst; amplitude grows with activation so frame energy
  // encodes it, with a small additive noise floor.
  const int n = sample_rate * 3 / 10;
  const double amplitude = 0.05 + 0.14 * (activation + 3.0);  // 0.05..0.89
  const double freq = 220.0 + 40.0 * (activation + 3.0);
  std::vector<double> samples(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    samples[static_cast<std::size_t>(i)] =
        amplitude * std::sin(2.0 * 3.14159265358979323846 * freq * t) +
        0.001 * rng.normal();
  }
  return samples;
}

}  // namespace csat
