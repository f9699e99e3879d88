#include <fstream>
#include <sstream>
#include <vector>

#include "csat/corpus.hpp"
#include "csat/errors.hpp"
#include "csat/metrics.hpp"
#include "csat/synthetic.hpp"
#include "doctest.h"

namespace {

std::string manifest_bytes(const csat::Corpus& c) {
  const std::string path = "/tmp/csat_test_synth_bytes.jsonl";
  csat::save_manifest(c, path);
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("generator: identical seeds give byte-identical manifests") {
  csat::GeneratorConfig cfg;
  cfg.seed = 11;
  cfg.n_conversations = 25;
  const std::string a = manifest_bytes(csat::generate_corpus(cfg));
  const std::string b = manifest_bytes(csat::generate_corpus(cfg));
  CHECK(a == b);
  cfg.seed = 12;
  CHECK(a != manifest_bytes(csat::generate_corpus(cfg)));
}

TEST_CASE("generator: structural invariants") {
  csat::GeneratorConfig cfg;
  cfg.seed = 4;
  cfg.n_conversations = 60;
  cfg.min_length = 6;
  cfg.max_length = 20;
  const csat::Corpus c = csat::generate_corpus(cfg);
  REQUIRE(c.conversations.size() == 60);
  for (const auto& conv : c.conversations) {
    CHECK(conv.csat >= 1.0);
    CHECK(conv.csat <= 5.0);
    CHECK(conv.csat == std::round(conv.csat));
    // Content turns within the configured range, plus two feedback turns
    // at the end.
    const int n = static_cast<int>(conv.utterances.size());
    CHECK(n >= 6 + 2);
    CHECK(n <= 20 + 2);
    CHECK(conv.utterances[static_cast<std::size_t>(n - 1)].is_feedback);
    CHECK(conv.utterances[static_cast<std::size_t>(n - 2)].is_feedback);
    for (int i = 0; i < n - 2; ++i) {
      const auto& u = conv.utterances[static_cast<std::size_t>(i)];
      CHECK_FALSE(u.is_feedback);
      REQUIRE(u.annotated_sentiment.has_value());
      CHECK(u.annotated_sentiment->in_range());
      CHECK_FALSE(u.transcript.empty());
    }
  }
}

TEST_CASE("generator: noiseless unrounded mean link is rank-perfect") {
  csat::GeneratorConfig cfg;
  cfg.seed = 9;
  cfg.n_conversations = 40;
  cfg.emission_noise = 0.0;
  cfg.round_csat = false;
  cfg.link_gain = 0.5;  // keeps 3 + gain * signal strictly inside [1, 5]
  const csat::Corpus c = csat::generate_corpus(cfg);
  std::vector<double> mean_valence, csat;
  for (const auto& conv : c.conversations) {
    double sum = 0.0;
    int n = 0;
    for (const auto& u : conv.utterances) {
      if (u.is_feedback) continue;
      sum += u.annotated_sentiment->valence;
      ++n;
    }
    mean_valence.push_back(sum / n);
    csat.push_back(conv.csat);
  }
  // With zero emission noise, no rounding, and a gain that keeps the
  // rating away from the [1, 5] clamp, observed mean valence IS the link
  // signal, so ranks must agree exactly.
  CHECK(csat::spearman(mean_valence, csat).rho ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("generator: config validation") {
  csat::GeneratorConfig cfg;
  cfg.n_conversations = 0;
  CHECK_THROWS_AS(csat::generate_corpus(cfg), csat::ConfigError);
  cfg.n_conversations = 5;
  cfg.min_length = 10;
  cfg.max_length = 5;
  CHECK_THROWS_AS(csat::generate_corpus(cfg), csat::ConfigError);
  cfg.min_length = 5;
  cfg.max_length = 10;
  cfg.drift = -0.1;
  CHECK_THROWS_AS(csat::generate_corpus(cfg), csat::ConfigError);
}

TEST_CASE("analytic correlation oracle behaves sensibly") {
  csat::GeneratorConfig cfg;
  cfg.seed = 1;
  const auto est = csat::analytic_correlation(cfg, 150, 3, 12, 555);
  CHECK(est.replicates == 12);
  CHECK(est.mean_rho > 0.5);
  CHECK(est.mean_rho < 1.0);
  CHECK(est.std_error > 0.0);
  CHECK(est.std_error < 0.2);

  // Deterministic in the oracle seed.
  const auto est2 = csat::analytic_correlation(cfg, 150, 3, 12, 555);
  CHECK(est.mean_rho == est2.mean_rho);
  CHECK(est.std_error == est2.std_error);

  cfg.link = csat::CsatLink::TailValence;
  CHECK_THROWS_AS(csat::analytic_correlation(cfg, 150, 3, 12, 555),
                  csat::ConfigError);
}

TEST_CASE("link parsing round trips") {
  CHECK(csat::csat_link_from_string("mean") == csat::CsatLink::MeanValence);
  CHECK(csat::csat_link_from_string("tail") == csat::CsatLink::TailValence);
  CHECK(csat::csat_link_to_string(csat::CsatLink::TailValence) == "tail");
  CHECK_THROWS_AS(csat::csat_link_from_string("median"), csat::ConfigError);
}
