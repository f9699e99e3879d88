#include <cstdio>
#include <fstream>
#include <map>
#include <string>

#include "csat/corpus.hpp"
#include "csat/errors.hpp"
#include "csat/synthetic.hpp"
#include "doctest.h"

using csat::Corpus;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const std::string path = "/tmp/csat_test_" + name;
  std::ofstream out(path);
  out << content;
  return path;
}

Corpus synthetic_corpus(int n, std::uint64_t seed = 3) {
  csat::GeneratorConfig cfg;
  cfg.seed = seed;
  cfg.n_conversations = n;
  return csat::generate_corpus(cfg);
}

}  // namespace

TEST_CASE("manifest: save/load round trip preserves everything") {
  const Corpus original = synthetic_corpus(10);
  const std::string path = "/tmp/csat_test_roundtrip.jsonl";
  csat::save_manifest(original, path);
  const Corpus loaded = csat::load_manifest(path);

  REQUIRE(loaded.conversations.size() == original.conversations.size());
  for (std::size_t i = 0; i < loaded.conversations.size(); ++i) {
    const auto& a = original.conversations[i];
    const auto& b = loaded.conversations[i];
    CHECK(a.id == b.id);
    CHECK(a.csat == b.csat);
    REQUIRE(a.utterances.size() == b.utterances.size());
    for (std::size_t j = 0; j < a.utterances.size(); ++j) {
      CHECK(a.utterances[j].id == b.utterances[j].id);
      CHECK(a.utterances[j].transcript == b.utterances[j].transcript);
      CHECK(a.utterances[j].is_feedback == b.utterances[j].is_feedback);
      CHECK(a.utterances[j].annotated_sentiment.has_value() ==
            b.utterances[j].annotated_sentiment.has_value());
      if (a.utterances[j].annotated_sentiment) {
        CHECK(a.utterances[j].annotated_sentiment->valence ==
              b.utterances[j].annotated_sentiment->valence);
      }
    }
  }
}

TEST_CASE("manifest: malformed line raises DataError naming the line") {
  const std::string path = write_temp(
      "malformed.jsonl",
      R"({"conv_id":"a","csat":3,"utterances":[{"utt_id":"a-0","transcript":"hi"}]})"
      "\nnot json at all\n");
  try {
    csat::load_manifest(path);
    FAIL("expected DataError");
  } catch (const csat::DataError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("manifest: missing or out-of-range csat rejects record with log") {
  const std::string path = write_temp(
      "badcsat.jsonl",
      R"({"conv_id":"a","utterances":[{"utt_id":"a-0","transcript":"hi"}]})"
      "\n"
      R"({"conv_id":"b","csat":9,"utterances":[{"utt_id":"b-0","transcript":"hi"}]})"
      "\n"
      R"({"conv_id":"c","csat":4,"utterances":[{"utt_id":"c-0","transcript":"hi"}]})"
      "\n");
  const Corpus c = csat::load_manifest(path);
  REQUIRE(c.conversations.size() == 1);
  CHECK(c.conversations[0].id == "c");
  REQUIRE(c.filter_log.size() == 2);
  CHECK(c.filter_log[0].find("missing csat") != std::string::npos);
  CHECK(c.filter_log[1].find("outside [1,5]") != std::string::npos);
}

TEST_CASE("manifest: out-of-range sentiment and empty content reject") {
  const std::string path = write_temp(
      "badutt.jsonl",
      R"({"conv_id":"a","csat":3,"utterances":[{"utt_id":"a-0","transcript":"hi","sentiment":{"act":0,"val":4,"sat":0}}]})"
      "\n"
      R"({"conv_id":"b","csat":3,"utterances":[{"utt_id":"b-0","transcript":""}]})"
      "\n");
  const Corpus c = csat::load_manifest(path);
  CHECK(c.conversations.empty());
  REQUIRE(c.filter_log.size() == 2);
  CHECK(c.filter_log[0].find("sentiment outside") != std::string::npos);
  CHECK(c.filter_log[1].find("empty transcript") != std::string::npos);
}

TEST_CASE("strip_feedback removes feedback turns and is idempotent") {
  const Corpus raw = synthetic_corpus(5);
  const Corpus stripped = csat::strip_feedback(raw);
  for (std::size_t i = 0; i < stripped.conversations.size(); ++i) {
    CHECK(stripped.conversations[i].utterances.size() ==
          raw.conversations[i].utterances.size() - 2);
    for (const auto& u : stripped.conversations[i].utterances) {
      CHECK_FALSE(u.is_feedback);
    }
  }
  const Corpus twice = csat::strip_feedback(stripped);
  CHECK(twice.total_utterances() == stripped.total_utterances());
}

TEST_CASE("filter_by_length: inclusive bounds, order kept, idempotent") {
  Corpus c;
  for (int n : {4, 5, 17, 50, 51}) {
    csat::Conversation conv;
    conv.id = "c" + std::to_string(n);
    conv.csat = 3.0;
    conv.utterances.resize(static_cast<std::size_t>(n));
    c.conversations.push_back(conv);
  }
  const Corpus kept = csat::filter_by_length(c, 5, 50);
  REQUIRE(kept.conversations.size() == 3);
  CHECK(kept.conversations[0].id == "c5");
  CHECK(kept.conversations[1].id == "c17");
  CHECK(kept.conversations[2].id == "c50");
  CHECK(kept.filter_log.size() == 2);

  const Corpus again = csat::filter_by_length(kept, 5, 50);
  CHECK(again.conversations.size() == kept.conversations.size());

  CHECK_THROWS_AS(csat::filter_by_length(c, 10, 5), csat::ConfigError);
}

TEST_CASE("make_folds: balanced partition, deterministic in the seed") {
  const Corpus c = csat::strip_feedback(synthetic_corpus(23));
  const auto fa = csat::make_folds(c, 5, 77);
  const auto fb = csat::make_folds(c, 5, 77);
  const auto fc = csat::make_folds(c, 5, 78);
  CHECK(fa.assignment == fb.assignment);
  CHECK(fa.assignment != fc.assignment);

  REQUIRE(fa.assignment.size() == 23);
  std::map<int, int> sizes;
  for (const auto& [id, fold] : fa.assignment) {
    CHECK(fold >= 0);
    CHECK(fold < 5);
    ++sizes[fold];
  }
  REQUIRE(sizes.size() == 5);
  int lo = 1000, hi = 0;
  for (const auto& [fold, n] : sizes) {
    lo = std::min(lo, n);
    hi = std::max(hi, n);
  }
  CHECK(hi - lo <= 1);
}

TEST_CASE("make_folds: fewer conversations than folds raises DataError") {
  const Corpus c = synthetic_corpus(3);
  CHECK_THROWS_AS(csat::make_folds(c, 5, 1), csat::DataError);
  CHECK_THROWS_AS(csat::make_folds(c, 0, 1), csat::ConfigError);
}
