#include <string>

#include "csat/errors.hpp"
#include "csat/pipeline.hpp"
#include "doctest.h"
#include "json.hpp"

using nlohmann::json;

namespace {

json base_config() {
  return json::parse(R"({
    "seed": 5,
    "generator": {"seed": 5, "n_conversations": 40},
    "folds": 4,
    "model": "svr",
    "svr": {"features": "2d", "kernel": "linear"}
  })");
}

}  // namespace

TEST_CASE("config: unknown keys are rejected at every level") {
  auto j = base_config();
  j["typo_key"] = 1;
  CHECK_THROWS_AS(csat::parse_run_config(j), csat::ConfigError);

  j = base_config();
  j["svr"]["kernell"] = "linear";
  CHECK_THROWS_AS(csat::parse_run_config(j), csat::ConfigError);

  j = base_config();
  j["generator"]["noise"] = 0.5;
  CHECK_THROWS_AS(csat::parse_run_config(j), csat::ConfigError);

  j = base_config();
  j["filter"] = {{"minimum", 5}};
  CHECK_THROWS_AS(csat::parse_run_config(j), csat::ConfigError);
}

TEST_CASE("config: validation of enumerated values") {
  auto j = base_config();
  j["model"] = "tree";
  CHECK_THROWS_AS(csat::parse_run_config(j), csat::ConfigError);

  j = base_config();
  j["scores"] = "guessed";
  CHECK_THROWS_AS(csat::parse_run_config(j), csat::ConfigError);

  j = base_config();
  j.erase("generator");
  CHECK_THROWS_AS(csat::parse_run_config(j), csat::ConfigError);

  // Predicted scores require model inputs.
  j = base_config();
  j["scores"] = "predicted";
  const auto cfg = csat::parse_run_config(j);
  CHECK_THROWS_AS(csat::run_pipeline(cfg), csat::ConfigError);
}

TEST_CASE("pipeline: reports are deterministic for a fixed config") {
  const auto cfg = csat::parse_run_config(base_config());
  const auto a = csat::run_pipeline(cfg);
  const auto b = csat::run_pipeline(cfg);
  CHECK(a.to_json().dump() == b.to_json().dump());
  CHECK(a.to_text() == b.to_text());
}

TEST_CASE("pipeline: report structure") {
  const auto report = csat::run_pipeline(csat::parse_run_config(base_config()));
  const json j = report.to_json();
  CHECK(j["version"] == "csat 0.1.0");
  CHECK(j["data"]["n_conversations"] == 40);
  CHECK(j["config"]["folds"] == 4);
  CHECK(j["correlations"]["conversation"].contains("valence"));
  CHECK(j["correlations"]["utterance"].contains("satisfaction"));
  REQUIRE(j["models"].size() == 1);
  CHECK(j["models"][0]["model"] == "nu_svr");
  CHECK(j["models"][0]["folds"].size() == 4);
  CHECK(j["models"][0]["pooled"]["all"]["n"] == 40);
  // Feedback turns are stripped before any counting.
  const double mean_len = j["data"]["mean_length"].get<double>();
  CHECK(mean_len >= 5.0);
  CHECK(mean_len <= 50.0);
}

TEST_CASE("pipeline: empty filter result raises a staged DataError") {
  auto j = base_config();
  j["filter"] = {{"min_length", 45}, {"max_length", 50}};
  j["generator"]["max_length"] = 20;
  const auto cfg = csat::parse_run_config(j);
  try {
    csat::run_pipeline(cfg);
    FAIL("expected DataError");
  } catch (const csat::DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("stage filter") != std::string::npos);
    CHECK(msg.find("no conversations after filtering") != std::string::npos);
  }
}

TEST_CASE("pipeline: 'both' evaluates the two regressors on shared folds") {
  auto j = base_config();
  j["model"] = "both";
  j["blstm"] = {{"hidden", 4}, {"epochs", 30}};
  const auto report = csat::run_pipeline(csat::parse_run_config(j));
  REQUIRE(report.models.size() == 2);
  CHECK(report.models[0].model_name == "nu_svr");
  CHECK(report.models[1].model_name == "blstm");
  // Identical folds mean identical pooled true-label sequences.
  REQUIRE(report.models[0].crossval.pooled.size() ==
          report.models[1].crossval.pooled.size());
  for (std::size_t i = 0; i < report.models[0].crossval.pooled.size(); ++i) {
    CHECK(report.models[0].crossval.pooled[i].first ==
          report.models[1].crossval.pooled[i].first);
  }
}

TEST_CASE("pipeline: resolved config echoes every effective value") {
  const auto cfg = csat::parse_run_config(base_config());
  const json r = cfg.resolved();
  CHECK(r["seed"] == 5);
  CHECK(r["svr"]["kernel"] == "linear");
  CHECK(r["svr"]["nu"] == 0.5);
  CHECK(r["filter"]["min_length"] == 5);
  CHECK(r["blstm"]["hidden"] == 20);
  CHECK(r["blstm"]["readout"] == "final");
}
