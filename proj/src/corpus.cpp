#include "csat/corpus.hpp"

#include <fstream>
#include <sstream>

#include "csat/errors.hpp"
#include "csat/rng.hpp"
#include "json.hpp"

namespace csat {

using nlohmann::json;

namespace {

Utterance parse_utterance(const json& ju, std::size_t line_no) {
  Utterance u;
  if (!ju.contains("utt_id") || !ju["utt_id"].is_string()) {
    throw DataError("manifest line " + std::to_string(line_no) +
                    ": utterance missing utt_id");
  }
  u.id = ju["utt_id"].get<std::string>();
  if (ju.contains("audio") && !ju["audio"].is_null()) {
    u.audio_path = ju["audio"].get<std::string>();
  }
  if (ju.contains("transcript") && !ju["transcript"].is_null()) {
    u.transcript = ju["transcript"].get<std::string>();
  }
  u.is_feedback = ju.value("is_feedback", false);
  if (ju.contains("sentiment") && !ju["sentiment"].is_null()) {
    const json& js = ju["sentiment"];
    SentimentScores s;
    s.activation = js.at("act").get<double>();
    s.valence = js.at("val").get<double>();
    s.satisfaction = js.at("sat").get<double>();
    u.annotated_sentiment = s;
  }
  return u;
}

}  // namespace

Corpus load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest: " + path);

  Corpus corpus;
  corpus.manifest_path = path;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError("manifest line " + std::to_string(line_no) +
                      ": malformed record: " + e.what());
    }
    if (!j.is_object() || !j.contains("conv_id")) {
      throw DataError("manifest line " + std::to_string(line_no) +
                      ": record must be an object with conv_id");
    }
    Conversation conv;
    conv.id = j["conv_id"].get<std::string>();
    if (!j.contains("csat") || j["csat"].is_null()) {
      corpus.filter_log.push_back("line " + std::to_string(line_no) +
                                  " (conv " + conv.id +
                                  "): missing csat, record rejected");
      continue;
    }
    conv.csat = j["csat"].get<double>();
    if (conv.csat < 1.0 || conv.csat > 5.0) {
      corpus.filter_log.push_back("line " + std::to_string(line_no) +
                                  " (conv " + conv.id +
                                  "): csat outside [1,5], record rejected");
      continue;
    }
    if (!j.contains("utterances") || !j["utterances"].is_array()) {
      throw DataError("manifest line " + std::to_string(line_no) +
                      ": utterances array missing");
    }
    bool rejected = false;
    for (const auto& ju : j["utterances"]) {
      Utterance u = parse_utterance(ju, line_no);
      if (u.annotated_sentiment && !u.annotated_sentiment->in_range()) {
        corpus.filter_log.push_back(
            "line " + std::to_string(line_no) + " (utt " + u.id +
            "): sentiment outside [-3,3], record rejected");
        rejected = true;
        break;
      }
      if (u.transcript.empty() && u.audio_path.empty()) {
        corpus.filter_log.push_back(
            "line " + std::to_string(line_no) + " (utt " + u.id +
            "): empty transcript without audio, record rejected");
        rejected = true;
        break;
      }
      conv.utterances.push_back(std::move(u));
    }
    if (!rejected) corpus.conversations.push_back(std::move(conv));
  }
  return corpus;
}

void save_manifest(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open manifest for writing: " + path);
  for (const auto& conv : corpus.conversations) {
    json j;
    j["conv_id"] = conv.id;
    j["csat"] = conv.csat;
    json utts = json::array();
    for (const auto& u : conv.utterances) {
      json ju;
      ju["utt_id"] = u.id;
      if (!u.audio_path.empty()) ju["audio"] = u.audio_path;
      ju["transcript"] = u.transcript;
      ju["is_feedback"] = u.is_feedback;
      if (u.annotated_sentiment) {
        ju["sentiment"] = {{"act", u.annotated_sentiment->activation},
                           {"val", u.annotated_sentiment->valence},
                           {"sat", u.annotated_sentiment->satisfaction}};
      }
      utts.push_back(std::move(ju));
    }
    j["utterances"] = std::move(utts);
    out << j.dump() << "\n";
  }
}

Conversation strip_feedback(const Conversation& conv) {
  Conversation out;
  out.id = conv.id;
  out.csat = conv.csat;
  for (const auto& u : conv.utterances) {
    if (!u.is_feedback) out.utterances.push_back(u);
  }
  return out;
}

Corpus strip_feedback(const Corpus& corpus) {
  Corpus out;
  out.manifest_path = corpus.manifest_path;
  out.filter_log = corpus.filter_log;
  out.conversations.reserve(corpus.conversations.size());
  for (const auto& c : corpus.conversations) {
    out.conversations.push_back(strip_feedback(c));
  }
  return out;
}

Corpus filter_by_length(const Corpus& corpus, int min_len, int max_len) {
  if (min_len > max_len) {
    throw ConfigError("filter_by_length: min_len > max_len");
  }
  Corpus out;
  out.manifest_path = corpus.manifest_path;
  out.filter_log = corpus.filter_log;
  for (const auto& c : corpus.conversations) {
    const int n = static_cast<int>(c.utterances.size());
    if (n >= min_len && n <= max_len) {
      out.conversations.push_back(c);
    } else {
      out.filter_log.push_back("conv " + c.id + ": length " +
                               std::to_string(n) + " outside [" +
                               std::to_string(min_len) + "," +
                               std::to_string(max_len) + "], excluded");
    }
  }
  return out;
}

FoldAssignment make_folds(const Corpus& corpus, int k, std::uint64_t seed) {
  if (k <= 0) throw ConfigError("make_folds: k must be positive");
  if (corpus.conversations.size() < static_cast<std::size_t>(k)) {
    throw DataError("make_folds: fewer conversations (" +
                    std::to_string(corpus.conversations.size()) +
                    ") than folds (" + std::to_string(k) + ")");
  }
  std::vector<std::string> ids;
  ids.reserve(corpus.conversations.size());
  for (const auto& c : corpus.conversations) ids.push_back(c.id);
  std::sort(ids.begin(), ids.end());

  Rng rng(seed);
  rng.shuffle(ids);

  FoldAssignment fa;
  fa.k = k;
  fa.seed = seed;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    fa.assignment[ids[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  }
  return fa;
}

}  // namespace csat
