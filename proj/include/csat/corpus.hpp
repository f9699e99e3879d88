#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace csat {

// Per-utterance sentiment triple on the -3..+3 scale.
struct SentimentScores {
  double activation = 0.0;
  double valence = 0.0;
  double satisfaction = 0.0;

  SentimentScores clamped() const {
    auto c = [](double v) { return std::min(3.0, std::max(-3.0, v)); };
    return {c(activation), c(valence), c(satisfaction)};
  }
  bool in_range() const {
    auto ok = [](double v) { return v >= -3.0 && v <= 3.0; };
    return ok(activation) && ok(valence) && ok(satisfaction);
  }
};

struct Utterance {
  std::string id;
  std::string audio_path;  // empty when no audio
  std::string transcript;
  std::optional<SentimentScores> annotated_sentiment;
  bool is_feedback = false;
};

struct Conversation {
  std::string id;
  std::vector<Utterance> utterances;
  double csat = 0.0;  // rating in [1,5]
};

struct Corpus {
  std::vector<Conversation> conversations;
  std::string manifest_path;
  std::vector<std::string> filter_log;  // provenance of rejected/removed records

  std::size_t total_utterances() const {
    std::size_t n = 0;
    for (const auto& c : conversations) n += c.utterances.size();
    return n;
  }
  double mean_length() const {
    if (conversations.empty()) return 0.0;
    return static_cast<double>(total_utterances()) /
           static_cast<double>(conversations.size());
  }
};

struct FoldAssignment {
  int k = 0;
  std::map<std::string, int> assignment;  // conversation id -> fold index
  std::uint64_t seed = 0;
};

// Line-delimited JSON manifest; see README for the record schema.
// Malformed lines raise DataError naming the line number; records with a
// missing csat are rejected with a warning in the filter log.
Corpus load_manifest(const std::string& path);
void save_manifest(const Corpus& corpus, const std::string& path);

Conversation strip_feedback(const Conversation& conv);
Corpus strip_feedback(const Corpus& corpus);

// Keeps conversations whose length is within [min_len, max_len] inclusive.
Corpus filter_by_length(const Corpus& corpus, int min_len = 5, int max_len = 50);

// Seeded shuffle of lexicographically sorted ids, then round-robin
// assignment; fold sizes differ by at most one.
FoldAssignment make_folds(const Corpus& corpus, int k, std::uint64_t seed);

}  // namespace csat
