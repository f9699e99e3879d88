#pragma once

#include <Eigen/Dense>
#include <string>
#include <unordered_map>
#include <vector>

namespace csat {

// Pretrained word vectors in the standard text layout, one
// "token v1 ... vD" per line with an optional "count dim" header.
// The table is immutable after load; OOV lookups return zero vectors.
struct EmbeddingTable {
  std::unordered_map<std::string, Eigen::VectorXd> vectors;
  int dim = 300;
};

EmbeddingTable load_embeddings(const std::string& path);

// Lowercase, whitespace-split, punctuation stripped at token edges.
std::vector<std::string> tokenize(const std::string& text);

// One row per token, OOV rows zero. An empty sequence yields a single
// zero row so the lexical branch always has at least one step.
Eigen::MatrixXd embed_tokens(const std::vector<std::string>& tokens,
                             const EmbeddingTable& table);

}  // namespace csat
