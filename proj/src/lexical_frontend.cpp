#include "csat/lexical_frontend.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "csat/errors.hpp"

namespace csat {

EmbeddingTable load_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embeddings file: " + path);
  EmbeddingTable table;
  table.dim = -1;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string token;
    ss >> token;
    std::vector<double> values;
    double v;
    while (ss >> v) values.push_back(v);
    // "count dim" header: first line, numeric token, exactly one value
    if (line_no == 1 && values.size() == 1 &&
        token.find_first_not_of("0123456789") == std::string::npos) {
      continue;
    }
    if (values.empty()) {
      throw DataError("embeddings line " + std::to_string(line_no) +
                      ": no vector values");
    }
    if (table.dim < 0) {
      table.dim = static_cast<int>(values.size());
    } else if (static_cast<int>(values.size()) != table.dim) {
      throw DataError("embeddings line " + std::to_string(line_no) +
                      ": dimension mismatch (" +
                      std::to_string(values.size()) + " vs " +
                      std::to_string(table.dim) + ")");
    }
    Eigen::VectorXd vec(table.dim);
    for (int i = 0; i < table.dim; ++i) vec(i) = values[static_cast<std::size_t>(i)];
    table.vectors.emplace(std::move(token), std::move(vec));
  }
  if (table.dim < 0) table.dim = 300;  // empty table, default width
  return table;
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::istringstream ss(text);
  std::string raw;
  while (ss >> raw) {
    std::size_t begin = 0;
    std::size_t end = raw.size();
    while (begin < end && std::ispunct(static_cast<unsigned char>(raw[begin]))) {
      ++begin;
    }
    while (end > begin &&
           std::ispunct(static_cast<unsigned char>(raw[end - 1]))) {
      --end;
    }
    if (begin >= end) continue;
    std::string token = raw.substr(begin, end - begin);
    for (char& c : token) {
      c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    tokens.push_back(std::move(token));
  }
  return tokens;
}

Eigen::MatrixXd embed_tokens(const std::vector<std::string>& tokens,
                             const EmbeddingTable& table) {
  const long rows = std::max<long>(1, static_cast<long>(tokens.size()));
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows, table.dim);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto it = table.vectors.find(tokens[i]);
    if (it != table.vectors.end()) {
      out.row(static_cast<long>(i)) = it->second.transpose();
    }
  }
  return out;
}

}  // namespace csat
