#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace csat {

// Versioned binary container of named float64 tensors plus a JSON config
// snapshot. Layout is documented in docs/checkpoint_format.md.
struct Checkpoint {
  nlohmann::json config;
  std::vector<std::pair<std::string, Eigen::MatrixXd>> tensors;

  const Eigen::MatrixXd& tensor(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace csat
