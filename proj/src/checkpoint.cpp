#include "csat/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "csat/errors.hpp"

namespace csat {

namespace {
constexpr char kMagic[8] = {'C', 'S', 'A', 'T', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  return v;
}

void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  const std::uint32_t n = read_u32(in);
  std::string s(n, '\0');
  in.read(s.data(), n);
  return s;
}

}  // namespace

const Eigen::MatrixXd& Checkpoint::tensor(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return t;
  }
  throw DataError("checkpoint missing tensor: " + name);
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open checkpoint for writing: " + path);
  out.write(kMagic, 8);
  write_u32(out, kVersion);
  write_string(out, ckpt.config.dump());
  write_u32(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, t] : ckpt.tensors) {
    write_string(out, name);
    write_u32(out, static_cast<std::uint32_t>(t.rows()));
    write_u32(out, static_cast<std::uint32_t>(t.cols()));
    for (long r = 0; r < t.rows(); ++r) {
      for (long c = 0; c < t.cols(); ++c) {
        const double v = t(r, c);
        out.write(reinterpret_cast<const char*>(&v), 8);
      }
    }
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) {
    throw DataError("not a checkpoint file: " + path);
  }
  const std::uint32_t version = read_u32(in);
  if (version != kVersion) {
    throw DataError("unsupported checkpoint version " +
                    std::to_string(version));
  }
  Checkpoint ckpt;
  const std::string config_str = read_string(in);
  try {
    ckpt.config = nlohmann::json::parse(config_str);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("corrupt checkpoint config: ") + e.what());
  }
  const std::uint32_t count = read_u32(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = read_string(in);
    const std::uint32_t rows = read_u32(in);
    const std::uint32_t cols = read_u32(in);
    Eigen::MatrixXd t(rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r) {
      for (std::uint32_t c = 0; c < cols; ++c) {
        double v;
        in.read(reinterpret_cast<char*>(&v), 8);
        t(r, c) = v;
      }
    }
    if (!in) throw DataError("truncated checkpoint: " + path);
    ckpt.tensors.emplace_back(name, std::move(t));
  }
  return ckpt;
}

}  // namespace csat
