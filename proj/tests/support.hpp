#pragma once

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bcdnet/tensor.hpp"

namespace testing_support {

namespace fs = std::filesystem;

// Closed-form fill shared with tests/oracles/make_golden.py.
inline std::vector<double> pattern(std::size_t n, double a, double b, double scale = 1.0,
                                   bool use_cos = false) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = a * static_cast<double>(i) + b;
    v[i] = scale * (use_cos ? std::cos(t) : std::sin(t));
  }
  return v;
}

inline bcdnet::Tensor<double> pattern_tensor(bcdnet::Shape shape, double a, double b,
                                             double scale = 1.0, bool use_cos = false) {
  const std::size_t n = bcdnet::shape_numel(shape);
  return bcdnet::Tensor<double>(std::move(shape), pattern(n, a, b, scale, use_cos));
}

template <typename T>
bcdnet::Tensor<T> random_tensor(bcdnet::Shape shape, std::mt19937_64& gen, double lo = -1.0,
                                double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  bcdnet::Tensor<T> t(std::move(shape));
  for (T& v : t.data()) v = static_cast<T>(dist(gen));
  return t;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("bcdnet_" + tag + "_" + std::to_string(rd()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

inline std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

// Runs a shell command, capturing stdout and stderr.
inline RunResult run(const std::string& command, const fs::path& scratch) {
  const fs::path out = scratch / "stdout.txt", err = scratch / "stderr.txt";
  const std::string full = command + " >'" + out.string() + "' 2>'" + err.string() + "'";
  const int status = std::system(full.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

inline std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  for (std::string cell; std::getline(in, cell, ',');) out.push_back(cell);
  return out;
}

}  // namespace testing_support
