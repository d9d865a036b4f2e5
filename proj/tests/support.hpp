#pragma once

#include "gem/column_store.hpp"
#include "gem/gmm.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

namespace gem::test {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("gem_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline NumericColumn make_column(const std::string& table, const std::string& name,
                                 std::size_t index, const std::vector<double>& values) {
  NumericColumn c;
  c.id = {table, name, index};
  c.header = name;
  c.values = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  c.row_count = values.size();
  return c;
}

inline NumericColumn make_column(const std::string& table, const std::string& name,
                                 std::size_t index, const Eigen::VectorXd& values) {
  NumericColumn c;
  c.id = {table, name, index};
  c.header = name;
  c.values = values;
  c.row_count = static_cast<std::size_t>(values.size());
  return c;
}

inline Eigen::VectorXd normal_draws(int n, double mean, double sd, std::mt19937_64& rng) {
  std::normal_distribution<double> d(mean, sd);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

// 0.3 N(-5,1) + 0.4 N(0,1) + 0.3 N(5,1)
inline Eigen::VectorXd three_mode_stack(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::discrete_distribution<int> pick({0.3, 0.4, 0.3});
  std::normal_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = -5.0 + 5.0 * pick(rng) + unit(rng);
  return v;
}

inline GmmModeld make_model(std::vector<double> w, std::vector<double> mu, std::vector<double> var) {
  GmmModeld m;
  const auto k = static_cast<Eigen::Index>(w.size());
  m.weights = Eigen::Map<Eigen::VectorXd>(w.data(), k);
  m.means = Eigen::Map<Eigen::VectorXd>(mu.data(), k);
  m.variances = Eigen::Map<Eigen::VectorXd>(var.data(), k);
  return m;
}

}  // namespace gem::test
