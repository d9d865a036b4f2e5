#pragma once

// Seeded synthetic corpora with known semantic types.

#include "json.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace gem {

struct SynthType {
  std::string label;
  std::string header;  // defaults to label
  std::string family;  // normal, uniform, exponential, lognormal, gamma, beta, logistic
  std::vector<double> params;
  int columns = 20;
  int rows = 500;
};

struct SynthSpec {
  std::vector<SynthType> types;
};

/// Five types, 20 columns x 500 rows each.
SynthSpec default_synth_spec();

SynthSpec synth_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SynthSpec& spec);

/// Throws DataError for unknown families or bad parameter counts.
Eigen::VectorXd draw_samples(const std::string& family, const std::vector<double>& params,
                             int n, std::mt19937_64& rng);

struct SynthOutput {
  std::vector<std::filesystem::path> tables;
  std::filesystem::path ground_truth;
};

/// Writes t000.csv, t001.csv, ... where table i holds the i-th column of
/// every type that has one (shorter columns padded with empty cells), plus
/// ground_truth.csv and synth_config.json.
SynthOutput write_synth_corpus(const SynthSpec& spec, std::uint64_t seed,
                               const std::filesystem::path& out_dir,
                               const nlohmann::json& run_config);

}  // namespace gem
