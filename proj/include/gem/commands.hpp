#pragma once

// Command implementations behind the `gem` executable. Every option struct
// round-trips through JSON so each output artifact can carry the exact
// configuration that produced it.

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace gem::cmd {

using Json = nlohmann::json;

/// Process exit codes.
enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

/// GEM_SEED when set and parseable, else 0.
std::uint64_t default_seed();

struct FitParams {
  int components = 50;
  double tol = 1e-3;
  int max_iter = 200;
  int restarts = 10;
  std::uint64_t seed = 0;
  double variance_floor = 0.0;
};

struct FitOptions {
  std::string input;
  std::string out = "model.json";
  double threshold = 0.95;
  FitParams fit;
  std::vector<int> bic_candidates;  // empty: use fit.components
  int threads = 1;
};

struct EmbedOptions {
  std::string input;
  std::string model;  // empty: fit inline with `fit`
  std::string out = "embeddings.jsonl";
  std::string mode = "D+S";
  std::string concat_layout = "P|S|F";
  std::string headers;
  bool fallback_headers = false;
  int header_dim = 384;
  std::uint64_t header_seed = 0;
  double threshold = 0.95;
  FitParams fit;
  int bins = 50;
  int frequencies = 50;
  int prototypes = 50;
  int threads = 1;
};

struct EvalOptions {
  std::string embeddings;
  std::string ground_truth;
  std::string out = "report.json";
  std::string neighbors;                  // optional CSV of neighbour lists
  std::string clusters = "none";          // none | argmax | kmeans
  std::string k_rule = "support-1";       // support-1 | support
  std::uint64_t seed = 0;
  bool timestamp = false;
};

struct BenchOptions {
  std::string input;
  std::string ground_truth;
  std::string out = "bench.csv";
  std::vector<int> candidates = {5, 10, 25, 50, 100};
  double threshold = 0.95;
  FitParams fit;
  int threads = 1;
};

struct SynthOptions {
  std::string spec;  // empty: built-in five-type corpus
  std::string out = "synth";
  std::uint64_t seed = 0;
};

void to_json(Json& j, const FitParams& o);
void from_json(const Json& j, FitParams& o);
void to_json(Json& j, const FitOptions& o);
void from_json(const Json& j, FitOptions& o);
void to_json(Json& j, const EmbedOptions& o);
void from_json(const Json& j, EmbedOptions& o);
void to_json(Json& j, const EvalOptions& o);
void from_json(const Json& j, EvalOptions& o);
void to_json(Json& j, const BenchOptions& o);
void from_json(const Json& j, BenchOptions& o);
void to_json(Json& j, const SynthOptions& o);
void from_json(const Json& j, SynthOptions& o);

// Each command validates its options (std::invalid_argument on bad values),
// writes its artifact and logs progress to `log`.
void run_fit(const FitOptions& o, std::ostream& log);
void run_embed(const EmbedOptions& o, std::ostream& log);
void run_eval(const EvalOptions& o, std::ostream& log);
void run_bench(const BenchOptions& o, std::ostream& log);
void run_synth(const SynthOptions& o, std::ostream& log);

/// {"command": name, "options": {...}} as embedded in artifacts.
Json run_config(const std::string& command, const Json& options);

/// Extracts the embedded run configuration from any artifact written above.
Json read_run_config(const std::filesystem::path& artifact);

/// Re-executes the command recorded in `artifact`, optionally redirecting its
/// output path.
void rerun(const std::filesystem::path& artifact, const std::optional<std::string>& out,
           std::ostream& log);

}  // namespace gem::cmd
