#pragma once

// JSON persistence for models and JSON-lines embedding files.

#include "gem/gmm.hpp"
#include "gem/pipeline.hpp"

#include "json.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace gem {

using Json = nlohmann::json;

Json model_to_json(const GmmModeld& model, const FitConfig& cfg);
GmmModeld model_from_json(const Json& j);

void save_model(const std::filesystem::path& file, const GmmModeld& model, const FitConfig& cfg,
                const Json& run_config);
GmmModeld load_model(const std::filesystem::path& file);

/// First line {"meta": {...}}, then one {"table","column","mode","vector"}
/// record per column.
void write_embeddings(std::ostream& out, const EmbeddingSet& set, const Json& run_config);

struct LoadedEmbeddings {
  EmbeddingSet set;
  Json meta;  // empty when the file carries no meta line
};

LoadedEmbeddings read_embeddings(const std::filesystem::path& file);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

/// Writes `text` to `file`, creating parent directories.
void write_text_file(const std::filesystem::path& file, const std::string& text);
std::string read_text_file(const std::filesystem::path& file);

}  // namespace gem
