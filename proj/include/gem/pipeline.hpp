#pragma once

// End-to-end column embedding: signatures, optional header context, or one
// of the baseline encoders, for every column of a corpus.

#include "gem/baselines.hpp"
#include "gem/column_store.hpp"
#include "gem/context.hpp"
#include "gem/gmm.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace gem {

struct EmbedOptions {
  EmbeddingMode mode = EmbeddingMode::DistStat;
  ConcatLayout layout = ConcatLayout::WithFeatures;
  std::optional<std::filesystem::path> headers_file;
  bool fallback_headers = false;
  int header_dim = 384;
  std::uint64_t header_seed = kDefaultHeaderSeed;
  BaselineConfig baselines;
  FitConfig fit;  // prototype mixture of the squashing baseline
};

struct EmbeddingSet {
  EmbeddingMode mode = EmbeddingMode::DistStat;
  std::vector<ColumnId> ids;
  Eigen::MatrixXd vectors;                  // one row per column
  Eigen::Index responsibility_block = 0;    // leading K entries, or 0
};

/// `model` is required for the D / D+S / D+S+C modes and ignored otherwise.
EmbeddingSet embed_corpus(const Corpus& corpus, const GmmModeld* model, const EmbedOptions& opts);

/// Expected vector length for a mode, given K and the header dimension.
Eigen::Index embedding_width(EmbeddingMode mode, ConcatLayout layout, Eigen::Index k,
                             Eigen::Index header_dim);

}  // namespace gem
