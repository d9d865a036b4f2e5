#pragma once

// Header-context vectors and the final column-embedding compositions.

#include "gem/column_store.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gem {

struct HeaderEmbedding {
  ColumnId id;
  std::string header;
  Eigen::VectorXd vector;
};

enum class EmbeddingMode {
  Distributional,           // "D"
  DistStat,                 // "D+S"
  DistStatContextConcat,    // "D+S+C-concat"
  DistStatContextAggregate, // "D+S+C-agg"
  Ple,
  Paf,
  Ks,
  SquashingGmm,
};

std::string_view to_string(EmbeddingMode mode);
std::optional<EmbeddingMode> parse_embedding_mode(std::string_view s);
bool uses_header_context(EmbeddingMode mode);
/// Modes whose vectors start with a block of mean responsibilities.
bool has_responsibility_block(EmbeddingMode mode);

/// Layout of the concatenated context mode: [P | S | f] or [P | S].
enum class ConcatLayout { WithFeatures, SignatureAndHeader };

std::string_view to_string(ConcatLayout layout);
std::optional<ConcatLayout> parse_concat_layout(std::string_view s);

/// Reads header-embedding JSON lines
/// {"table","column","header","vector"} and returns one vector per corpus
/// column, in corpus order. Records for columns outside the corpus are
/// ignored.
std::vector<HeaderEmbedding> load_header_embeddings(const std::filesystem::path& file,
                                                    const Corpus& corpus);

inline constexpr std::uint64_t kDefaultHeaderSeed = 0;

/// Lowercased runs of ASCII letters and digits.
std::vector<std::string> header_tokens(std::string_view header);

/// Deterministic stand-in for a sentence encoder: the L2-normalized sum of
/// one seeded random unit vector per token.
Eigen::VectorXd fallback_header_embed(std::string_view header, int dim,
                                      std::uint64_t seed = kDefaultHeaderSeed);

/// s / ||s||_1
Eigen::VectorXd normalize_header(const Eigen::VectorXd& s);

/// [P | S] or [P | S | f], no renormalization.
Eigen::VectorXd compose_concat(const Eigen::VectorXd& signature, const Eigen::VectorXd& header,
                               const std::optional<Eigen::VectorXd>& std_features);

/// Element-wise mean of the three parts zero-padded to the longest one.
Eigen::VectorXd compose_aggregate(const Eigen::VectorXd& signature, const Eigen::VectorXd& header,
                                  const Eigen::VectorXd& std_features);

}  // namespace gem
