#include "gem/context.hpp"

#include "gem/error.hpp"
#include "gem/random.hpp"

#include "json.hpp"

#include <cctype>
#include <fstream>
#include <map>
#include <random>

namespace gem {

namespace {

struct ModeName {
  EmbeddingMode mode;
  std::string_view name;
};

constexpr ModeName kModeNames[] = {
    {EmbeddingMode::Distributional, "D"},
    {EmbeddingMode::DistStat, "D+S"},
    {EmbeddingMode::DistStatContextConcat, "D+S+C-concat"},
    {EmbeddingMode::DistStatContextAggregate, "D+S+C-agg"},
    {EmbeddingMode::Ple, "ple"},
    {EmbeddingMode::Paf, "paf"},
    {EmbeddingMode::Ks, "ks"},
    {EmbeddingMode::SquashingGmm, "sqgmm"},
};

Eigen::VectorXd token_vector(std::string_view token, int dim, std::uint64_t seed) {
  std::mt19937_64 rng(derive_seed(seed, fnv1a(token)));
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = normal(rng);
  return v.normalized();
}

}  // namespace

std::string_view to_string(EmbeddingMode mode) {
  for (const auto& m : kModeNames)
    if (m.mode == mode) return m.name;
  return "?";
}

std::optional<EmbeddingMode> parse_embedding_mode(std::string_view s) {
  for (const auto& m : kModeNames)
    if (m.name == s) return m.mode;
  return std::nullopt;
}

bool uses_header_context(EmbeddingMode mode) {
  return mode == EmbeddingMode::DistStatContextConcat ||
         mode == EmbeddingMode::DistStatContextAggregate;
}

bool has_responsibility_block(EmbeddingMode mode) {
  return mode == EmbeddingMode::Distributional || mode == EmbeddingMode::DistStat;
}

std::string_view to_string(ConcatLayout layout) {
  return layout == ConcatLayout::WithFeatures ? "P|S|F" : "P|S";
}

std::optional<ConcatLayout> parse_concat_layout(std::string_view s) {
  if (s == "P|S|F") return ConcatLayout::WithFeatures;
  if (s == "P|S") return ConcatLayout::SignatureAndHeader;
  return std::nullopt;
}

std::vector<HeaderEmbedding> load_header_embeddings(const std::filesystem::path& file,
                                                    const Corpus& corpus) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open header embeddings " + file.string());

  std::map<ColumnKey, HeaderEmbedding> found;
  Eigen::Index dim = -1;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = file.string() + ":" + std::to_string(lineno);
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + ": " + e.what());
    }
    if (!rec.is_object() || !rec.contains("table") || !rec.contains("column") ||
        !rec.contains("vector") || !rec["vector"].is_array())
      throw DataError(where + ": expected {\"table\",\"column\",\"header\",\"vector\"}");

    HeaderEmbedding h;
    h.id.table = rec["table"].get<std::string>();
    h.id.column = rec["column"].get<std::string>();
    h.header = rec.value("header", h.id.column);
    const auto& vec = rec["vector"];
    h.vector.resize(static_cast<Eigen::Index>(vec.size()));
    for (std::size_t i = 0; i < vec.size(); ++i) {
      if (!vec[i].is_number()) throw DataError(where + ": non-numeric vector entry");
      const double v = vec[i].get<double>();
      if (!std::isfinite(v)) throw DataError(where + ": non-finite vector entry");
      h.vector[static_cast<Eigen::Index>(i)] = v;
    }
    if (h.vector.size() == 0) throw DataError(where + ": empty vector");
    if (dim < 0) dim = h.vector.size();
    if (h.vector.size() != dim)
      throw DataError(where + ": dimension " + std::to_string(h.vector.size()) +
                      " differs from " + std::to_string(dim));
    const auto key = key_of(h.id);
    if (!found.emplace(key, std::move(h)).second)
      throw DataError(where + ": duplicate record for (" + key.table + ", " + key.column + ")");
  }

  std::vector<HeaderEmbedding> out;
  out.reserve(corpus.size());
  for (const auto& col : corpus.columns) {
    const auto it = found.find(key_of(col.id));
    if (it == found.end())
      throw DataError(file.string() + ": no header embedding for column (" + col.id.table +
                      ", " + col.id.column + ")");
    HeaderEmbedding h = it->second;
    h.id = col.id;
    out.push_back(std::move(h));
  }
  return out;
}

std::vector<std::string> header_tokens(std::string_view header) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : header) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

Eigen::VectorXd fallback_header_embed(std::string_view header, int dim, std::uint64_t seed) {
  if (dim < 8) throw std::invalid_argument("header embedding dimension must be >= 8");
  const auto tokens = header_tokens(header);
  if (tokens.empty()) return token_vector("", dim, seed);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
  for (const auto& t : tokens) sum += token_vector(t, dim, seed);
  const double norm = sum.norm();
  return norm > 0 ? Eigen::VectorXd(sum / norm) : token_vector("", dim, seed);
}

Eigen::VectorXd normalize_header(const Eigen::VectorXd& s) {
  if (!s.allFinite()) throw std::invalid_argument("header vector has non-finite entries");
  const double norm = s.lpNorm<1>();
  if (!(norm > 0)) throw NumericalError("cannot L1-normalize an all-zero header vector");
  return s / norm;
}

Eigen::VectorXd compose_concat(const Eigen::VectorXd& signature, const Eigen::VectorXd& header,
                               const std::optional<Eigen::VectorXd>& std_features) {
  const Eigen::Index extra = std_features ? std_features->size() : 0;
  Eigen::VectorXd out(signature.size() + header.size() + extra);
  out.head(signature.size()) = signature;
  out.segment(signature.size(), header.size()) = header;
  if (std_features) out.tail(extra) = *std_features;
  if (!out.allFinite()) throw std::invalid_argument("embedding parts must be finite");
  return out;
}

Eigen::VectorXd compose_aggregate(const Eigen::VectorXd& signature, const Eigen::VectorXd& header,
                                  const Eigen::VectorXd& std_features) {
  const Eigen::Index width = std::max({signature.size(), header.size(), std_features.size()});
  Eigen::VectorXd out = Eigen::VectorXd::Zero(width);
  out.head(signature.size()) += signature;
  out.head(header.size()) += header;
  out.head(std_features.size()) += std_features;
  out /= 3.0;
  if (!out.allFinite()) throw std::invalid_argument("embedding parts must be finite");
  return out;
}

}  // namespace gem
