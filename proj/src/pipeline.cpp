#include "gem/pipeline.hpp"

#include "gem/signature.hpp"

#include <stdexcept>

namespace gem {

Eigen::Index embedding_width(EmbeddingMode mode, ConcatLayout layout, Eigen::Index k,
                             Eigen::Index header_dim) {
  switch (mode) {
    case EmbeddingMode::Distributional: return k;
    case EmbeddingMode::DistStat: return k + kStatFeatureCount;
    case EmbeddingMode::DistStatContextConcat:
      return k + kStatFeatureCount + header_dim +
             (layout == ConcatLayout::WithFeatures ? kStatFeatureCount : 0);
    case EmbeddingMode::DistStatContextAggregate:
      return std::max<Eigen::Index>(k + kStatFeatureCount, header_dim);
    case EmbeddingMode::Ks: return 7;
    default: break;
  }
  throw std::invalid_argument("width of this mode depends on the corpus");
}

namespace {

std::vector<Eigen::VectorXd> header_vectors(const Corpus& corpus, const EmbedOptions& opts) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(corpus.size());
  if (opts.headers_file) {
    for (auto& h : load_header_embeddings(*opts.headers_file, corpus))
      out.push_back(normalize_header(h.vector));
  } else if (opts.fallback_headers) {
    for (const auto& col : corpus.columns)
      out.push_back(normalize_header(fallback_header_embed(col.header, opts.header_dim, opts.header_seed)));
  } else {
    throw std::invalid_argument("header-context modes need a header embedding file or fallback headers");
  }
  return out;
}

template <typename RowFn>
Eigen::MatrixXd stack_rows(std::size_t n, RowFn&& row) {
  Eigen::MatrixXd out;
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd v = row(i);
    if (i == 0) out.resize(static_cast<Eigen::Index>(n), v.size());
    out.row(static_cast<Eigen::Index>(i)) = v.transpose();
  }
  return out;
}

}  // namespace

EmbeddingSet embed_corpus(const Corpus& corpus, const GmmModeld* model, const EmbedOptions& opts) {
  if (corpus.columns.empty()) throw std::invalid_argument("cannot embed an empty corpus");
  EmbeddingSet set;
  set.mode = opts.mode;
  set.ids = corpus.ids();
  const auto n = corpus.size();

  switch (opts.mode) {
    case EmbeddingMode::Distributional:
    case EmbeddingMode::DistStat:
    case EmbeddingMode::DistStatContextConcat:
    case EmbeddingMode::DistStatContextAggregate: {
      if (model == nullptr) throw std::invalid_argument("signature modes need a fitted mixture");
      const auto sigs = signature_matrix(corpus, *model);
      if (opts.mode == EmbeddingMode::Distributional) {
        set.vectors = stack_rows(n, [&](std::size_t i) { return l1_normalized(sigs.rows[i].mean_probs); });
        set.responsibility_block = model->size();
      } else if (opts.mode == EmbeddingMode::DistStat) {
        set.vectors = stack_rows(n, [&](std::size_t i) { return sigs.rows[i].normalized; });
        set.responsibility_block = model->size();
      } else {
        const auto headers = header_vectors(corpus, opts);
        const bool concat = opts.mode == EmbeddingMode::DistStatContextConcat;
        set.vectors = stack_rows(n, [&](std::size_t i) {
          const auto& s = sigs.rows[i];
          if (!concat) return compose_aggregate(s.normalized, headers[i], s.std_features);
          return compose_concat(s.normalized, headers[i],
                                opts.layout == ConcatLayout::WithFeatures
                                    ? std::optional<Eigen::VectorXd>(s.std_features)
                                    : std::nullopt);
        });
      }
      break;
    }
    case EmbeddingMode::Ple: {
      opts.baselines.validate();
      const Eigen::VectorXd bins = ple_bins(pooled_stack(corpus), opts.baselines.n_bins);
      set.vectors = stack_rows(n, [&](std::size_t i) { return ple_encode(corpus.columns[i].values, bins); });
      break;
    }
    case EmbeddingMode::Paf: {
      opts.baselines.validate();
      const Eigen::VectorXd stack = pooled_stack(corpus);
      const Eigen::VectorXd freqs = paf_frequencies(opts.baselines.n_frequencies);
      const double lo = stack.minCoeff();
      const double hi = stack.maxCoeff();
      set.vectors = stack_rows(n, [&](std::size_t i) {
        return paf_encode(corpus.columns[i].values, freqs, lo, hi);
      });
      break;
    }
    case EmbeddingMode::Ks:
      set.vectors = stack_rows(n, [&](std::size_t i) -> Eigen::VectorXd {
        const auto& v = corpus.columns[i].values;
        // Single-value columns are as degenerate as constant ones.
        if (v.size() < 2) return Eigen::VectorXd::Ones(7);
        return ks_fingerprint(v);
      });
      break;
    case EmbeddingMode::SquashingGmm:
      set.vectors = squashing_gmm_encode(corpus, opts.baselines, opts.fit);
      break;
  }
  return set;
}

}  // namespace gem
