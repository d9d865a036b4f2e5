#pragma once

// Neighbour-based precision/recall and clustering metrics over column
// embeddings.

#include "gem/column_store.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gem {

struct SimilarityMatrix {
  std::vector<ColumnId> ids;
  Eigen::MatrixXd scores;  // cosine, symmetric
};

/// Row-wise cosine similarity. Zero rows score 0 against everything except
/// themselves (diagonal is 1).
template <typename Derived>
Eigen::MatrixXd cosine_scores(const Eigen::MatrixBase<Derived>& rows) {
  Eigen::MatrixXd unit = rows.template cast<double>();
  const Eigen::VectorXd norms = unit.rowwise().norm();
  for (Eigen::Index i = 0; i < unit.rows(); ++i)
    if (norms[i] > 0) unit.row(i) /= norms[i];
  Eigen::MatrixXd s = unit * unit.transpose();
  s = (0.5 * (s + s.transpose())).eval();
  s.diagonal().setOnes();
  return s;
}

SimilarityMatrix cosine_matrix(const std::vector<ColumnId>& ids, const Eigen::MatrixXd& vectors);

/// The k highest-scoring columns for row i, excluding i; ties go to the
/// lower index.
std::vector<Eigen::Index> topk_neighbors(const Eigen::MatrixXd& scores, Eigen::Index i,
                                         Eigen::Index k);

/// k_i = support - 1 (default) or k_i = support, capped at n - 1.
enum class NeighborCount { SupportMinusOne, Support };

struct TypeMetrics {
  double precision = 0;
  double recall = 0;
  std::size_t support = 0;
};

struct ColumnResult {
  Eigen::Index index = 0;  // into SimilarityMatrix::ids
  std::string label;
  Eigen::Index k = 0;
  Eigen::Index true_positives = 0;
  double precision = 0;
  double recall = 0;
  std::vector<Eigen::Index> neighbors;
};

struct EvalReport {
  std::map<std::string, TypeMetrics> per_type;
  std::vector<std::string> skipped;  // labels with support 1
  double macro_precision = 0;
  double macro_recall = 0;
  std::optional<double> acc;
  std::optional<double> ari;
  std::string mode;
  NeighborCount neighbor_count = NeighborCount::SupportMinusOne;
  std::size_t evaluated_columns = 0;
  std::size_t unlabeled_columns = 0;
  std::vector<ColumnResult> columns;
};

/// Columns without a label are left out of the neighbourhoods. Every labelled
/// column must be present in `sim`.
EvalReport precision_recall_at_k(const SimilarityMatrix& sim, const GroundTruth& gt,
                                 NeighborCount rule = NeighborCount::SupportMinusOne);

/// Argmax over the first `block` entries of each row (ties to the lowest).
std::vector<int> assign_clusters_argmax(const Eigen::MatrixXd& vectors, Eigen::Index block);

/// Lloyd's algorithm with k-means++ seeding, at most 300 iterations.
std::vector<int> kmeans_clusters(const Eigen::MatrixXd& vectors, int k, std::uint64_t seed);

/// Best one-to-one cluster/label matching, as a fraction of all items.
double clustering_acc(std::span<const int> pred, std::span<const int> truth);

double adjusted_rand_index(std::span<const int> pred, std::span<const int> truth);

/// Maximum-weight assignment on a rectangular matrix; returns the column
/// matched to each row, or -1.
std::vector<int> max_weight_assignment(const Eigen::MatrixXd& weights);

}  // namespace gem
