#include "gem/eval.hpp"

#include "gem/error.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

namespace gem {

SimilarityMatrix cosine_matrix(const std::vector<ColumnId>& ids, const Eigen::MatrixXd& vectors) {
  if (static_cast<Eigen::Index>(ids.size()) != vectors.rows())
    throw std::invalid_argument("one embedding per column id is required");
  if (vectors.rows() == 0) throw std::invalid_argument("no embeddings");
  if (!vectors.allFinite()) throw NumericalError("embeddings contain non-finite entries");
  if ((vectors.rowwise().squaredNorm().array() == 0).all())
    throw NumericalError("all embeddings are zero vectors");
  return {ids, cosine_scores(vectors)};
}

std::vector<Eigen::Index> topk_neighbors(const Eigen::MatrixXd& scores, Eigen::Index i,
                                         Eigen::Index k) {
  const Eigen::Index n = scores.rows();
  if (i < 0 || i >= n) throw std::out_of_range("row index out of range");
  if (k < 1 || k > n - 1) throw std::out_of_range("k must lie in [1, n-1]");
  std::vector<Eigen::Index> cand;
  cand.reserve(static_cast<std::size_t>(n - 1));
  for (Eigen::Index j = 0; j < n; ++j)
    if (j != i) cand.push_back(j);
  const auto row = scores.row(i);
  std::partial_sort(cand.begin(), cand.begin() + k, cand.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (row[a] != row[b]) return row[a] > row[b];
    return a < b;
  });
  cand.resize(static_cast<std::size_t>(k));
  return cand;
}

EvalReport precision_recall_at_k(const SimilarityMatrix& sim, const GroundTruth& gt,
                                 NeighborCount rule) {
  if (gt.labels.empty()) throw DataError("ground truth is empty");
  std::map<ColumnKey, Eigen::Index> position;
  for (std::size_t i = 0; i < sim.ids.size(); ++i)
    position.emplace(key_of(sim.ids[i]), static_cast<Eigen::Index>(i));
  for (const auto& [key, label] : gt.labels)
    if (!position.contains(key))
      throw DataError("ground truth names a column missing from the embeddings: (" + key.table +
                      ", " + key.column + ")");

  std::vector<Eigen::Index> labeled;
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < sim.ids.size(); ++i) {
    if (auto l = gt.label_of(sim.ids[i])) {
      labeled.push_back(static_cast<Eigen::Index>(i));
      labels.push_back(*l);
    }
  }
  EvalReport report;
  report.neighbor_count = rule;
  report.unlabeled_columns = sim.ids.size() - labeled.size();

  const auto n = static_cast<Eigen::Index>(labeled.size());
  Eigen::MatrixXd sub(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) sub(a, b) = sim.scores(labeled[a], labeled[b]);

  std::map<std::string, std::size_t> support;
  for (const auto& l : labels) ++support[l];

  std::map<std::string, std::pair<double, double>> sums;
  for (Eigen::Index p = 0; p < n; ++p) {
    const auto& label = labels[static_cast<std::size_t>(p)];
    const auto s = static_cast<Eigen::Index>(support[label]);
    if (s < 2) continue;
    ColumnResult r;
    r.index = labeled[static_cast<std::size_t>(p)];
    r.label = label;
    r.k = rule == NeighborCount::SupportMinusOne ? s - 1 : std::min(s, n - 1);
    const auto nb = topk_neighbors(sub, p, r.k);
    for (auto j : nb) {
      if (labels[static_cast<std::size_t>(j)] == label) ++r.true_positives;
      r.neighbors.push_back(labeled[static_cast<std::size_t>(j)]);
    }
    r.precision = static_cast<double>(r.true_positives) / static_cast<double>(r.k);
    r.recall = static_cast<double>(r.true_positives) / static_cast<double>(s - 1);
    sums[label].first += r.precision;
    sums[label].second += r.recall;
    report.columns.push_back(std::move(r));
  }

  for (const auto& [label, s] : support) {
    if (s < 2) {
      report.skipped.push_back(label);
      continue;
    }
    TypeMetrics m;
    m.support = s;
    m.precision = sums[label].first / static_cast<double>(s);
    m.recall = sums[label].second / static_cast<double>(s);
    report.per_type.emplace(label, m);
  }
  if (report.per_type.empty()) throw DataError("no semantic type has at least two columns");
  for (const auto& [label, m] : report.per_type) {
    report.macro_precision += m.precision;
    report.macro_recall += m.recall;
  }
  report.macro_precision /= static_cast<double>(report.per_type.size());
  report.macro_recall /= static_cast<double>(report.per_type.size());
  report.evaluated_columns = report.columns.size();
  return report;
}

std::vector<int> assign_clusters_argmax(const Eigen::MatrixXd& vectors, Eigen::Index block) {
  if (block < 1 || block > vectors.cols())
    throw std::invalid_argument("embeddings carry no responsibility block");
  std::vector<int> out(static_cast<std::size_t>(vectors.rows()));
  for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < block; ++j)
      if (vectors(i, j) > vectors(i, best)) best = j;
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

std::vector<int> kmeans_clusters(const Eigen::MatrixXd& vectors, int k, std::uint64_t seed) {
  const Eigen::Index n = vectors.rows();
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (k > n) throw std::invalid_argument("k exceeds the number of points");

  std::mt19937_64 rng(seed);
  Eigen::MatrixXd centers(k, vectors.cols());
  std::vector<bool> chosen(static_cast<std::size_t>(n), false);
  {
    std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
    const auto c0 = first(rng);
    centers.row(0) = vectors.row(c0);
    chosen[static_cast<std::size_t>(c0)] = true;
  }
  Eigen::VectorXd d2 = (vectors.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    Eigen::Index pick = -1;
    const double total = d2.sum();
    if (total > 0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      for (Eigen::Index i = 0; i < n; ++i) {
        target -= d2[i];
        if (target <= 0 && d2[i] > 0) {
          pick = i;
          break;
        }
      }
      if (pick < 0)  // rounding left the target just above the tail
        for (Eigen::Index i = n - 1; i >= 0 && pick < 0; --i)
          if (d2[i] > 0) pick = i;
    } else {
      for (Eigen::Index i = 0; i < n && pick < 0; ++i)
        if (!chosen[static_cast<std::size_t>(i)]) pick = i;
    }
    chosen[static_cast<std::size_t>(pick)] = true;
    centers.row(c) = vectors.row(pick);
    d2 = d2.cwiseMin((vectors.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }

  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  for (int iter = 0; iter < 300; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = (vectors.row(i) - centers.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (labels[static_cast<std::size_t>(i)] != best) {
        labels[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    if (!changed) break;
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, vectors.cols());
    Eigen::VectorXi counts = Eigen::VectorXi::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(labels[static_cast<std::size_t>(i)]) += vectors.row(i);
      ++counts[labels[static_cast<std::size_t>(i)]];
    }
    for (int c = 0; c < k; ++c)
      if (counts[c] > 0) centers.row(c) = sums.row(c) / counts[c];
  }
  return labels;
}

std::vector<int> max_weight_assignment(const Eigen::MatrixXd& weights) {
  const auto rows = static_cast<int>(weights.rows());
  const auto cols = static_cast<int>(weights.cols());
  const int n = std::max(rows, cols);
  if (n == 0) return {};
  const double top = weights.size() > 0 ? weights.maxCoeff() : 0.0;
  // Minimize top - w on the zero-padded square matrix (1-based potentials).
  auto cost = [&](int i, int j) {
    return (i < rows && j < cols) ? top - weights(i, j) : top;
  };
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0), v(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> p(static_cast<std::size_t>(n) + 1, 0), way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
    std::vector<bool> used(static_cast<std::size_t>(n) + 1, false);
    do {
      used[static_cast<std::size_t>(j0)] = true;
      const int i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> match(static_cast<std::size_t>(rows), -1);
  for (int j = 1; j <= n; ++j) {
    const int i = p[static_cast<std::size_t>(j)] - 1;
    if (i < rows && j - 1 < cols) match[static_cast<std::size_t>(i)] = j - 1;
  }
  return match;
}

namespace {

// Maps arbitrary labels onto 0..m-1 in order of first appearance.
std::vector<int> dense_labels(std::span<const int> labels, int& count) {
  std::map<int, int> ids;
  std::vector<int> out;
  out.reserve(labels.size());
  for (int l : labels) out.push_back(ids.emplace(l, static_cast<int>(ids.size())).first->second);
  count = static_cast<int>(ids.size());
  return out;
}

Eigen::MatrixXd contingency(std::span<const int> pred, std::span<const int> truth) {
  int np = 0, nt = 0;
  const auto p = dense_labels(pred, np);
  const auto t = dense_labels(truth, nt);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(np, nt);
  for (std::size_t i = 0; i < p.size(); ++i) c(p[i], t[i]) += 1;
  return c;
}

double pairs(double n) { return n * (n - 1) / 2; }

}  // namespace

double clustering_acc(std::span<const int> pred, std::span<const int> truth) {
  if (pred.size() != truth.size()) throw std::invalid_argument("label sequences differ in length");
  if (pred.empty()) throw std::invalid_argument("clustering accuracy of no items");
  const Eigen::MatrixXd c = contingency(pred, truth);
  const auto match = max_weight_assignment(c);
  double matched = 0;
  for (std::size_t i = 0; i < match.size(); ++i)
    if (match[i] >= 0) matched += c(static_cast<Eigen::Index>(i), match[i]);
  return matched / static_cast<double>(pred.size());
}

double adjusted_rand_index(std::span<const int> pred, std::span<const int> truth) {
  if (pred.size() != truth.size()) throw std::invalid_argument("label sequences differ in length");
  if (pred.size() < 2) throw std::invalid_argument("ARI needs at least two items");
  const Eigen::MatrixXd c = contingency(pred, truth);
  const double index = c.unaryExpr(&pairs).sum();
  const double a = c.rowwise().sum().unaryExpr(&pairs).sum();
  const double b = c.colwise().sum().unaryExpr(&pairs).sum();
  const double expected = a * b / pairs(static_cast<double>(pred.size()));
  const double max_index = 0.5 * (a + b);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

}  // namespace gem
