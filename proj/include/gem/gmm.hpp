#pragma once

// One-dimensional Gaussian mixture fitted by expectation-maximization.
//
// The mixture models the pooled stack of every numeric value in a corpus.
// All densities are evaluated in log space so stacks mixing magnitudes
// (years next to ratios) do not underflow.

#include "gem/error.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

namespace gem {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

struct FitConfig {
  int n_components = 50;
  double tol = 1e-3;  // on the mean per-point log-likelihood
  int max_iter = 200;
  int n_restarts = 10;
  std::uint64_t seed = 0;
  double variance_floor = 0.0;  // <= 0 selects 1e-6 x pooled variance
  int n_threads = 1;

  void validate() const {
    if (n_components < 1) throw std::invalid_argument("n_components must be >= 1");
    if (!(tol > 0.0)) throw std::invalid_argument("tol must be > 0");
    if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
    if (n_restarts < 1) throw std::invalid_argument("n_restarts must be >= 1");
    if (n_threads < 1) throw std::invalid_argument("n_threads must be >= 1");
    if (!std::isfinite(variance_floor)) throw std::invalid_argument("variance_floor must be finite");
  }
};

template <typename Scalar>
struct GmmModel {
  Vector<Scalar> weights;
  Vector<Scalar> means;
  Vector<Scalar> variances;
  Scalar log_likelihood = 0;  // total over the fitted stack
  Eigen::Index n_samples = 0;
  int n_iterations = 0;
  int restart = 0;  // index of the winning EM run
  std::uint64_t seed = 0;
  Scalar variance_floor = 0;

  Eigen::Index size() const { return weights.size(); }

  Scalar mean_log_likelihood() const {
    return n_samples > 0 ? log_likelihood / static_cast<Scalar>(n_samples) : Scalar(0);
  }

  /// Throws std::invalid_argument if the parameters do not form a mixture.
  void validate() const {
    const auto k = weights.size();
    if (k < 1) throw std::invalid_argument("mixture has no components");
    if (means.size() != k || variances.size() != k)
      throw std::invalid_argument("mixture parameter arrays differ in length");
    if (!weights.allFinite() || !means.allFinite() || !variances.allFinite())
      throw std::invalid_argument("mixture parameters must be finite");
    if ((weights.array() < 0).any()) throw std::invalid_argument("negative mixture weight");
    if (std::abs(weights.sum() - Scalar(1)) > Scalar(1e-9))
      throw std::invalid_argument("mixture weights must sum to 1");
    if ((variances.array() <= 0).any()) throw std::invalid_argument("component variance must be > 0");
  }
};

using GmmModeld = GmmModel<double>;

template <typename Scalar>
Scalar log_component_pdf(Scalar x, Scalar mean, Scalar variance) {
  if (!(variance > 0)) throw std::invalid_argument("component variance must be > 0");
  const Scalar d = x - mean;
  return Scalar(-0.5) * std::log(Scalar(2) * std::numbers::pi_v<Scalar> * variance) -
         d * d / (Scalar(2) * variance);
}

template <typename Scalar>
Scalar component_pdf(Scalar x, Scalar mean, Scalar variance) {
  return std::exp(log_component_pdf(x, mean, variance));
}

template <typename Scalar>
Scalar mixture_pdf(Scalar x, const GmmModel<Scalar>& model) {
  Scalar p = 0;
  for (Eigen::Index j = 0; j < model.size(); ++j)
    p += model.weights[j] * component_pdf(x, model.means[j], model.variances[j]);
  return p;
}

namespace detail {

// Per-component constants of log(pi_j N(x | mu_j, var_j)) = offset_j - scale_j (x - mu_j)^2.
template <typename Scalar>
struct LogDensityTerms {
  Eigen::Array<Scalar, Eigen::Dynamic, 1> offset;
  Eigen::Array<Scalar, Eigen::Dynamic, 1> scale;

  explicit LogDensityTerms(const GmmModel<Scalar>& m)
      : offset(m.size()), scale(m.size()) {
    for (Eigen::Index j = 0; j < m.size(); ++j) {
      offset[j] = std::log(m.weights[j]) -
                  Scalar(0.5) * std::log(Scalar(2) * std::numbers::pi_v<Scalar> * m.variances[j]);
      scale[j] = Scalar(0.5) / m.variances[j];
    }
  }
};

inline constexpr Eigen::Index kBlockRows = 1024;

// Fills `resp` (rows x K) with normalized responsibilities for the block `x`
// and returns the summed log-likelihood of the block.
template <typename Scalar, typename Block>
Scalar block_responsibilities(const Block& x, const GmmModel<Scalar>& m,
                              const LogDensityTerms<Scalar>& terms,
                              Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>& resp) {
  const Eigen::Index rows = x.size();
  const Eigen::Index k = m.size();
  resp.resize(rows, k);
  for (Eigen::Index j = 0; j < k; ++j)
    resp.col(j) = terms.offset[j] - terms.scale[j] * (x - m.means[j]).square();

  const Eigen::Array<Scalar, Eigen::Dynamic, 1> peak = resp.rowwise().maxCoeff();
  if (!peak.allFinite()) {
    Eigen::Index bad = 0;
    while (std::isfinite(peak[bad])) ++bad;
    throw NumericalError("all component densities vanish at x = " + std::to_string(x[bad]) +
                         "; |x| is outside the representable range of the mixture");
  }
  resp.colwise() -= peak;
  resp = resp.exp();
  const Eigen::Array<Scalar, Eigen::Dynamic, 1> total = resp.rowwise().sum();
  resp.colwise() /= total;
  return (peak + total.log()).sum();
}

template <typename Derived>
auto as_array(const Eigen::DenseBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  return Eigen::Array<Scalar, Eigen::Dynamic, 1>(v.derived().template cast<Scalar>());
}

}  // namespace detail

/// Posterior membership of `x` in each component; sums to one.
template <typename Scalar>
Vector<Scalar> responsibilities(Scalar x, const GmmModel<Scalar>& model) {
  if (!std::isfinite(x)) throw NumericalError("responsibilities of a non-finite value");
  const detail::LogDensityTerms<Scalar> terms(model);
  Eigen::Array<Scalar, 1, 1> xs;
  xs << x;
  Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic> resp;
  detail::block_responsibilities(xs, model, terms, resp);
  return resp.row(0).transpose().matrix();
}

/// N x K responsibilities for every value of `values`.
template <typename Derived>
Matrix<typename Derived::Scalar> responsibility_matrix(
    const Eigen::DenseBase<Derived>& values, const GmmModel<typename Derived::Scalar>& model) {
  using Scalar = typename Derived::Scalar;
  const auto x = detail::as_array(values);
  if (!x.allFinite()) throw NumericalError("responsibilities of a non-finite value");
  const detail::LogDensityTerms<Scalar> terms(model);
  Matrix<Scalar> out(x.size(), model.size());
  Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic> resp;
  for (Eigen::Index start = 0; start < x.size(); start += detail::kBlockRows) {
    const Eigen::Index rows = std::min(detail::kBlockRows, x.size() - start);
    detail::block_responsibilities(x.segment(start, rows), model, terms, resp);
    out.middleRows(start, rows) = resp.matrix();
  }
  return out;
}

/// Total log-likelihood of `values` under the mixture.
template <typename Derived>
typename Derived::Scalar log_likelihood(const Eigen::DenseBase<Derived>& values,
                                        const GmmModel<typename Derived::Scalar>& model) {
  using Scalar = typename Derived::Scalar;
  const auto x = detail::as_array(values);
  const detail::LogDensityTerms<Scalar> terms(model);
  Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic> resp;
  Scalar ll = 0;
  for (Eigen::Index start = 0; start < x.size(); start += detail::kBlockRows) {
    const Eigen::Index rows = std::min(detail::kBlockRows, x.size() - start);
    ll += detail::block_responsibilities(x.segment(start, rows), model, terms, resp);
  }
  return ll;
}

/// Sorts components by ascending mean, ties by weight then variance.
template <typename Scalar>
void canonicalize(GmmModel<Scalar>& m) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(m.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (m.means[a] != m.means[b]) return m.means[a] < m.means[b];
    if (m.weights[a] != m.weights[b]) return m.weights[a] < m.weights[b];
    return m.variances[a] < m.variances[b];
  });
  GmmModel<Scalar> sorted = m;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto src = order[i];
    const auto dst = static_cast<Eigen::Index>(i);
    sorted.weights[dst] = m.weights[src];
    sorted.means[dst] = m.means[src];
    sorted.variances[dst] = m.variances[src];
  }
  m = std::move(sorted);
}

/// Outcome of one EM run.
template <typename Scalar>
struct RestartTrace {
  int restart = 0;
  std::uint64_t seed = 0;
  std::vector<Scalar> mean_log_likelihood;  // one entry per evaluated parameter set
  GmmModel<Scalar> model;
};

template <typename Scalar>
struct FitReport {
  GmmModel<Scalar> model;  // best run
  std::vector<RestartTrace<Scalar>> restarts;
};

template <typename Derived>
Eigen::Index count_distinct(const Eigen::DenseBase<Derived>& values) {
  std::vector<typename Derived::Scalar> v(static_cast<std::size_t>(values.size()));
  for (Eigen::Index i = 0; i < values.size(); ++i)
    v[static_cast<std::size_t>(i)] = values.derived().coeff(i);
  std::sort(v.begin(), v.end());
  return static_cast<Eigen::Index>(std::unique(v.begin(), v.end()) - v.begin());
}

namespace detail {

template <typename Scalar>
struct StackSummary {
  Scalar mean = 0;
  Scalar variance = 0;
  Scalar floor = 0;
};

template <typename Scalar>
StackSummary<Scalar> summarize(const Eigen::Array<Scalar, Eigen::Dynamic, 1>& x,
                               const FitConfig& cfg) {
  StackSummary<Scalar> s;
  s.mean = x.mean();
  s.variance = (x - s.mean).square().mean();
  if (cfg.variance_floor > 0) {
    s.floor = static_cast<Scalar>(cfg.variance_floor);
  } else {
    // A constant stack has no scale to borrow from.
    s.floor = s.variance > 0 ? Scalar(1e-6) * s.variance : Scalar(1e-6);
  }
  return s;
}

// Means start at K distinct stack values picked by a seeded partial shuffle.
template <typename Scalar>
Vector<Scalar> initial_means(const Eigen::Array<Scalar, Eigen::Dynamic, 1>& x, int k,
                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(x.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::unordered_set<Scalar> seen;
  Vector<Scalar> means(k);
  Eigen::Index found = 0;
  for (std::size_t i = 0; i < idx.size() && found < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
    const Scalar v = x[idx[i]];
    if (seen.insert(v).second) means[found++] = v;
  }
  if (found < k) throw DataError("stack has fewer distinct values than components");
  return means;
}

template <typename Scalar>
RestartTrace<Scalar> run_em(const Eigen::Array<Scalar, Eigen::Dynamic, 1>& x,
                            const StackSummary<Scalar>& summary, const FitConfig& cfg,
                            int restart) {
  const int k = cfg.n_components;
  const auto n = x.size();
  RestartTrace<Scalar> trace;
  trace.restart = restart;
  trace.seed = cfg.seed + static_cast<std::uint64_t>(restart);

  GmmModel<Scalar> m;
  m.weights = Vector<Scalar>::Constant(k, Scalar(1) / static_cast<Scalar>(k));
  m.means = initial_means(x, k, trace.seed);
  m.variances = Vector<Scalar>::Constant(k, std::max(summary.variance, summary.floor));
  m.n_samples = n;
  m.seed = trace.seed;
  m.restart = restart;
  m.variance_floor = summary.floor;

  Eigen::Array<Scalar, Eigen::Dynamic, 1> mass(k), shift(k), spread(k);
  Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic> resp;

  // E-step: accumulates responsibility-weighted moments about the current
  // means, which keeps the variance update free of cancellation.
  auto expectation = [&]() {
    const LogDensityTerms<Scalar> terms(m);
    mass.setZero();
    shift.setZero();
    spread.setZero();
    Scalar ll = 0;
    for (Eigen::Index start = 0; start < n; start += kBlockRows) {
      const Eigen::Index rows = std::min(kBlockRows, n - start);
      const auto block = x.segment(start, rows);
      ll += block_responsibilities(block, m, terms, resp);
      for (Eigen::Index j = 0; j < k; ++j) {
        const auto d = block - m.means[j];
        mass[j] += resp.col(j).sum();
        shift[j] += (resp.col(j) * d).sum();
        spread[j] += (resp.col(j) * d.square()).sum();
      }
    }
    return ll / static_cast<Scalar>(n);
  };

  auto maximization = [&]() {
    for (Eigen::Index j = 0; j < k; ++j) {
      if (!(mass[j] > 0)) {
        m.weights[j] = 0;  // dead component keeps its location
        continue;
      }
      const Scalar delta = shift[j] / mass[j];
      m.means[j] += delta;
      m.variances[j] = std::max(spread[j] / mass[j] - delta * delta, summary.floor);
      m.weights[j] = mass[j] / static_cast<Scalar>(n);
    }
    m.weights /= m.weights.sum();
  };

  Scalar current = expectation();
  trace.mean_log_likelihood.push_back(current);
  int iterations = 0;
  while (iterations < cfg.max_iter) {
    maximization();
    ++iterations;
    const Scalar previous = current;
    current = expectation();
    trace.mean_log_likelihood.push_back(current);
    if (std::abs(current - previous) < static_cast<Scalar>(cfg.tol)) break;
  }

  m.n_iterations = iterations;
  m.log_likelihood = current * static_cast<Scalar>(n);
  canonicalize(m);
  trace.model = std::move(m);
  return trace;
}

}  // namespace detail

/// Runs `cfg.n_restarts` EM fits (restart r seeded with seed + r) and keeps
/// the one with the highest final log-likelihood, ties to the lowest index.
/// Restarts run on up to `cfg.n_threads` threads; the result does not depend
/// on the thread count.
template <typename Derived>
FitReport<typename Derived::Scalar> fit_traced(const Eigen::DenseBase<Derived>& stack,
                                               const FitConfig& cfg) {
  using Scalar = typename Derived::Scalar;
  cfg.validate();
  const auto x = detail::as_array(stack);
  if (x.size() == 0) throw DataError("cannot fit a mixture to an empty stack");
  if (!x.allFinite()) throw DataError("stack contains non-finite values");
  const auto distinct = count_distinct(x);
  if (distinct < cfg.n_components)
    throw DataError("stack has " + std::to_string(distinct) + " distinct values but " +
                    std::to_string(cfg.n_components) +
                    " components were requested; use a smaller component count");

  const auto summary = detail::summarize(x, cfg);
  FitReport<Scalar> report;
  report.restarts.resize(static_cast<std::size_t>(cfg.n_restarts));

  const int workers = std::min(cfg.n_threads, cfg.n_restarts);
  if (workers <= 1) {
    for (int r = 0; r < cfg.n_restarts; ++r)
      report.restarts[static_cast<std::size_t>(r)] = detail::run_em(x, summary, cfg, r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (int r = next++; r < cfg.n_restarts; r = next++)
            report.restarts[static_cast<std::size_t>(r)] = detail::run_em(x, summary, cfg, r);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  std::size_t best = 0;
  for (std::size_t r = 1; r < report.restarts.size(); ++r)
    if (report.restarts[r].model.log_likelihood > report.restarts[best].model.log_likelihood)
      best = r;
  report.model = report.restarts[best].model;
  return report;
}

template <typename Derived>
GmmModel<typename Derived::Scalar> fit(const Eigen::DenseBase<Derived>& stack,
                                       const FitConfig& cfg) {
  return fit_traced(stack, cfg).model;
}

/// Free parameters of a 1-D K-component mixture: K-1 weights, K means, K variances.
constexpr int free_parameters(int k) { return 3 * k - 1; }

template <typename Scalar>
Scalar bic(const GmmModel<Scalar>& m) {
  return Scalar(-2) * m.log_likelihood +
         static_cast<Scalar>(free_parameters(static_cast<int>(m.size()))) *
             std::log(static_cast<Scalar>(m.n_samples));
}

template <typename Scalar>
struct BicSelection {
  int best_k = 0;
  std::map<int, Scalar> scores;
  std::map<int, FitReport<Scalar>> reports;

  const GmmModel<Scalar>& best_model() const { return reports.at(best_k).model; }
};

/// Fits every candidate component count and returns the BIC minimizer
/// (ties to the smaller K).
template <typename Derived>
BicSelection<typename Derived::Scalar> select_components_bic(
    const Eigen::DenseBase<Derived>& stack, const std::vector<int>& candidates, FitConfig cfg) {
  using Scalar = typename Derived::Scalar;
  if (candidates.empty()) throw std::invalid_argument("no candidate component counts");
  std::vector<int> ks = candidates;
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

  BicSelection<Scalar> out;
  for (int k : ks) {
    cfg.n_components = k;
    auto report = fit_traced(stack, cfg);
    const Scalar score = bic(report.model);
    out.scores[k] = score;
    out.reports.emplace(k, std::move(report));
    if (out.best_k == 0 || score < out.scores[out.best_k]) out.best_k = k;
  }
  return out;
}

}  // namespace gem
