#pragma once

// Numeric-only column encoders used as comparison points:
// piecewise-linear encoding, periodic features, Kolmogorov-Smirnov
// fingerprints and the squashing + GMM prototype encoder.

#include "gem/column_store.hpp"
#include "gem/gmm.hpp"

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string_view>

namespace gem {

struct BaselineConfig {
  int n_bins = 50;
  int n_frequencies = 50;
  int n_prototypes = 50;

  void validate() const {
    if (n_bins < 1 || n_frequencies < 1 || n_prototypes < 1)
      throw std::invalid_argument("baseline sizes must be >= 1");
  }
};

// ---- piecewise-linear encoding ---------------------------------------------

/// Boundaries b_0..b_T at the empirical quantiles i/T of `stack`. Repeated
/// quantiles are collapsed, so fewer than T bins come back for heavily tied
/// stacks; at least one bin is always returned.
Eigen::VectorXd ple_bins(const Eigen::VectorXd& stack, int n_bins);

template <typename Scalar, typename Derived>
void ple_encode_value(Scalar x, const Eigen::MatrixBase<Derived>& bins,
                      Eigen::Ref<Vector<Scalar>> out) {
  const auto t_count = bins.size() - 1;
  x = std::clamp(x, bins[0], bins[t_count]);
  for (Eigen::Index t = 1; t <= t_count; ++t) {
    if (x < bins[t - 1]) out[t - 1] = 0;
    else if (x >= bins[t]) out[t - 1] = 1;
    else out[t - 1] = (x - bins[t - 1]) / (bins[t] - bins[t - 1]);
  }
}

/// Mean per-value encoding of a column; T = bins.size() - 1 entries in [0,1].
template <typename DerivedV, typename DerivedB>
Vector<typename DerivedV::Scalar> ple_encode(const Eigen::MatrixBase<DerivedV>& values,
                                             const Eigen::MatrixBase<DerivedB>& bins) {
  using Scalar = typename DerivedV::Scalar;
  if (bins.size() < 2) throw std::invalid_argument("piecewise-linear encoding needs >= 2 boundaries");
  for (Eigen::Index t = 1; t < bins.size(); ++t)
    if (!(bins[t] > bins[t - 1])) throw std::invalid_argument("bin boundaries must be strictly increasing");
  if (values.size() == 0) throw std::invalid_argument("encoding of an empty column");
  Vector<Scalar> acc = Vector<Scalar>::Zero(bins.size() - 1);
  Vector<Scalar> one(bins.size() - 1);
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    ple_encode_value<Scalar>(values[i], bins, one);
    acc += one;
  }
  return acc / static_cast<Scalar>(values.size());
}

// ---- periodic activation features ------------------------------------------

/// c_k = 2^(k - F/2), k = 1..F.
Eigen::VectorXd paf_frequencies(int n_frequencies);

/// Mean of [sin(2 pi c_k x'), cos(2 pi c_k x')]_k over the column, with
/// x' = (x - lo) / (hi - lo). Pairs are interleaved per frequency. When
/// hi == lo every value maps to 0.
template <typename DerivedV, typename DerivedF>
Vector<typename DerivedV::Scalar> paf_encode(const Eigen::MatrixBase<DerivedV>& values,
                                             const Eigen::MatrixBase<DerivedF>& frequencies,
                                             typename DerivedV::Scalar lo,
                                             typename DerivedV::Scalar hi) {
  using Scalar = typename DerivedV::Scalar;
  if (values.size() == 0) throw std::invalid_argument("encoding of an empty column");
  const auto f = frequencies.size();
  Vector<Scalar> acc = Vector<Scalar>::Zero(2 * f);
  const Scalar span = hi - lo;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const Scalar x = span > 0 ? (values[i] - lo) / span : Scalar(0);
    for (Eigen::Index k = 0; k < f; ++k) {
      const Scalar angle = Scalar(2) * std::numbers::pi_v<Scalar> * frequencies[k] * x;
      acc[2 * k] += std::sin(angle);
      acc[2 * k + 1] += std::cos(angle);
    }
  }
  return acc / static_cast<Scalar>(values.size());
}

// ---- Kolmogorov-Smirnov fingerprints ----------------------------------------

inline constexpr std::array<std::string_view, 7> kKsFamilies = {
    "normal", "uniform", "exponential", "beta", "gamma", "lognormal", "logistic"};

/// One-sample statistic max_i max(i/n - F(x_(i)), F(x_(i)) - (i-1)/n) for an
/// ascending sample.
double ks_statistic(std::span<const double> sorted, const std::function<double(double)>& cdf);

/// KS distance of the column to each family in kKsFamilies, parameters fitted
/// by moments. Exponential and gamma fit a copy shifted to positive support,
/// beta a copy rescaled into (0,1); lognormal needs positive data and scores
/// 1 otherwise. Constant columns score 1 everywhere.
Eigen::Matrix<double, 7, 1> ks_fingerprint(const Eigen::VectorXd& values);

// ---- squashing + GMM prototypes ---------------------------------------------

/// sign(v) * ln(1 + |v|)
template <typename Scalar>
Scalar squash(Scalar v) {
  return std::copysign(std::log1p(std::abs(v)), v);
}

/// Mean responsibilities of each column's squashed values under a mixture
/// with `cfg.n_prototypes` components fitted to the squashed pooled stack.
/// Rows follow corpus order.
Eigen::MatrixXd squashing_gmm_encode(const Corpus& corpus, const BaselineConfig& cfg,
                                     FitConfig fit_cfg);

}  // namespace gem
