#pragma once

// Per-column signatures: mean component responsibilities joined with
// standardized summary statistics, then L1-normalized.

#include "gem/column_store.hpp"
#include "gem/error.hpp"
#include "gem/gmm.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace gem {

inline constexpr int kStatFeatureCount = 7;

template <typename Scalar>
using FeatureVector = Eigen::Matrix<Scalar, kStatFeatureCount, 1>;

template <typename Scalar>
struct StatFeatures {
  Scalar unique_count = 0;
  Scalar mean = 0;
  Scalar cv = 0;
  Scalar entropy = 0;  // nats over distinct-value frequencies
  Scalar range = 0;
  Scalar p10 = 0;
  Scalar p90 = 0;

  FeatureVector<Scalar> to_vector() const {
    FeatureVector<Scalar> v;
    v << unique_count, mean, cv, entropy, range, p10, p90;
    return v;
  }
};

/// Linear-interpolation percentile at rank (n-1)p of an ascending sequence.
template <typename Scalar>
Scalar percentile_sorted(std::span<const Scalar> sorted, Scalar p) {
  if (sorted.empty()) throw std::invalid_argument("percentile of an empty sequence");
  const Scalar rank = static_cast<Scalar>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const Scalar frac = rank - static_cast<Scalar>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

template <typename Derived>
StatFeatures<typename Derived::Scalar> stat_features(const Eigen::DenseBase<Derived>& values) {
  using Scalar = typename Derived::Scalar;
  const auto n = values.size();
  if (n == 0) throw std::invalid_argument("statistics of an empty column");

  std::vector<Scalar> sorted(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) sorted[static_cast<std::size_t>(i)] = values.derived().coeff(i);
  std::sort(sorted.begin(), sorted.end());

  StatFeatures<Scalar> f;
  const Scalar count = static_cast<Scalar>(n);
  Scalar sum = 0;
  for (Scalar v : sorted) sum += v;
  f.mean = sum / count;
  Scalar sq = 0;
  for (Scalar v : sorted) sq += (v - f.mean) * (v - f.mean);
  const Scalar sd = std::sqrt(sq / count);
  f.cv = f.mean == 0 ? Scalar(0) : sd / f.mean;

  std::size_t unique = 0;
  Scalar entropy = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const Scalar p = static_cast<Scalar>(j - i) / count;
    entropy -= p * std::log(p);
    ++unique;
    i = j;
  }
  f.unique_count = static_cast<Scalar>(unique);
  f.entropy = std::max(entropy, Scalar(0));
  f.range = sorted.back() - sorted.front();
  f.p10 = percentile_sorted<Scalar>(sorted, Scalar(0.1));
  f.p90 = percentile_sorted<Scalar>(sorted, Scalar(0.9));
  return f;
}

/// Average responsibility of the column's values for each component.
template <typename Derived>
Vector<typename Derived::Scalar> mean_component_probs(
    const Eigen::DenseBase<Derived>& values, const GmmModel<typename Derived::Scalar>& model) {
  if (values.size() == 0) throw std::invalid_argument("mean responsibilities of an empty column");
  return responsibility_matrix(values, model).colwise().mean().transpose();
}

/// Corpus-level z-scoring of the statistical features (population std).
template <typename Scalar>
struct FeatureStandardizer {
  FeatureVector<Scalar> mean = FeatureVector<Scalar>::Zero();
  FeatureVector<Scalar> stddev = FeatureVector<Scalar>::Zero();

  /// Features with zero spread map to 0.
  FeatureVector<Scalar> apply(const StatFeatures<Scalar>& f) const {
    FeatureVector<Scalar> z = f.to_vector() - mean;
    for (int i = 0; i < kStatFeatureCount; ++i) z[i] = stddev[i] > 0 ? z[i] / stddev[i] : Scalar(0);
    return z;
  }
};

template <typename Scalar>
struct StandardizedFeatures {
  Eigen::Matrix<Scalar, Eigen::Dynamic, kStatFeatureCount> values;  // one row per column
  FeatureStandardizer<Scalar> standardizer;
};

template <typename Scalar>
StandardizedFeatures<Scalar> standardize_features(std::span<const StatFeatures<Scalar>> all) {
  if (all.empty()) throw std::invalid_argument("no feature vectors to standardize");
  const auto n = static_cast<Eigen::Index>(all.size());
  Eigen::Matrix<Scalar, Eigen::Dynamic, kStatFeatureCount> raw(n, kStatFeatureCount);
  for (Eigen::Index i = 0; i < n; ++i) raw.row(i) = all[static_cast<std::size_t>(i)].to_vector().transpose();

  StandardizedFeatures<Scalar> out;
  out.standardizer.mean = raw.colwise().mean().transpose();
  out.standardizer.stddev =
      ((raw.rowwise() - out.standardizer.mean.transpose()).array().square().colwise().sum() /
       static_cast<Scalar>(n))
          .sqrt()
          .transpose();
  // Identical values can average to a mean one ulp off, leaving a spurious
  // spread; treat that as no spread.
  for (int f = 0; f < kStatFeatureCount; ++f)
    if (out.standardizer.stddev[f] <= Scalar(1e-12) * std::abs(out.standardizer.mean[f]))
      out.standardizer.stddev[f] = 0;
  out.values.resize(n, kStatFeatureCount);
  for (Eigen::Index i = 0; i < n; ++i)
    out.values.row(i) = out.standardizer.apply(all[static_cast<std::size_t>(i)]).transpose();
  return out;
}

/// Divides by the absolute sum, keeping signs.
template <typename Derived>
Vector<typename Derived::Scalar> l1_normalized(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  if (!v.allFinite()) throw std::invalid_argument("cannot normalize a non-finite vector");
  const Scalar norm = v.template lpNorm<1>();
  if (!(norm > 0)) throw NumericalError("cannot L1-normalize an all-zero vector");
  return v / norm;
}

/// [m | f] / ||[m | f]||_1
template <typename DerivedM, typename DerivedF>
Vector<typename DerivedM::Scalar> build_signature(const Eigen::MatrixBase<DerivedM>& mean_probs,
                                                  const Eigen::MatrixBase<DerivedF>& std_features) {
  using Scalar = typename DerivedM::Scalar;
  Vector<Scalar> augmented(mean_probs.size() + std_features.size());
  augmented << mean_probs, std_features;
  return l1_normalized(augmented);
}

struct SignatureVector {
  ColumnId id;
  Eigen::VectorXd mean_probs;    // K
  Eigen::VectorXd std_features;  // 7
  Eigen::VectorXd normalized;    // K + 7, unit L1 norm
};

struct SignatureSet {
  std::vector<SignatureVector> rows;  // corpus order
  FeatureStandardizer<double> standardizer;
};

/// One signature per corpus column under `model`.
SignatureSet signature_matrix(const Corpus& corpus, const GmmModeld& model);

}  // namespace gem
