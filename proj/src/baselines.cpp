#include "gem/baselines.hpp"

#include "gem/error.hpp"
#include "gem/signature.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <vector>

namespace gem {

Eigen::VectorXd ple_bins(const Eigen::VectorXd& stack, int n_bins) {
  if (n_bins < 1) throw std::invalid_argument("n_bins must be >= 1");
  if (stack.size() == 0) throw std::invalid_argument("bins of an empty stack");
  std::vector<double> sorted(stack.data(), stack.data() + stack.size());
  std::sort(sorted.begin(), sorted.end());

  std::vector<double> bounds;
  for (int i = 0; i <= n_bins; ++i) {
    const double q = percentile_sorted<double>(sorted, static_cast<double>(i) / n_bins);
    if (bounds.empty() || q > bounds.back()) bounds.push_back(q);
  }
  if (bounds.size() < 2) bounds = {sorted.front() - 0.5, sorted.front() + 0.5};
  return Eigen::Map<const Eigen::VectorXd>(bounds.data(), static_cast<Eigen::Index>(bounds.size()));
}

Eigen::VectorXd paf_frequencies(int n_frequencies) {
  if (n_frequencies < 1) throw std::invalid_argument("n_frequencies must be >= 1");
  Eigen::VectorXd c(n_frequencies);
  for (int k = 1; k <= n_frequencies; ++k)
    c[k - 1] = std::exp2(static_cast<double>(k) - static_cast<double>(n_frequencies) / 2.0);
  return c;
}

double ks_statistic(std::span<const double> sorted, const std::function<double(double)>& cdf) {
  if (sorted.empty()) throw std::invalid_argument("KS statistic of an empty sample");
  const double n = static_cast<double>(sorted.size());
  double d = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    const double above = static_cast<double>(i + 1) / n - f;
    const double below = f - static_cast<double>(i) / n;
    d = std::max({d, above, below});
  }
  return std::clamp(d, 0.0, 1.0);
}

namespace {

struct Moments {
  double mean = 0;
  double variance = 0;
};

Moments moments(std::span<const double> x) {
  Moments m;
  for (double v : x) m.mean += v;
  m.mean /= static_cast<double>(x.size());
  for (double v : x) m.variance += (v - m.mean) * (v - m.mean);
  m.variance /= static_cast<double>(x.size());
  return m;
}

double normal_cdf(double x, double mu, double sigma) {
  return 0.5 * std::erfc(-(x - mu) / (sigma * std::numbers::sqrt2));
}

// Scores 1 when the family cannot be fitted or evaluated on the sample.
double guarded(const std::function<double()>& score) {
  try {
    const double d = score();
    return std::isfinite(d) ? d : 1.0;
  } catch (const std::exception&) {
    return 1.0;
  }
}

}  // namespace

Eigen::Matrix<double, 7, 1> ks_fingerprint(const Eigen::VectorXd& values) {
  if (values.size() < 2) throw std::invalid_argument("KS fingerprint needs at least 2 values");
  std::vector<double> x(values.data(), values.data() + values.size());
  std::sort(x.begin(), x.end());
  const Moments mo = moments(x);
  Eigen::Matrix<double, 7, 1> out = Eigen::Matrix<double, 7, 1>::Ones();
  if (!(mo.variance > 0)) return out;

  const double sd = std::sqrt(mo.variance);
  const double lo = x.front();
  const double range = x.back() - x.front();
  const double eps = 1e-9 * std::max(1.0, range);

  // Positive-support copy for exponential and gamma.
  std::vector<double> pos = x;
  if (lo <= 0)
    for (double& v : pos) v = v - lo + eps;
  const Moments pm = moments(pos);

  // Copy inside (0,1) for beta.
  std::vector<double> unit = x;
  if (lo <= 0 || x.back() >= 1)
    for (double& v : unit) v = (v - lo + eps) / (range + 2 * eps);
  const Moments um = moments(unit);

  out[0] = guarded([&] {
    return ks_statistic(x, [&](double v) { return normal_cdf(v, mo.mean, sd); });
  });
  out[1] = guarded([&] {
    const double half = std::sqrt(3.0) * sd;
    const double a = mo.mean - half;
    return ks_statistic(x, [&](double v) { return std::clamp((v - a) / (2 * half), 0.0, 1.0); });
  });
  out[2] = guarded([&] {
    const double rate = 1.0 / pm.mean;
    return ks_statistic(pos, [&](double v) { return v <= 0 ? 0.0 : -std::expm1(-rate * v); });
  });
  out[3] = guarded([&] {
    const double common = um.mean * (1 - um.mean) / um.variance - 1;
    if (!(common > 0)) return 1.0;
    const double a = um.mean * common;
    const double b = (1 - um.mean) * common;
    return ks_statistic(unit, [&](double v) {
      return v <= 0 ? 0.0 : v >= 1 ? 1.0 : boost::math::ibeta(a, b, v);
    });
  });
  out[4] = guarded([&] {
    const double shape = pm.mean * pm.mean / pm.variance;
    const double scale = pm.variance / pm.mean;
    return ks_statistic(pos, [&](double v) {
      return v <= 0 ? 0.0 : boost::math::gamma_p(shape, v / scale);
    });
  });
  out[5] = guarded([&] {
    if (lo <= 0) return 1.0;
    const double s2 = std::log1p(mo.variance / (mo.mean * mo.mean));
    const double mu = std::log(mo.mean) - s2 / 2;
    const double s = std::sqrt(s2);
    return ks_statistic(x, [&](double v) { return normal_cdf(std::log(v), mu, s); });
  });
  out[6] = guarded([&] {
    const double s = std::sqrt(3.0) * sd / std::numbers::pi;
    return ks_statistic(x, [&](double v) { return 1.0 / (1.0 + std::exp(-(v - mo.mean) / s)); });
  });
  return out;
}

Eigen::MatrixXd squashing_gmm_encode(const Corpus& corpus, const BaselineConfig& cfg,
                                     FitConfig fit_cfg) {
  cfg.validate();
  if (corpus.columns.empty()) throw std::invalid_argument("squashing encoder on an empty corpus");
  std::vector<Eigen::VectorXd> squashed;
  squashed.reserve(corpus.size());
  Eigen::Index total = 0;
  for (const auto& col : corpus.columns) {
    squashed.push_back(col.values.unaryExpr([](double v) { return squash(v); }));
    total += col.values.size();
  }
  Eigen::VectorXd stack(total);
  Eigen::Index at = 0;
  for (const auto& s : squashed) {
    stack.segment(at, s.size()) = s;
    at += s.size();
  }

  fit_cfg.n_components = cfg.n_prototypes;
  const auto model = fit(stack, fit_cfg);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(corpus.size()), cfg.n_prototypes);
  for (std::size_t i = 0; i < squashed.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = mean_component_probs(squashed[i], model).transpose();
  return out;
}

}  // namespace gem
