#include "doctest.h"

#include "gem/baselines.hpp"
#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace gem;
using doctest::Approx;

namespace {

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.dot(b) / (a.norm() * b.norm());
}

// sup_x |F_n(x) - F(x)| approximated by checking both sides of every jump
// and a dense grid between them.
double ks_oracle(std::vector<double> x, const std::function<double(double)>& cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  auto ecdf = [&](double v, bool left) {
    const auto it = left ? std::lower_bound(x.begin(), x.end(), v) : std::upper_bound(x.begin(), x.end(), v);
    return static_cast<double>(it - x.begin()) / n;
  };
  double d = 0;
  for (double v : x) {
    d = std::max(d, std::abs(ecdf(v, false) - cdf(v)));
    d = std::max(d, std::abs(ecdf(v, true) - cdf(v)));
  }
  return d;
}

}  // namespace

TEST_SUITE("baselines") {
  TEST_CASE("ple piecewise values") {
    const Eigen::Vector3d bins(0, 1, 2);
    Eigen::VectorXd out(2);
    ple_encode_value<double>(1.5, bins, out);
    CHECK(out == Eigen::Vector2d(1, 0.5));
    ple_encode_value<double>(0.0, bins, out);
    CHECK(out == Eigen::Vector2d(0, 0));
    ple_encode_value<double>(2.0, bins, out);
    CHECK(out == Eigen::Vector2d(1, 1));
    ple_encode_value<double>(-7.0, bins, out);
    CHECK(out == Eigen::Vector2d(0, 0));
    ple_encode_value<double>(99.0, bins, out);
    CHECK(out == Eigen::Vector2d(1, 1));

    const Eigen::VectorXd at_top = Eigen::VectorXd::Constant(4, 2.0);
    CHECK(ple_encode(at_top, bins) == Eigen::Vector2d(1, 1));
    CHECK_THROWS_AS(ple_encode(at_top, Eigen::Vector3d(0, 1, 1)), std::invalid_argument);
    CHECK_THROWS_AS(ple_encode(at_top, Eigen::VectorXd::Zero(1)), std::invalid_argument);
  }

  TEST_CASE("ple outputs are bounded and monotone") {
    std::mt19937_64 rng(1);
    const auto stack = test::normal_draws(2000, 0, 3, rng);
    const auto bins = ple_bins(stack, 50);
    CHECK(bins.size() == 51);
    for (Eigen::Index t = 1; t < bins.size(); ++t) CHECK(bins[t] > bins[t - 1]);
    CHECK(bins[0] == stack.minCoeff());
    CHECK(bins[50] == stack.maxCoeff());
    Eigen::VectorXd a(50), b(50);
    std::uniform_real_distribution<double> u(-12, 12);
    for (int i = 0; i < 500; ++i) {
      double x = u(rng), y = u(rng);
      if (x > y) std::swap(x, y);
      ple_encode_value<double>(x, bins, a);
      ple_encode_value<double>(y, bins, b);
      CHECK((a.array() >= 0).all());
      CHECK((b.array() <= 1).all());
      CHECK((a.array() <= b.array()).all());
    }
  }

  TEST_CASE("ple bins collapse ties") {
    Eigen::VectorXd tied(10);
    tied << 1, 1, 1, 1, 1, 1, 1, 1, 2, 3;
    const auto bins = ple_bins(tied, 10);
    CHECK(bins.size() < 11);
    for (Eigen::Index t = 1; t < bins.size(); ++t) CHECK(bins[t] > bins[t - 1]);
    const auto constant = ple_bins(Eigen::VectorXd::Constant(5, 4.0), 10);
    CHECK(constant.size() == 2);
  }

  TEST_CASE("paf frequencies and values") {
    const auto c = paf_frequencies(4);
    CHECK(c == Eigen::Vector4d(0.5, 1, 2, 4));
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
    const auto e0 = paf_encode(zero, c, 0.0, 1.0);
    REQUIRE(e0.size() == 8);
    for (int k = 0; k < 4; ++k) {
      CHECK(e0[2 * k] == 0.0);
      CHECK(e0[2 * k + 1] == 1.0);
    }
    // c_1 = 0.5 and x' = 1 puts the first pair at angle pi.
    const Eigen::VectorXd top = Eigen::VectorXd::Ones(1);
    const auto e1 = paf_encode(top, c, 0.0, 1.0);
    CHECK(e1[0] == Approx(0.0).epsilon(1e-12));
    CHECK(std::abs(e1[0]) < 1e-12);
    CHECK(e1[1] == Approx(-1.0));

    const Eigen::VectorXd same = Eigen::VectorXd::Constant(5, 0.3);
    const auto es = paf_encode(same, c, 0.0, 1.0);
    const auto e_one = paf_encode(Eigen::VectorXd::Constant(1, 0.3), c, 0.0, 1.0);
    CHECK((es - e_one).cwiseAbs().maxCoeff() < 1e-15);

    const auto flat = paf_encode(same, c, 2.0, 2.0);
    CHECK(flat == e0);
  }

  TEST_CASE("paf per-value pairs lie on the unit circle") {
    const auto c = paf_frequencies(50);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0, 10);
    for (int i = 0; i < 200; ++i) {
      const auto e = paf_encode(Eigen::VectorXd::Constant(1, u(rng)), c, 0.0, 10.0);
      CHECK((e.array().abs() <= 1.0).all());
      for (int k = 0; k < 50; ++k)
        CHECK(e[2 * k] * e[2 * k] + e[2 * k + 1] * e[2 * k + 1] == Approx(1.0).epsilon(1e-12));
    }
  }

  TEST_CASE("ks statistic hand case") {
    const std::vector<double> s{0.25, 0.5, 0.75};
    const double d = ks_statistic(s, [](double v) { return std::clamp(v, 0.0, 1.0); });
    CHECK(d == Approx(0.25));
  }

  TEST_CASE("ks statistic against its own empirical cdf is at most 1/n") {
    std::mt19937_64 rng(6);
    for (int t = 0; t < 50; ++t) {
      auto v = test::normal_draws(37, 0, 1, rng);
      std::vector<double> x(v.data(), v.data() + v.size());
      std::sort(x.begin(), x.end());
      auto ecdf = [&](double q) {
        return static_cast<double>(std::upper_bound(x.begin(), x.end(), q) - x.begin()) / 37.0;
      };
      CHECK(ks_statistic(x, ecdf) <= 1.0 / 37 + 1e-15);
    }
  }

  TEST_CASE("ks statistic matches a two-sided oracle") {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 50; ++t) {
      auto v = test::normal_draws(25, 0.3, 1.2, rng);
      std::vector<double> x(v.data(), v.data() + v.size());
      auto cdf = [](double q) { return 0.5 * std::erfc(-q / std::numbers::sqrt2); };
      std::vector<double> sorted = x;
      std::sort(sorted.begin(), sorted.end());
      CHECK(ks_statistic(sorted, cdf) == Approx(ks_oracle(x, cdf)).epsilon(1e-12));
    }
  }

  TEST_CASE("ks fingerprint") {
    std::mt19937_64 rng(8);
    const auto normal = test::normal_draws(2000, 10, 2, rng);
    const auto f = ks_fingerprint(normal);
    CHECK((f.array() >= 0).all());
    CHECK((f.array() <= 1).all());
    CHECK(f[0] < 0.05);
    CHECK(f[1] > f[0]);

    std::exponential_distribution<double> ex(2.0);
    Eigen::VectorXd e(2000);
    for (auto& x : e) x = ex(rng);
    const auto fe = ks_fingerprint(e);
    CHECK(fe[2] < 0.05);
    CHECK(fe[4] < 0.05);
    CHECK(fe[0] > 0.1);

    const auto negative = test::normal_draws(100, -50, 1, rng);
    CHECK(ks_fingerprint(negative)[5] == 1.0);
    const auto fn = ks_fingerprint(negative);
    CHECK((fn.array() >= 0).all());
    CHECK((fn.array() <= 1).all());

    CHECK(ks_fingerprint(Eigen::VectorXd::Constant(4, 3.0)) == Eigen::Matrix<double, 7, 1>::Ones());
    CHECK_THROWS_AS(ks_fingerprint(Eigen::VectorXd::Ones(1)), std::invalid_argument);
  }

  TEST_CASE("squash") {
    CHECK(squash(0.0) == 0.0);
    CHECK(squash(std::numbers::e - 1) == Approx(1.0));
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
      double a = u(rng), b = u(rng);
      CHECK(squash(-a) == -squash(a));
      if (a < b) CHECK(squash(a) < squash(b));
    }
  }

  TEST_CASE("squashing encoder") {
    std::mt19937_64 rng(10);
    Corpus c;
    c.columns.push_back(test::make_column("t", "a", 0, test::normal_draws(300, 0, 1, rng)));
    c.columns.push_back(test::make_column("t", "b", 1, test::normal_draws(300, 1000, 1, rng)));
    c.columns.push_back(test::make_column("t", "c", 2, test::normal_draws(300, 0, 1, rng)));
    FitConfig fit_cfg;
    fit_cfg.n_restarts = 2;

    BaselineConfig one;
    one.n_prototypes = 1;
    const auto e1 = squashing_gmm_encode(c, one, fit_cfg);
    CHECK(e1 == Eigen::MatrixXd::Ones(3, 1));

    BaselineConfig cfg;
    cfg.n_prototypes = 4;
    const auto e = squashing_gmm_encode(c, cfg, fit_cfg);
    REQUIRE(e.rows() == 3);
    REQUIRE(e.cols() == 4);
    for (Eigen::Index i = 0; i < 3; ++i) CHECK(e.row(i).sum() == Approx(1.0).epsilon(1e-12));
    CHECK(cosine(e.row(0).transpose(), e.row(1).transpose()) <
          cosine(e.row(0).transpose(), e.row(2).transpose()));

    BaselineConfig bad;
    bad.n_bins = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  }
}
