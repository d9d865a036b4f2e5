#include "doctest.h"

#include "gem/error.hpp"
#include "gem/gmm.hpp"
#include "support.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace gem;
using gem::test::make_model;
using doctest::Approx;

namespace {

// Direct (non-log-space) responsibilities, valid when nothing underflows.
Eigen::VectorXd naive_responsibilities(double x, const GmmModeld& m) {
  Eigen::VectorXd r(m.size());
  for (Eigen::Index j = 0; j < m.size(); ++j) {
    const double d = x - m.means[j];
    r[j] = m.weights[j] * std::exp(-d * d / (2 * m.variances[j])) /
           std::sqrt(2 * std::numbers::pi * m.variances[j]);
  }
  return r / r.sum();
}

double trapezoid(const GmmModeld& m, double lo, double hi, int steps) {
  const double h = (hi - lo) / steps;
  double s = 0.5 * (mixture_pdf(lo, m) + mixture_pdf(hi, m));
  for (int i = 1; i < steps; ++i) s += mixture_pdf(lo + i * h, m);
  return s * h;
}

}  // namespace

TEST_SUITE("gmm") {
  TEST_CASE("component_pdf closed forms") {
    CHECK(component_pdf(0.0, 0.0, 1.0) == Approx(0.3989422804).epsilon(1e-10));
    CHECK(component_pdf(1.0, 0.0, 1.0) == Approx(0.2419707245).epsilon(1e-10));
    for (double v : {0.01, 0.5, 3.0, 1e4})
      CHECK(component_pdf(2.5, 2.5, v) == Approx(1.0 / std::sqrt(2 * std::numbers::pi * v)).epsilon(1e-12));
    CHECK(component_pdf(1e3, 0.0, 1.0) >= 0.0);
    CHECK_THROWS_AS(component_pdf(0.0, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(component_pdf(0.0, 0.0, -1.0), std::invalid_argument);
  }

  TEST_CASE("mixture_pdf") {
    CHECK(mixture_pdf(0.0, make_model({1}, {0}, {1})) == Approx(0.3989422804).epsilon(1e-10));
    CHECK(mixture_pdf(0.0, make_model({.5, .5}, {-1, 1}, {1, 1})) == Approx(0.2419707245).epsilon(1e-10));
  }

  TEST_CASE("fitted mixture integrates to one") {
    FitConfig cfg;
    cfg.n_components = 3;
    cfg.n_restarts = 2;
    cfg.seed = 11;
    const auto m = fit(test::three_mode_stack(4000, 5), cfg);
    CHECK(trapezoid(m, -50, 50, 200000) == Approx(1.0).epsilon(1e-4));
  }

  TEST_CASE("responsibilities") {
    const auto one = make_model({1}, {3}, {2});
    for (double x : {-100.0, 0.0, 3.0, 1e6}) CHECK(responsibilities(x, one)[0] == 1.0);

    const auto sym = make_model({.5, .5}, {-2, 2}, {1.5, 1.5});
    const auto r = responsibilities(0.0, sym);
    CHECK(r[0] == Approx(0.5));
    CHECK(r[1] == Approx(0.5));

    const auto far = make_model({.5, .5}, {0, 10}, {1, 1});
    const auto g = responsibilities(0.0, far);
    CHECK(g[0] == Approx(1.0 / (1.0 + std::exp(-50.0))).epsilon(1e-15));
    CHECK(g[1] == Approx(std::exp(-50.0)).epsilon(1e-9));
  }

  TEST_CASE("log-space responsibilities stay normalized where direct pdfs underflow") {
    const auto m = make_model({.5, .5}, {0, 1}, {1e-4, 1e-4});
    const auto r = responsibilities(500.0, m);
    CHECK(r.allFinite());
    CHECK(r.sum() == Approx(1.0).epsilon(1e-12));
    CHECK(r[1] == Approx(1.0));
  }

  TEST_CASE("responsibility rows sum to one and match the direct formula") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-5, 5), pos(0.2, 3);
    std::uniform_int_distribution<int> kk(1, 8);
    for (int trial = 0; trial < 1000; ++trial) {
      const int k = kk(rng);
      std::vector<double> w(k), mu(k), var(k);
      for (int j = 0; j < k; ++j) {
        w[j] = pos(rng);
        mu[j] = u(rng);
        var[j] = pos(rng);
      }
      double s = 0;
      for (double v : w) s += v;
      for (double& v : w) v /= s;
      const auto m = make_model(w, mu, var);
      const double x = u(rng);
      const auto r = responsibilities(x, m);
      REQUIRE(std::abs(r.sum() - 1.0) <= 1e-9);
      CHECK((r.array() >= 0).all());
      CHECK((r - naive_responsibilities(x, m)).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  TEST_CASE("responsibility_matrix matches per-point responsibilities") {
    const auto m = make_model({.2, .3, .5}, {-1, 0, 4}, {1, .5, 2});
    Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(3000, -10, 10);
    const auto p = responsibility_matrix(x, m);
    REQUIRE(p.rows() == 3000);
    REQUIRE(p.cols() == 3);
    for (Eigen::Index i : {Eigen::Index{0}, Eigen::Index{1023}, Eigen::Index{1024}, Eigen::Index{2999}})
      CHECK((p.row(i).transpose() - responsibilities(x[i], m)).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("log_likelihood equals the sum of log mixture densities") {
    const auto m = make_model({.4, .6}, {-1, 2}, {1, 0.5});
    Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(2500, -4, 5);
    double ref = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i) ref += std::log(mixture_pdf(x[i], m));
    CHECK(log_likelihood(x, m) == Approx(ref).epsilon(1e-12));
  }

  TEST_CASE("three-mode recovery") {
    FitConfig cfg;
    cfg.n_components = 3;
    cfg.seed = 7;
    const auto report = fit_traced(test::three_mode_stack(10000, 2024), cfg);
    const auto& m = report.model;
    CHECK(m.means[0] == Approx(-5).epsilon(0.15 / 5));
    CHECK(std::abs(m.means[0] + 5) < 0.15);
    CHECK(std::abs(m.means[1]) < 0.15);
    CHECK(std::abs(m.means[2] - 5) < 0.15);
    CHECK(std::abs(m.weights[0] - .3) < 0.03);
    CHECK(std::abs(m.weights[1] - .4) < 0.03);
    CHECK(std::abs(m.weights[2] - .3) < 0.03);
    CHECK(m.n_samples == 10000);
    CHECK(report.restarts.size() == 10u);
  }

  TEST_CASE("EM log-likelihood never decreases") {
    FitConfig cfg;
    cfg.n_components = 6;
    cfg.n_restarts = 4;
    cfg.tol = 1e-9;
    cfg.max_iter = 300;
    cfg.seed = 3;
    const auto report = fit_traced(test::three_mode_stack(3000, 8), cfg);
    for (const auto& t : report.restarts) {
      REQUIRE(t.mean_log_likelihood.size() >= 2);
      for (std::size_t i = 1; i < t.mean_log_likelihood.size(); ++i)
        CHECK(t.mean_log_likelihood[i] >= t.mean_log_likelihood[i - 1] - 1e-8);
    }
  }

  TEST_CASE("best restart has the highest likelihood, ties to the lowest index") {
    FitConfig cfg;
    cfg.n_components = 4;
    cfg.n_restarts = 5;
    cfg.seed = 100;
    const auto report = fit_traced(test::three_mode_stack(2000, 1), cfg);
    const auto& best = report.model;
    for (const auto& t : report.restarts) {
      CHECK(t.model.log_likelihood <= best.log_likelihood);
      if (t.restart < best.restart) CHECK(t.model.log_likelihood < best.log_likelihood);
      CHECK(t.seed == cfg.seed + static_cast<std::uint64_t>(t.restart));
    }
  }

  TEST_CASE("two point masses") {
    Eigen::VectorXd x(2000);
    for (int i = 0; i < 2000; ++i) x[i] = (i % 2) ? 10.0 : 0.0;
    FitConfig cfg;
    cfg.n_components = 2;
    cfg.n_restarts = 3;
    const auto m = fit(x, cfg);
    CHECK(m.means[0] == Approx(0.0));
    CHECK(m.means[1] == Approx(10.0));
    CHECK(m.weights[0] == Approx(0.5));
    CHECK(m.weights[1] == Approx(0.5));
    const double floor = 1e-6 * 25.0;  // pooled variance is 25
    CHECK(m.variance_floor == Approx(floor));
    CHECK(m.variances[0] == Approx(floor));
    CHECK(m.variances[1] == Approx(floor));
  }

  TEST_CASE("K=1 is the sample mean and population variance") {
    std::mt19937_64 rng(4);
    const auto x = test::normal_draws(777, 3.0, 2.0, rng);
    FitConfig cfg;
    cfg.n_components = 1;
    cfg.n_restarts = 2;
    const auto m = fit(x, cfg);
    const double mean = x.mean();
    const double var = (x.array() - mean).square().mean();
    CHECK(m.weights[0] == 1.0);
    CHECK(m.means[0] == Approx(mean).epsilon(1e-12));
    CHECK(m.variances[0] == Approx(var).epsilon(1e-12));
  }

  TEST_CASE("K=1 scales exactly with the data") {
    std::mt19937_64 rng(5);
    const auto x = test::normal_draws(500, -1.0, 0.7, rng);
    FitConfig cfg;
    cfg.n_components = 1;
    cfg.n_restarts = 1;
    const double a = 37.5;
    const auto m = fit(x, cfg);
    const auto ma = fit(Eigen::VectorXd(a * x), cfg);
    CHECK(ma.means[0] == Approx(a * m.means[0]).epsilon(1e-6));
    CHECK(ma.variances[0] == Approx(a * a * m.variances[0]).epsilon(1e-6));
  }

  TEST_CASE("fit is deterministic and canonical") {
    FitConfig cfg;
    cfg.n_components = 5;
    cfg.n_restarts = 3;
    cfg.seed = 42;
    const auto x = test::three_mode_stack(3000, 9);
    const auto a = fit(x, cfg);
    const auto b = fit(x, cfg);
    CHECK(a.means == b.means);
    CHECK(a.weights == b.weights);
    CHECK(a.variances == b.variances);
    CHECK(a.log_likelihood == b.log_likelihood);
    for (Eigen::Index j = 1; j < a.size(); ++j) CHECK(a.means[j] > a.means[j - 1]);
    CHECK(a.weights.sum() == Approx(1.0).epsilon(1e-12));
    CHECK((a.variances.array() >= a.variance_floor).all());
    CHECK_NOTHROW(a.validate());
  }

  TEST_CASE("threaded restarts give the same model") {
    FitConfig cfg;
    cfg.n_components = 4;
    cfg.n_restarts = 5;
    cfg.seed = 8;
    const auto x = test::three_mode_stack(2000, 10);
    const auto serial = fit(x, cfg);
    cfg.n_threads = 3;
    const auto threaded = fit(x, cfg);
    CHECK(serial.means == threaded.means);
    CHECK(serial.log_likelihood == threaded.log_likelihood);
    CHECK(serial.restart == threaded.restart);
  }

  TEST_CASE("canonicalize sorts by mean then weight") {
    auto m = make_model({.2, .5, .3}, {3, -1, 3}, {1, 2, 3});
    canonicalize(m);
    CHECK(m.means[0] == -1);
    CHECK(m.weights[0] == .5);
    CHECK(m.means[1] == 3);
    CHECK(m.weights[1] == .2);
    CHECK(m.variances[2] == 3);
  }

  TEST_CASE("fit errors") {
    FitConfig cfg;
    cfg.n_components = 3;
    Eigen::VectorXd two(4);
    two << 1, 1, 2, 2;
    try {
      fit(two, cfg);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("smaller component count") != std::string::npos);
    }
    CHECK_THROWS_AS(fit(Eigen::VectorXd(), cfg), DataError);
    Eigen::VectorXd bad(3);
    bad << 1, std::nan(""), 3;
    CHECK_THROWS_AS(fit(bad, cfg), DataError);

    FitConfig zero;
    zero.n_components = 0;
    CHECK_THROWS_AS(fit(two, zero), std::invalid_argument);
    FitConfig neg_tol;
    neg_tol.tol = 0;
    CHECK_THROWS_AS(neg_tol.validate(), std::invalid_argument);
  }

  TEST_CASE("float scalar type") {
    const Eigen::VectorXd xd = test::three_mode_stack(3000, 12);
    const Eigen::VectorXf x = xd.cast<float>();
    FitConfig cfg;
    cfg.n_components = 3;
    cfg.n_restarts = 5;
    const auto m = fit(x, cfg);
    const auto md = fit(xd, cfg);
    for (int j = 0; j < 3; ++j) {
      CHECK(m.means[j] == Approx(md.means[j]).epsilon(1e-3));
      CHECK(m.weights[j] == Approx(md.weights[j]).epsilon(1e-3));
    }
    CHECK(std::abs(m.means[1]) < 0.2f);
    CHECK(std::abs(m.weights.sum() - 1.0f) < 1e-5f);
  }

  TEST_CASE("BIC selection") {
    FitConfig cfg;
    cfg.n_restarts = 3;
    cfg.seed = 1;
    const auto x = test::three_mode_stack(3000, 77);
    const auto sel = select_components_bic(x, {5, 1, 3, 2, 3}, cfg);
    CHECK(sel.best_k == 3);
    CHECK(sel.scores.size() == 4u);
    const auto& m3 = sel.reports.at(3).model;
    CHECK(sel.scores.at(3) == Approx(-2 * m3.log_likelihood + 8 * std::log(3000.0)));
    CHECK(sel.best_model().size() == 3);

    std::mt19937_64 rng(2);
    const auto single = test::normal_draws(3000, 0, 1, rng);
    CHECK(select_components_bic(single, {1, 2}, cfg).best_k == 1);
    CHECK(select_components_bic(single, {2}, cfg).best_k == 2);
    CHECK(free_parameters(50) == 149);
  }
}
