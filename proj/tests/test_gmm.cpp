#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "tabshift/gmm.hpp"

using namespace tabshift;

namespace {

Eigen::VectorXd two_mode_sample(long n, double w0, double mu0, double mu1, double sd,
                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution pick(w0);
  std::normal_distribution<double> a(mu0, sd), b(mu1, sd);
  Eigen::VectorXd v(n);
  for (long i = 0; i < n; ++i) v(i) = pick(rng) ? a(rng) : b(rng);
  return v;
}

}  // namespace

TEST_CASE("log_likelihood matches the closed form for one component") {
  GaussianMixtureModel g;
  g.weights = Eigen::VectorXd::Ones(1);
  g.means = Eigen::VectorXd::Zero(1);
  g.stddevs = Eigen::VectorXd::Ones(1);
  Eigen::VectorXd v(1);
  v << 0.0;
  // log N(0 | 0, 1) = -log(sqrt(2 pi))
  CHECK(log_likelihood(g, v) == doctest::Approx(-0.9189385332046727).epsilon(1e-12));
  v << 2.0;
  CHECK(log_likelihood(g, v) == doctest::Approx(-0.9189385332046727 - 2.0).epsilon(1e-12));
  CHECK(log_likelihood(g, Eigen::VectorXd()) == 0.0);
}

TEST_CASE("responsibilities follow the two-component logistic form") {
  GaussianMixtureModel g;
  g.weights = Eigen::VectorXd::Constant(2, 0.5);
  g.means = Eigen::VectorXd(2);
  g.means << 0.0, 2.0;
  g.stddevs = Eigen::VectorXd::Ones(2);
  // r0(x) = 1 / (1 + exp(2x - 2)); at x = -1 this is logistic(4).
  Eigen::VectorXd r = responsibilities(g, -1.0);
  CHECK(r.size() == 2);
  CHECK(r(0) == doctest::Approx(0.9820137900379085).epsilon(1e-12));
  CHECK(r.sum() == doctest::Approx(1.0).epsilon(1e-12));
  // Far in the tails the posterior must stay normalized, not underflow.
  r = responsibilities(g, 500.0);
  CHECK(r.sum() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r(1) > 0.999);
}

TEST_CASE("fit_em_fixed recovers a single gaussian") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> src(3.0, 0.5);
  Eigen::VectorXd v(4000);
  for (long i = 0; i < v.size(); ++i) v(i) = src(rng);

  GaussianMixtureModel g = fit_em_fixed(v, 1, 1e-6, 200, 1);
  CHECK(g.n_components() == 1);
  CHECK(g.weights(0) == doctest::Approx(1.0));
  CHECK(g.means(0) == doctest::Approx(3.0).epsilon(0.05));
  CHECK(g.stddevs(0) == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("em log-likelihood trace never decreases") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_real_distribution<double> unif(-5.0, 5.0);
    Eigen::VectorXd v(200);
    for (long i = 0; i < v.size(); ++i) v(i) = unif(rng);
    EmFitInfo info;
    (void)fit_em_fixed(v, 3, 1e-8, 100, trial, &info);
    REQUIRE(info.log_likelihood_trace.size() >= 1);
    for (std::size_t i = 1; i < info.log_likelihood_trace.size(); ++i)
      CHECK(info.log_likelihood_trace[i] >= info.log_likelihood_trace[i - 1] - 1e-9);
  }
}

TEST_CASE("fit_em selects two components for well-separated modes") {
  Eigen::VectorXd v = two_mode_sample(3000, 0.6, -2.0, 2.0, 0.3, 5);
  EmConfig config;
  config.m_max = 5;
  EmFitInfo info;
  GaussianMixtureModel g = fit_em(v, config, 17, &info);
  REQUIRE(g.n_components() == 2);
  CHECK(info.candidate_bic.size() == 5);

  const int lo = g.means(0) < g.means(1) ? 0 : 1;
  const int hi = 1 - lo;
  CHECK(g.means(lo) == doctest::Approx(-2.0).epsilon(0.05));
  CHECK(g.means(hi) == doctest::Approx(2.0).epsilon(0.05));
  CHECK(g.weights(lo) == doctest::Approx(0.6).epsilon(0.08));
}

TEST_CASE("prune_weight zero keeps the component count fixed") {
  Eigen::VectorXd v = two_mode_sample(500, 0.5, -1.0, 1.0, 0.4, 2);
  EmConfig config;
  config.m_max = 4;
  config.prune_weight = 0.0;
  GaussianMixtureModel g = fit_em(v, config, 3);
  CHECK(g.n_components() == 4);
}

TEST_CASE("constant data yields one degenerate component with a floored stddev") {
  Eigen::VectorXd v = Eigen::VectorXd::Constant(50, 7.5);
  GaussianMixtureModel g = fit_em_fixed(v, 3, 1e-4, 50, 9);
  CHECK(g.means.size() >= 1);
  for (int k = 0; k < g.n_components(); ++k) {
    CHECK(g.stddevs(k) > 0.0);
    CHECK(std::isfinite(g.stddevs(k)));
  }
  CHECK(g.means.minCoeff() == doctest::Approx(7.5));
  CHECK(g.means.maxCoeff() == doctest::Approx(7.5));
}

TEST_CASE("fit rejects non-finite input") {
  Eigen::VectorXd v(3);
  v << 1.0, std::nan(""), 2.0;
  CHECK_THROWS_AS(fit_em_fixed(v, 1, 1e-4, 10, 0), std::invalid_argument);
  CHECK_THROWS_AS(fit_em_fixed(Eigen::VectorXd(), 1, 1e-4, 10, 0), std::invalid_argument);
  Eigen::VectorXd ok = Eigen::VectorXd::LinSpaced(10, 0, 1);
  CHECK_THROWS_AS(fit_em_fixed(ok, 0, 1e-4, 10, 0), std::invalid_argument);
}

TEST_CASE("mixture validation rejects malformed models") {
  GaussianMixtureModel g;
  g.weights = Eigen::VectorXd::Constant(2, 0.5);
  g.means = Eigen::VectorXd::Zero(2);
  g.stddevs = Eigen::VectorXd::Ones(2);
  CHECK_NOTHROW(g.validate());

  GaussianMixtureModel bad = g;
  bad.stddevs(1) = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = g;
  bad.weights(0) = 0.9;  // no longer sums to 1
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = g;
  bad.means.resize(1);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("fit is deterministic in the seed") {
  Eigen::VectorXd v = two_mode_sample(400, 0.5, -1.5, 1.5, 0.5, 13);
  GaussianMixtureModel a = fit_em_fixed(v, 3, 1e-5, 100, 42);
  GaussianMixtureModel b = fit_em_fixed(v, 3, 1e-5, 100, 42);
  CHECK(a.means == b.means);
  CHECK(a.weights == b.weights);
  CHECK(a.stddevs == b.stddevs);
}
