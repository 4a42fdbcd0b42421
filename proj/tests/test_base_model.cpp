#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "mlchdp/base_model.hpp"
#include "mlchdp/math_util.hpp"
#include "support/oracles.hpp"

using namespace mlchdp;
using Catch::Approx;

TEST_CASE("sufficient statistics add/remove arithmetic", "[base-model]") {
  SuffStats s(1);
  s.add({2.0});
  REQUIRE(s.count == 1);
  REQUIRE(s.sum[0] == Approx(2.0));
  REQUIRE(s.sumsq[0] == Approx(4.0));

  SECTION("remove is the exact inverse of add") {
    SuffStats t(1);
    t.add({1.3});
    t.add({-0.7});
    SuffStats before = t;
    t.add({5.5});
    t.remove({5.5});
    REQUIRE(t.count == before.count);
    REQUIRE(t.sum[0] == Approx(before.sum[0]).margin(1e-12));
    REQUIRE(t.sumsq[0] == Approx(before.sumsq[0]).margin(1e-12));
  }

  SECTION("remove from empty throws") {
    SuffStats t(1);
    REQUIRE_THROWS_AS(t.remove({1.0}), std::runtime_error);
  }

  SECTION("count zero resets moments exactly") {
    SuffStats t(2);
    t.add({0.1, 0.2});
    t.remove({0.1, 0.2});
    REQUIRE(t.count == 0);
    REQUIRE(t.sum[0] == 0.0);
    REQUIRE(t.sumsq[1] == 0.0);
  }
}

TEST_CASE("sufficient statistics hold up over 1e6 add/remove cycles", "[base-model]") {
  Rng rng(7);
  SuffStats s(1);
  std::vector<double> resident;
  for (int i = 0; i < 10; ++i) {
    double x = rng.normal(3.0, std::sqrt(2.0));
    resident.push_back(x);
    s.add({x});
  }
  for (int cycle = 0; cycle < 1000000; ++cycle) {
    double x = rng.normal(3.0, std::sqrt(2.0));
    s.add({x});
    s.remove({x});
  }
  double exact_sum = 0.0, exact_sumsq = 0.0;
  for (double x : resident) {
    exact_sum += x;
    exact_sumsq += x * x;
  }
  double centered = s.sumsq[0] - s.sum[0] * s.sum[0] / 10.0;
  double exact_centered = exact_sumsq - exact_sum * exact_sum / 10.0;
  REQUIRE(s.count == 10);
  REQUIRE(std::abs(centered - exact_centered) < 1e-9 * std::abs(exact_centered));
  // Cauchy-Schwarz invariant
  REQUIRE(s.sumsq[0] * 10.0 >= s.sum[0] * s.sum[0] * (1.0 - 1e-9));
}

TEST_CASE("stats of 1000 standard normal draws", "[base-model]") {
  Rng rng(11);
  SuffStats s(1);
  for (int i = 0; i < 1000; ++i) s.add({rng.normal(0.0, 1.0)});
  double se = 1.0 / std::sqrt(1000.0);
  REQUIRE(std::abs(s.sum[0] / 1000.0) < 5.0 * se);
}

TEST_CASE("sample_atom_params draws from the prior when stats are empty", "[base-model]") {
  BasePrior prior = BasePrior::isotropic(1, 2.0, 1.5, 5.0, 2.0);
  SuffStats empty(1);
  Rng rng(3);
  std::vector<double> mus;
  for (int i = 0; i < 100000; ++i)
    mus.push_back(sample_atom_params(prior, empty, rng).first[0]);
  // Var(mu) = E[sigma^2] / kappa0 with E[sigma^2] = nu0 sigma0^2 / (nu0 - 2)
  double var_mu = (5.0 * 2.0 / 3.0) / 2.0;
  double se = std::sqrt(var_mu / 100000.0);
  REQUIRE(std::abs(oracle::mean(mus) - 1.5) < 5.0 * se);
}

TEST_CASE("sample_atom_params posterior consistency", "[base-model]") {
  BasePrior prior = BasePrior::isotropic(1, 1.0, 0.0, 3.0, 1.0);
  SuffStats s(1);
  Rng rng(5);
  for (int i = 0; i < 10000; ++i) s.add({rng.normal(3.0, std::sqrt(2.0))});
  std::vector<double> mus;
  for (int i = 0; i < 50; ++i) mus.push_back(sample_atom_params(prior, s, rng).first[0]);
  REQUIRE(std::abs(oracle::mean(mus) - 3.0) < 0.1);
}

TEST_CASE("kappa0 -> infinity pins mu at mu0", "[base-model]") {
  BasePrior prior = BasePrior::isotropic(1, 1e9, 0.0, 3.0, 1.0);
  SuffStats s(1);
  for (int i = 0; i < 5; ++i) s.add({7.0});
  Rng rng(9);
  for (int i = 0; i < 20; ++i) {
    auto [mu, s2] = sample_atom_params(prior, s, rng);
    REQUIRE(std::abs(mu[0]) < 1e-3);
    REQUIRE(s2[0] > 0.0);
  }
}

TEST_CASE("loglik closed forms", "[base-model]") {
  BaseAtom a;
  a.mu = {0.0};
  a.sigma2 = {1.0};
  REQUIRE(loglik(a, {0.0}) == Approx(-0.9189385332046727).epsilon(1e-12));

  BaseAtom b;
  b.mu = {0.0, 0.0};
  b.sigma2 = {1.0, 1.0};
  REQUIRE(loglik(b, {0.0, 0.0}) == Approx(2.0 * -0.9189385332046727).epsilon(1e-12));

  BaseAtom c;
  c.mu = {3.0};
  c.sigma2 = {2.0};
  // closed form -0.5 ln(4 pi); cross-check against the direct density
  REQUIRE(loglik(c, {3.0}) == Approx(-0.5 * std::log(4.0 * M_PI)).epsilon(1e-12));
  REQUIRE(loglik(c, {3.0}) == Approx(std::log(1.0 / std::sqrt(4.0 * M_PI))).epsilon(1e-12));

  REQUIRE_THROWS_AS(loglik(c, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("posterior predictive closed form at the canonical point", "[base-model]") {
  BasePrior prior = BasePrior::isotropic(1, 1.0, 0.0, 1.0, 1.0);
  SuffStats empty(1);
  // t_1(0; 0, scale^2 = 2) = 1 / (pi sqrt(2))
  double expect = -std::log(M_PI * std::sqrt(2.0));
  REQUIRE(posterior_predictive_loglik(prior, empty, {0.0}) ==
          Approx(expect).epsilon(1e-12));
}

TEST_CASE("posterior predictive matches 2-D quadrature", "[base-model]") {
  BasePrior prior = BasePrior::isotropic(1, 1.0, 0.0, 1.0, 1.0);

  SECTION("empty stats") {
    SuffStats empty(1);
    for (double x : {-4.0, -1.0, 0.0, 0.5, 2.5, 6.0}) {
      PosteriorParams p = posterior_params(prior, empty, 0);
      double quad = std::log(
          oracle::quad_predictive_pdf({p.kappa_n, p.mu_n, p.nu_n, p.sigma2_n}, x));
      REQUIRE(posterior_predictive_loglik(prior, empty, {x}) ==
              Approx(quad).margin(1e-6));
    }
  }

  SECTION("loaded stats") {
    SuffStats s(1);
    for (double v : {0.4, 1.9, -0.3, 2.2, 1.1, 0.9, 1.6}) s.add({v});
    for (double x : {-3.0, 0.0, 1.0, 1.42, 5.0}) {
      PosteriorParams p = posterior_params(prior, s, 0);
      double quad = std::log(
          oracle::quad_predictive_pdf({p.kappa_n, p.mu_n, p.nu_n, p.sigma2_n}, x));
      REQUIRE(posterior_predictive_loglik(prior, s, {x}) == Approx(quad).margin(1e-6));
    }
  }
}

TEST_CASE("posterior predictive integrates to 1", "[base-model]") {
  BasePrior prior = BasePrior::isotropic(1, 1.0, 0.0, 5.0, 1.0);
  SuffStats s(1);
  for (double v : {0.2, -0.5, 1.0}) s.add({v});
  int n = 100000;
  std::vector<double> grid(n), pdf(n);
  for (int i = 0; i < n; ++i) {
    grid[i] = -50.0 + 100.0 * i / (n - 1.0);
    pdf[i] = std::exp(posterior_predictive_loglik(prior, s, {grid[i]}));
  }
  REQUIRE(trapezoid(grid, pdf) == Approx(1.0).margin(1e-4));
}

TEST_CASE("predictive concentrates on the data distribution", "[base-model]") {
  BasePrior prior = BasePrior::isotropic(1, 1.0, 0.0, 3.0, 1.0);
  SuffStats s(1);
  Rng rng(13);
  for (int i = 0; i < 10000; ++i) s.add({rng.normal(3.0, std::sqrt(2.0))});
  double target = log_normal_pdf(3.0, 3.0, 2.0);
  REQUIRE(std::abs(posterior_predictive_loglik(prior, s, {3.0}) - target) < 1e-2);

  // both likelihood routes agree in the large-data limit
  auto [mu, s2] = sample_atom_params(prior, s, rng);
  BaseAtom atom;
  atom.mu = mu;
  atom.sigma2 = s2;
  REQUIRE(std::abs(loglik(atom, {3.0}) -
                   posterior_predictive_loglik(prior, s, {3.0})) < 1e-2);
}

TEST_CASE("predictive cache matches the direct path", "[base-model]") {
  BasePrior prior = BasePrior::isotropic(2, 0.7, 0.3, 2.5, 1.4);
  SuffStats s(2);
  Rng rng(17);
  for (int i = 0; i < 9; ++i) s.add({rng.normal(0, 1), rng.normal(1, 2)});
  PredictiveCache cache;
  for (int i = 0; i < 5; ++i) {
    std::vector<double> x{rng.normal(0, 2), rng.normal(0, 2)};
    REQUIRE(posterior_predictive_loglik(prior, s, x, &cache) ==
            Approx(posterior_predictive_loglik(prior, s, x)).epsilon(1e-13));
  }
}

TEST_CASE("default prior is data-scaled", "[base-model]") {
  std::vector<std::vector<double>> obs = {{1.0, 10.0}, {3.0, 14.0}, {2.0, 12.0}};
  BasePrior p = make_default_prior(obs);
  REQUIRE(p.kappa0 == 1.0);
  REQUIRE(p.nu0 == 3.0);
  REQUIRE(p.mu0[0] == Approx(2.0));
  REQUIRE(p.mu0[1] == Approx(12.0));
  REQUIRE(p.sigma0sq[0] == Approx(1.0));
  REQUIRE(p.sigma0sq[1] == Approx(4.0));
}
