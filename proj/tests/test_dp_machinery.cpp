#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "mlchdp/dp.hpp"
#include "mlchdp/rng.hpp"
#include "support/oracles.hpp"

using namespace mlchdp;
using Catch::Approx;

TEST_CASE("collapsed_weight formula", "[dp-machinery]") {
  REQUIRE(collapsed_weight(0, 0, 1.7, 0.42) == Approx(0.42).epsilon(1e-12));
  REQUIRE(collapsed_weight(5, 10, 1e-12, 0.9) == Approx(0.5).margin(1e-12));
  REQUIRE(collapsed_weight(2, 7, 1.0, 0.3) == Approx(0.2875).epsilon(1e-12));
}

TEST_CASE("collapsed_weight equals the Dirichlet posterior mean", "[dp-machinery]") {
  // pi ~ Dir(alpha beta_1 + n_1, alpha beta_2 + n_2, alpha beta_new);
  // E[pi_1] must equal the collapsed weight.
  double alpha = 1.0;
  std::vector<double> beta = {0.3, 0.5, 0.2};
  std::vector<long long> n = {2, 5};
  Rng rng(23);
  std::vector<double> conc = {alpha * beta[0] + n[0], alpha * beta[1] + n[1],
                              alpha * beta[2]};
  std::vector<double> draws;
  for (int i = 0; i < 1000000; ++i) draws.push_back(rng.dirichlet(conc)[0]);
  double se = oracle::mc_se(draws);
  REQUIRE(std::abs(oracle::mean(draws) - collapsed_weight(2, 7, alpha, 0.3)) <
          5.0 * se);
}

TEST_CASE("collapsed weights over all atoms sum to 1", "[dp-machinery]") {
  Rng rng(29);
  for (int rep = 0; rep < 50; ++rep) {
    int K = 1 + rng.uniform_int(6);
    std::vector<double> conc(K + 1, 1.0);
    std::vector<double> beta = rng.dirichlet(conc);
    std::vector<long long> n(K);
    long long tot = 0;
    for (auto& v : n) {
      v = rng.uniform_int(20);
      tot += v;
    }
    double alpha = 0.1 + 5.0 * rng.u01();
    double s = 0.0;
    for (int k = 0; k < K; ++k) s += collapsed_weight(n[k], tot, alpha, beta[k]);
    s += collapsed_weight(0, tot, alpha, beta[K]);
    REQUIRE(s == Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("table counts: single customer opens one table", "[dp-machinery]") {
  Rng rng(31);
  for (int i = 0; i < 100; ++i) REQUIRE(sample_table_count(1, 0.3 + i, rng) == 1);
}

TEST_CASE("table counts: huge base mass opens a table per customer", "[dp-machinery]") {
  Rng rng(37);
  for (int i = 0; i < 20; ++i) REQUIRE(sample_table_count(50, 1e9, rng) == 50);
}

TEST_CASE("table counts: harmonic expectation at alpha beta = 1", "[dp-machinery]") {
  // E[m] = sum_{i=1..10} 1/i, Var = sum (1/i)(1 - 1/i)
  double expect = 0.0, var = 0.0;
  for (int i = 1; i <= 10; ++i) {
    expect += 1.0 / i;
    var += (1.0 / i) * (1.0 - 1.0 / i);
  }
  REQUIRE(expect == Approx(2.9289682539682538).epsilon(1e-12));
  Rng rng(41);
  double acc = 0.0;
  int n = 100000;
  for (int i = 0; i < n; ++i) acc += static_cast<double>(sample_table_count(10, 1.0, rng));
  double se = std::sqrt(var / n);
  REQUIRE(std::abs(acc / n - expect) < 5.0 * se);
}

TEST_CASE("table counts never exceed customer counts", "[dp-machinery]") {
  Rng rng(43);
  CountMatrix n;
  n.init(3, 4);
  n.add(0, 0, 7);
  n.add(0, 2, 1);
  n.add(1, 1, 30);
  n.add(2, 0, 2);
  ParentWeights beta;
  beta.w = {0.4, 0.3, 0.2, 0.1};
  for (int rep = 0; rep < 200; ++rep) {
    TableCounts m = sample_table_counts(n, 1.3, beta, rng);
    for (int l = 0; l < n.rows(); ++l)
      for (int k = 0; k < n.cols(); ++k) {
        REQUIRE(m.at(l, k) <= n.at(l, k));
        REQUIRE((m.at(l, k) == 0) == (n.at(l, k) == 0));
        if (n.at(l, k) > 0) REQUIRE(m.at(l, k) >= 1);
      }
  }
}

TEST_CASE("parent weights: no atoms puts all mass on the remainder", "[dp-machinery]") {
  Rng rng(47);
  TableCounts m;
  m.init(1, 1);
  ParentWeights w = sample_parent_weights(m, 1.0, rng);
  REQUIRE(w.atoms() == 0);
  REQUIRE(w.remainder() == Approx(1.0));
}

TEST_CASE("parent weights concentrate with large table counts", "[dp-machinery]") {
  Rng rng(53);
  TableCounts m;
  m.init(1, 3);
  m.add(0, 0, 1000000);
  m.add(0, 1, 1000000);
  for (int rep = 0; rep < 20; ++rep) {
    ParentWeights w = sample_parent_weights(m, 1.0, rng);
    REQUIRE(w[0] == Approx(0.5).margin(1e-2));
    REQUIRE(w[1] == Approx(0.5).margin(1e-2));
    REQUIRE(w.remainder() < 1e-2);
    REQUIRE(w.remainder() > 0.0);
    REQUIRE(w.sum() == Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("parent weights have the Dirichlet mean", "[dp-machinery]") {
  Rng rng(59);
  TableCounts m;
  m.init(2, 4);
  m.add(0, 0, 3);
  m.add(0, 1, 2);
  m.add(1, 0, 5);
  m.add(1, 2, 1);
  double gamma = 2.0;
  // column sums (8, 2, 1), E[beta] = (8, 2, 1, 2) / 13
  int n = 100000;
  std::vector<double> b0, brem;
  for (int i = 0; i < n; ++i) {
    ParentWeights w = sample_parent_weights(m, gamma, rng);
    b0.push_back(w[0]);
    brem.push_back(w.remainder());
  }
  REQUIRE(std::abs(oracle::mean(b0) - 8.0 / 13.0) < 5.0 * oracle::mc_se(b0));
  REQUIRE(std::abs(oracle::mean(brem) - 2.0 / 13.0) < 5.0 * oracle::mc_se(brem));
}

TEST_CASE("parent weights: zero-table atoms keep zero weight", "[dp-machinery]") {
  Rng rng(61);
  TableCounts m;
  m.init(1, 3);
  m.add(0, 0, 4);  // atom 1 has no tables (emptied this sweep)
  ParentWeights w = sample_parent_weights(m, 0.5, rng);
  REQUIRE(w.atoms() == 2);
  REQUIRE(w[1] == 0.0);
  REQUIRE(w.remainder() > 0.0);
  REQUIRE(w.sum() == Approx(1.0).margin(1e-12));
}

TEST_CASE("parent weights: all-zero tables with atoms present throws", "[dp-machinery]") {
  Rng rng(67);
  TableCounts m;
  m.init(1, 2);
  REQUIRE_THROWS_AS(sample_parent_weights(m, 1.0, rng), std::runtime_error);
}

TEST_CASE("group marginal: empty group has probability 1", "[dp-machinery]") {
  ParentWeights beta;
  beta.w = {0.5, 0.5, 0.0};
  REQUIRE(group_marginal_loglik({0, 0}, 1.0, beta, {3, 4}, 7) == 0.0);
}

TEST_CASE("group marginal: single item in empty candidate reduces to beta", "[dp-machinery]") {
  ParentWeights beta;
  beta.w = {0.3, 0.6, 0.1};
  REQUIRE(group_marginal_loglik({0, 1}, 2.0, beta, {0, 0}, 0) ==
          Approx(std::log(0.6)).epsilon(1e-12));
}

TEST_CASE("group marginal matches per-item urn enumeration", "[dp-machinery]") {
  // counts (2, 1) over K = 2, alpha = 1, beta = (0.5, 0.5, 0), empty base row:
  // canonical product 0.5 * 0.75 * (0.5/3) = 1/16, identical for all 3
  // orderings of the multiset {1, 1, 2}.
  ParentWeights beta;
  beta.w = {0.5, 0.5, 0.0};
  double alpha = 1.0;
  std::vector<long long> base = {0, 0};

  auto urn = [&](const std::vector<int>& items) {
    std::vector<long long> seen(2, 0);
    long long placed = 0;
    double ll = 0.0;
    for (int k : items) {
      ll += std::log(base[k] + seen[k] + alpha * beta[k]) -
            std::log(static_cast<double>(placed) + alpha);
      ++seen[k];
      ++placed;
    }
    return ll;
  };

  double expect = -std::log(16.0);
  for (const auto& order :
       std::vector<std::vector<int>>{{0, 0, 1}, {0, 1, 0}, {1, 0, 0}})
    REQUIRE(urn(order) == Approx(expect).epsilon(1e-12));
  REQUIRE(group_marginal_loglik({2, 1}, alpha, beta, base, 0) ==
          Approx(expect).epsilon(1e-12));
}

TEST_CASE("group marginal is exchangeable in item order", "[dp-machinery]") {
  Rng rng(71);
  for (int rep = 0; rep < 30; ++rep) {
    int K = 2 + rng.uniform_int(4);
    std::vector<double> conc(K + 1, 0.7);
    ParentWeights beta;
    beta.w = rng.dirichlet(conc);
    std::vector<long long> base(K), counts(K);
    long long base_tot = 0;
    std::vector<int> items;
    for (int k = 0; k < K; ++k) {
      base[k] = rng.uniform_int(8);
      base_tot += base[k];
      counts[k] = rng.uniform_int(4);
      for (int c = 0; c < counts[k]; ++c) items.push_back(k);
    }
    if (items.empty()) items.push_back(0), counts[0] = 1;
    double alpha = 0.2 + 3.0 * rng.u01();

    auto urn = [&](const std::vector<int>& seq) {
      std::vector<long long> seen(K, 0);
      long long placed = 0;
      double ll = 0.0;
      for (int k : seq) {
        ll += std::log(base[k] + seen[k] + alpha * beta[k]) -
              std::log(static_cast<double>(base_tot + placed) + alpha);
        ++seen[k];
        ++placed;
      }
      return ll;
    };

    double canonical = group_marginal_loglik(counts, alpha, beta, base, base_tot);
    for (int shuffle = 0; shuffle < 3; ++shuffle) {
      rng.shuffle(items.begin(), items.end());
      REQUIRE(urn(items) == Approx(canonical).margin(1e-10));
    }
  }
}

TEST_CASE("concentration sampling under an overwhelming prior", "[dp-machinery]") {
  Rng rng(73);
  for (int i = 0; i < 20; ++i) {
    double a = sample_concentration(1.0, 3, {10}, 1.0, 1e9, rng);
    REQUIRE(a < 1e-6);
  }
}

TEST_CASE("concentration sampling: no data leaves the prior invariant", "[dp-machinery]") {
  // Gamma(2, 1) prior, zero tables and groups; KS against the exact cdf
  // 1 - e^-x (1 + x).
  Rng rng(79);
  std::vector<double> draws;
  double x = rng.gamma(2.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    x = sample_concentration(x, 0, {}, 2.0, 1.0, rng);
    draws.push_back(x);
  }
  double p = oracle::ks_pvalue(
      draws, [](double v) { return 1.0 - std::exp(-v) * (1.0 + v); });
  REQUIRE(p > 0.01);
}

TEST_CASE("more tables from the same group pushes alpha up", "[dp-machinery]") {
  Rng rng(83);
  std::vector<double> many, few;
  for (int i = 0; i < 20000; ++i) {
    many.push_back(sample_concentration(1.0, 50, {50}, 1.0, 1.0, rng));
    few.push_back(sample_concentration(1.0, 2, {50}, 1.0, 1.0, rng));
  }
  REQUIRE(oracle::mean(many) > oracle::mean(few) + 5.0);
}

TEST_CASE("parent weight split and fold conserve mass", "[dp-machinery]") {
  ParentWeights w;
  w.w = {0.4, 0.35, 0.25};
  w.split_remainder(0.6);
  REQUIRE(w.atoms() == 3);
  REQUIRE(w[2] == Approx(0.15));
  REQUIRE(w.remainder() == Approx(0.10));
  REQUIRE(w.sum() == Approx(1.0).margin(1e-15));
  w.fold_into_remainder(0);
  REQUIRE(w.atoms() == 2);
  REQUIRE(w.remainder() == Approx(0.5));
  REQUIRE(w.sum() == Approx(1.0).margin(1e-15));
}
