#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mlchdp/base_model.hpp"
#include "mlchdp/data.hpp"
#include "mlchdp/dp.hpp"
#include "mlchdp/math_util.hpp"
#include "mlchdp/rng.hpp"
#include "mlchdp/sampler.hpp"

namespace mlchdp {

// ---------------------------------------------------------------------------
// Standard DP mixture, collapsed CRP Gibbs with the Rao-Blackwellized
// predictive. Used as the M1/M2 baselines.
// ---------------------------------------------------------------------------

struct DpSample {
  long long iter = 0;
  std::vector<int> z;
  std::vector<AtomParams> atoms;  // non-empty atoms plus trailing prior draw
  double alpha = 1.0;
};

class DpState {
 public:
  DpState(const std::vector<Observation>& obs, BasePrior prior, double alpha,
          const ChainConfig& cfg, GammaPrior alpha_prior = {})
      : data_(&obs),
        prior_(std::move(prior)),
        alpha_(alpha),
        alpha_prior_(alpha_prior),
        hyper_sampling_(cfg.hyper_sampling),
        rng_(cfg.seed) {
    if (obs.empty()) throw std::invalid_argument("DpState: empty input");
    prior_.validate();
    if (!(alpha_ > 0.0)) throw std::invalid_argument("DpState: alpha must be > 0");
    int d = prior_.dim();
    for (const auto& x : obs)
      if (static_cast<int>(x.size()) != d)
        throw std::invalid_argument("DpState: dimension mismatch");
    init();
  }

  int num_atoms() const { return static_cast<int>(stats_.size()) - 1; }
  double alpha() const { return alpha_; }
  const std::vector<int>& z() const { return z_; }

  void step() {
    for (std::size_t i = 0; i < data_->size(); ++i) move(static_cast<int>(i));
    prune();
    if (hyper_sampling_) {
      long long n = static_cast<long long>(data_->size());
      alpha_ = sample_concentration(alpha_, num_atoms(), {n}, alpha_prior_.a,
                                    alpha_prior_.b, rng_);
    }
    ++iter_;
  }

  DpSample record_sample() {
    DpSample s;
    s.iter = iter_;
    s.z = z_;
    s.alpha = alpha_;
    for (const auto& st : stats_) {
      auto [mu, s2] = sample_atom_params(prior_, st, rng_);
      s.atoms.push_back({std::move(mu), std::move(s2)});
    }
    return s;
  }

  std::vector<std::string> audit() const {
    std::vector<std::string> bad;
    std::vector<long long> counts(stats_.size(), 0);
    for (int zi : z_) {
      if (zi < 0 || zi >= num_atoms()) {
        bad.push_back("z out of range");
        return bad;
      }
      ++counts[zi];
    }
    for (std::size_t k = 0; k < stats_.size(); ++k)
      if (counts[k] != stats_[k].count) bad.push_back("count mismatch");
    if (stats_.back().count != 0) bad.push_back("trailing atom not empty");
    return bad;
  }

  long long iter_ = 0;

 private:
  void init() {
    int d = prior_.dim();
    stats_.assign(1, SuffStats(d));
    z_.assign(data_->size(), 0);
    // sequential predictive prior assignment, matching the main sampler
    for (std::size_t i = 0; i < data_->size(); ++i) {
      int K = num_atoms();
      std::vector<double> w(K + 1);
      for (int k = 0; k < K; ++k) w[k] = static_cast<double>(stats_[k].count);
      w[K] = alpha_;
      int k = rng_.categorical(w);
      if (k == K) stats_.emplace_back(d);
      stats_[k].add((*data_)[i]);
      z_[i] = k;
    }
  }

  void move(int i) {
    const Observation& x = (*data_)[i];
    stats_[z_[i]].remove(x);
    int K = num_atoms();
    std::vector<double> logs(K + 1);
    for (int k = 0; k <= K; ++k) {
      double prior_w = k < K ? static_cast<double>(stats_[k].count) : alpha_;
      if (prior_w <= 0.0) {
        logs[k] = -1e308;
        continue;
      }
      logs[k] = std::log(prior_w) +
                posterior_predictive_loglik(prior_, stats_[k], x, &pcache_);
    }
    int k_new = rng_.categorical_logits(logs);
    if (k_new == K) stats_.emplace_back(prior_.dim());
    stats_[k_new].add(x);
    z_[i] = k_new;
  }

  void prune() {
    int K = num_atoms();
    std::vector<int> remap(K, -1);
    int next = 0;
    bool any = false;
    for (int k = 0; k < K; ++k) {
      if (stats_[k].count == 0)
        any = true;
      else
        remap[k] = next++;
    }
    if (!any) return;
    std::vector<SuffStats> kept;
    for (int k = 0; k < K; ++k)
      if (stats_[k].count > 0) kept.push_back(std::move(stats_[k]));
    kept.push_back(std::move(stats_[K]));
    stats_ = std::move(kept);
    for (int& zi : z_) zi = remap[zi];
  }

  const std::vector<Observation>* data_;
  BasePrior prior_;
  double alpha_;
  GammaPrior alpha_prior_;
  bool hyper_sampling_;
  Rng rng_;
  PredictiveCache pcache_;
  std::vector<SuffStats> stats_;  // one per atom, trailing empty
  std::vector<int> z_;
};

inline std::vector<DpSample> run_dp_chain(const std::vector<Observation>& obs,
                                          const BasePrior& prior, double alpha,
                                          const ChainConfig& cfg,
                                          GammaPrior alpha_prior = {}) {
  cfg.validate();
  DpState state(obs, prior, alpha, cfg, alpha_prior);
  for (int b = 0; b < cfg.burn_in; ++b) state.step();
  std::vector<DpSample> out;
  out.reserve(cfg.n_samples);
  for (int s = 0; s < cfg.n_samples; ++s) {
    for (int th = 0; th < cfg.thin; ++th) state.step();
    out.push_back(state.record_sample());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Truncated Nested Dirichlet Process (Rodriguez et al.), blocked Gibbs.
// Every top-level atom owns a private set of k_bottom base atoms; groups pick
// a top atom, observations pick one of its private atoms.
// ---------------------------------------------------------------------------

struct NdpConfig {
  int k_top = 20;
  int k_bottom = 15;
  double alpha_top = 1.0;     // concentration of the top-level sticks
  double alpha_bottom = 1.0;  // concentration of each private stick set
  GammaPrior top_prior{};
  GammaPrior bottom_prior{};
};

struct NdpSample {
  long long iter = 0;
  std::vector<int> group_z;                 // zeta, per group
  std::vector<std::vector<int>> obs_z;      // xi, per group per observation
  std::vector<double> top_weights;          // pi, length k_top
  std::vector<std::vector<double>> bottom_weights;  // w[k][m]
  std::vector<std::vector<AtomParams>> atoms;       // theta[k][m]
  double alpha_top = 1.0;
  double alpha_bottom = 1.0;
};

class NdpState {
 public:
  NdpState(const std::vector<std::vector<Observation>>& groups, BasePrior prior,
           NdpConfig ncfg, const ChainConfig& cfg)
      : groups_(&groups),
        prior_(std::move(prior)),
        ncfg_(ncfg),
        hyper_sampling_(cfg.hyper_sampling),
        rng_(cfg.seed) {
    if (ncfg_.k_top < 2 || ncfg_.k_bottom < 2)
      throw std::invalid_argument("NdpState: truncations must be >= 2");
    if (groups.empty()) throw std::invalid_argument("NdpState: no groups");
    prior_.validate();
    d_ = prior_.dim();
    for (const auto& g : groups) {
      if (g.empty()) throw std::invalid_argument("NdpState: empty group");
      for (const auto& x : g)
        if (static_cast<int>(x.size()) != d_)
          throw std::invalid_argument("NdpState: dimension mismatch");
    }
    init();
  }

  void step() {
    sample_group_indicators();
    sample_obs_indicators();
    sample_sticks();
    sample_atoms();
    if (hyper_sampling_) sample_hypers();
    ++iter_;
  }

  NdpSample record_sample() const {
    NdpSample s;
    s.iter = iter_;
    s.group_z = zeta_;
    s.obs_z = xi_;
    s.top_weights = top_w_;
    s.bottom_weights = bot_w_;
    s.atoms = atoms_;
    s.alpha_top = ncfg_.alpha_top;
    s.alpha_bottom = ncfg_.alpha_bottom;
    return s;
  }

  const std::vector<int>& group_z() const { return zeta_; }

 private:
  int G() const { return static_cast<int>(groups_->size()); }

  void init() {
    int K = ncfg_.k_top, M = ncfg_.k_bottom;
    top_v_.assign(K - 1, 0.0);
    bot_u_.assign(K, std::vector<double>(M - 1, 0.0));
    for (double& v : top_v_) v = rng_.beta(1.0, ncfg_.alpha_top);
    for (auto& row : bot_u_)
      for (double& u : row) u = rng_.beta(1.0, ncfg_.alpha_bottom);
    refresh_weights();
    atoms_.assign(K, std::vector<AtomParams>(M));
    SuffStats empty(d_);
    for (auto& row : atoms_)
      for (auto& a : row) {
        auto [mu, s2] = sample_atom_params(prior_, empty, rng_);
        a = {std::move(mu), std::move(s2)};
      }
    zeta_.assign(G(), 0);
    xi_.assign(G(), {});
    for (int g = 0; g < G(); ++g) {
      zeta_[g] = rng_.categorical(top_w_);
      xi_[g].assign((*groups_)[g].size(), 0);
      for (auto& m : xi_[g]) m = rng_.categorical(bot_w_[zeta_[g]]);
    }
  }

  void refresh_weights() {
    int K = ncfg_.k_top, M = ncfg_.k_bottom;
    top_w_.assign(K, 0.0);
    double rem = 1.0;
    for (int k = 0; k < K - 1; ++k) {
      top_w_[k] = top_v_[k] * rem;
      rem *= (1.0 - top_v_[k]);
    }
    top_w_[K - 1] = rem;
    bot_w_.assign(K, std::vector<double>(M, 0.0));
    for (int k = 0; k < K; ++k) {
      double r = 1.0;
      for (int m = 0; m < M - 1; ++m) {
        bot_w_[k][m] = bot_u_[k][m] * r;
        r *= (1.0 - bot_u_[k][m]);
      }
      bot_w_[k][M - 1] = r;
    }
  }

  double group_loglik_under_top(int g, int k) const {
    const auto& grp = (*groups_)[g];
    int M = ncfg_.k_bottom;
    double total = 0.0;
    std::vector<double> terms(M);
    for (const auto& x : grp) {
      for (int m = 0; m < M; ++m)
        terms[m] = std::log(std::max(bot_w_[k][m], 1e-300)) +
                   loglik(atoms_[k][m].mu, atoms_[k][m].sigma2, x);
      total += log_sum_exp(terms);
    }
    return total;
  }

  void sample_group_indicators() {
    int K = ncfg_.k_top;
    std::vector<double> logs(K);
    for (int g = 0; g < G(); ++g) {
      for (int k = 0; k < K; ++k)
        logs[k] = std::log(std::max(top_w_[k], 1e-300)) + group_loglik_under_top(g, k);
      zeta_[g] = rng_.categorical_logits(logs);
    }
  }

  void sample_obs_indicators() {
    int M = ncfg_.k_bottom;
    std::vector<double> logs(M);
    for (int g = 0; g < G(); ++g) {
      int k = zeta_[g];
      const auto& grp = (*groups_)[g];
      for (std::size_t i = 0; i < grp.size(); ++i) {
        for (int m = 0; m < M; ++m)
          logs[m] = std::log(std::max(bot_w_[k][m], 1e-300)) +
                    loglik(atoms_[k][m].mu, atoms_[k][m].sigma2, grp[i]);
        xi_[g][i] = rng_.categorical_logits(logs);
      }
    }
  }

  void sample_sticks() {
    int K = ncfg_.k_top, M = ncfg_.k_bottom;
    std::vector<long long> nk(K, 0);
    for (int z : zeta_) ++nk[z];
    for (int k = 0; k < K - 1; ++k) {
      long long tail = 0;
      for (int kk = k + 1; kk < K; ++kk) tail += nk[kk];
      top_v_[k] = rng_.beta(1.0 + static_cast<double>(nk[k]),
                            ncfg_.alpha_top + static_cast<double>(tail));
    }
    std::vector<std::vector<long long>> c(K, std::vector<long long>(M, 0));
    for (int g = 0; g < G(); ++g)
      for (int m : xi_[g]) ++c[zeta_[g]][m];
    for (int k = 0; k < K; ++k)
      for (int m = 0; m < M - 1; ++m) {
        long long tail = 0;
        for (int mm = m + 1; mm < M; ++mm) tail += c[k][mm];
        bot_u_[k][m] = rng_.beta(1.0 + static_cast<double>(c[k][m]),
                                 ncfg_.alpha_bottom + static_cast<double>(tail));
      }
    refresh_weights();
  }

  void sample_atoms() {
    int K = ncfg_.k_top, M = ncfg_.k_bottom;
    std::vector<std::vector<SuffStats>> st(K, std::vector<SuffStats>(M, SuffStats(d_)));
    for (int g = 0; g < G(); ++g) {
      const auto& grp = (*groups_)[g];
      for (std::size_t i = 0; i < grp.size(); ++i)
        st[zeta_[g]][xi_[g][i]].add(grp[i]);
    }
    for (int k = 0; k < K; ++k)
      for (int m = 0; m < M; ++m) {
        auto [mu, s2] = sample_atom_params(prior_, st[k][m], rng_);
        atoms_[k][m] = {std::move(mu), std::move(s2)};
      }
  }

  // Conjugate Gamma updates from the realized sticks.
  void sample_hypers() {
    double s = 0.0;
    for (double v : top_v_) s -= std::log1p(-v);
    ncfg_.alpha_top =
        std::max(rng_.gamma(ncfg_.top_prior.a + (ncfg_.k_top - 1),
                            1.0 / (ncfg_.top_prior.b + s)),
                 1e-12);
    double s2 = 0.0;
    long long cnt = 0;
    for (const auto& row : bot_u_)
      for (double u : row) {
        s2 -= std::log1p(-u);
        ++cnt;
      }
    ncfg_.alpha_bottom = std::max(
        rng_.gamma(ncfg_.bottom_prior.a + static_cast<double>(cnt),
                   1.0 / (ncfg_.bottom_prior.b + s2)),
        1e-12);
  }

  const std::vector<std::vector<Observation>>* groups_;
  BasePrior prior_;
  NdpConfig ncfg_;
  bool hyper_sampling_;
  Rng rng_;
  int d_ = 1;
  long long iter_ = 0;
  std::vector<double> top_v_;
  std::vector<std::vector<double>> bot_u_;
  std::vector<double> top_w_;
  std::vector<std::vector<double>> bot_w_;
  std::vector<std::vector<AtomParams>> atoms_;
  std::vector<int> zeta_;
  std::vector<std::vector<int>> xi_;
};

inline std::vector<NdpSample> run_ndp_chain(
    const std::vector<std::vector<Observation>>& groups, const BasePrior& prior,
    const NdpConfig& ncfg, const ChainConfig& cfg) {
  cfg.validate();
  NdpState state(groups, prior, ncfg, cfg);
  for (int b = 0; b < cfg.burn_in; ++b) state.step();
  std::vector<NdpSample> out;
  out.reserve(cfg.n_samples);
  for (int s = 0; s < cfg.n_samples; ++s) {
    for (int th = 0; th < cfg.thin; ++th) state.step();
    out.push_back(state.record_sample());
  }
  return out;
}

}  // namespace mlchdp
