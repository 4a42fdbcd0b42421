#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "mlchdp/base_model.hpp"
#include "mlchdp/data.hpp"
#include "mlchdp/dp.hpp"
#include "mlchdp/math_util.hpp"
#include "mlchdp/rng.hpp"

namespace mlchdp {

// Concentration parameters per level (index 0 = patient level, 1 = seizure
// level, 2 = channel level) with their Gamma priors.
struct HyperState {
  std::array<double, 3> alpha{1.0, 1.0, 1.0};
  std::array<double, 3> gamma{1.0, 1.0, 1.0};
  std::array<GammaPrior, 3> alpha_prior{};
  std::array<GammaPrior, 3> gamma_prior{};

  void validate() const {
    for (int i = 0; i < 3; ++i)
      if (!(alpha[i] > 0.0) || !(gamma[i] > 0.0))
        throw std::invalid_argument("HyperState: concentrations must be > 0");
  }
};

struct ChainConfig {
  int burn_in = 0;
  int thin = 1;
  int n_samples = 1;
  std::uint64_t seed = 0;
  int levels_enabled = 3;  // 2 collapses the patient level to one fixed atom
  bool hyper_sampling = true;
  bool rao_blackwell = true;
  bool random_scan = false;

  void validate() const {
    if (burn_in < 0 || thin < 1 || n_samples < 1)
      throw std::invalid_argument("ChainConfig: burn_in >= 0, thin >= 1, n_samples >= 1");
    if (levels_enabled != 2 && levels_enabled != 3)
      throw std::invalid_argument("ChainConfig: levels_enabled must be 2 or 3");
  }
};

// Per-level sampler state: counts, table counts, and parent weights. Rows of
// n are the parent level's atoms (including its trailing empty one), columns
// are this level's atoms (including its trailing empty one).
struct LevelState {
  CountMatrix n;
  TableCounts m;
  ParentWeights beta;

  int atoms() const { return n.cols() - 1; }  // non-empty capacity
};

// One recorded posterior draw.
struct PosteriorSample {
  long long iter = 0;
  std::vector<int> z1;
  std::vector<std::vector<int>> z2;
  std::vector<std::vector<std::vector<int>>> z3;
  std::array<std::vector<double>, 3> beta;  // per level, last entry = remainder
  std::vector<AtomParams> atoms;            // K non-empty plus trailing prior draw
  std::array<double, 3> alpha{};
  std::array<double, 3> gamma{};
};

// Full state of one MLC-HDP chain and its collapsed Gibbs sweep. The three
// indicator levels are updated with the level weights pi integrated out; m
// and beta are refreshed per sweep; base atoms keep running sufficient
// statistics and explicitly sampled parameters.
class MlcHdpState {
 public:
  MlcHdpState(const HierDataset& data, BasePrior prior, HyperState hypers,
              const ChainConfig& cfg)
      : hypers_(hypers),
        prior_(std::move(prior)),
        data_(&data),
        levels_(cfg.levels_enabled),
        rao_blackwell_(cfg.rao_blackwell),
        hyper_sampling_(cfg.hyper_sampling),
        random_scan_(cfg.random_scan),
        rng_(cfg.seed) {
    data.validate();
    prior_.validate();
    hypers_.validate();
    if (prior_.dim() != data.d)
      throw std::invalid_argument("MlcHdpState: prior dimension != dataset d");
    init();
  }

  const HierDataset& dataset() const { return *data_; }
  long long iteration() const { return iter_; }
  int num_base_atoms() const { return lv_[2].atoms(); }
  int num_seizure_types() const { return lv_[1].atoms(); }
  int num_patient_types() const { return lv_[0].atoms(); }

  // One full sweep: indicators bottom-up, then level parameters (optionally
  // hyperparameters), base parameters, and removal of non-trailing empties.
  void step() {
    sample_channel_indicators();
    sample_seizure_indicators();
    if (levels_ == 3) sample_patient_indicators();
    sample_level_params();
    if (hyper_sampling_) sample_hypers();
    sample_base_params();
    prune_empty_atoms();
    ++iter_;
  }

  void sample_channel_indicators() {
    auto visit = [&](int t, int j, int i) { move_channel(t, j, i); };
    if (!random_scan_) {
      for (int t = 0; t < T(); ++t)
        for (int j = 0; j < J(t); ++j)
          for (int i = 0; i < N(t, j); ++i) visit(t, j, i);
      return;
    }
    std::vector<std::array<int, 3>> order;
    for (int t = 0; t < T(); ++t)
      for (int j = 0; j < J(t); ++j)
        for (int i = 0; i < N(t, j); ++i) order.push_back({t, j, i});
    rng_.shuffle(order.begin(), order.end());
    for (const auto& o : order) visit(o[0], o[1], o[2]);
  }

  void sample_seizure_indicators() {
    if (!random_scan_) {
      for (int t = 0; t < T(); ++t)
        for (int j = 0; j < J(t); ++j) move_seizure(t, j);
      return;
    }
    std::vector<std::array<int, 2>> order;
    for (int t = 0; t < T(); ++t)
      for (int j = 0; j < J(t); ++j) order.push_back({t, j});
    rng_.shuffle(order.begin(), order.end());
    for (const auto& o : order) move_seizure(o[0], o[1]);
  }

  void sample_patient_indicators() {
    std::vector<int> order(T());
    for (int t = 0; t < T(); ++t) order[t] = t;
    if (random_scan_) rng_.shuffle(order.begin(), order.end());
    for (int t : order) move_patient(t);
  }

  // m given (n, beta), then beta given m, per level.
  void sample_level_params() {
    for (int lev = 0; lev < 3; ++lev) {
      lv_[lev].m = sample_table_counts(lv_[lev].n, hypers_.alpha[lev], lv_[lev].beta, rng_);
      lv_[lev].beta = sample_parent_weights(lv_[lev].m, hypers_.gamma[lev], rng_);
    }
  }

  void sample_hypers() {
    int first = levels_ == 3 ? 0 : 1;
    for (int lev = first; lev < 3; ++lev) {
      std::vector<long long> sizes;
      for (int l = 0; l < lv_[lev].n.rows(); ++l)
        if (lv_[lev].n.row_total[l] > 0) sizes.push_back(lv_[lev].n.row_total[l]);
      long long tables = lv_[lev].m.total();
      hypers_.alpha[lev] = sample_concentration(
          hypers_.alpha[lev], tables, sizes, hypers_.alpha_prior[lev].a,
          hypers_.alpha_prior[lev].b, rng_);
      long long dishes = 0;
      for (int k = 0; k < lv_[lev].atoms(); ++k)
        if (lv_[lev].m.col_sum(k) > 0) ++dishes;
      hypers_.gamma[lev] = sample_concentration(
          hypers_.gamma[lev], dishes, {tables}, hypers_.gamma_prior[lev].a,
          hypers_.gamma_prior[lev].b, rng_);
    }
  }

  void sample_base_params() {
    for (auto& atom : atoms_) {
      auto [mu, s2] = sample_atom_params(prior_, atom.stats, rng_);
      atom.mu = std::move(mu);
      atom.sigma2 = std::move(s2);
    }
  }

  void prune_empty_atoms() {
    prune_base_atoms();
    prune_seizure_types();
    if (levels_ == 3) prune_patient_types();
  }

  PosteriorSample record_sample() const {
    PosteriorSample s;
    s.iter = iter_;
    s.z1 = z1_;
    s.z2 = z2_;
    s.z3 = z3_;
    for (int lev = 0; lev < 3; ++lev) s.beta[lev] = lv_[lev].beta.w;
    for (const auto& a : atoms_) s.atoms.push_back({a.mu, a.sigma2});
    s.alpha = hypers_.alpha;
    s.gamma = hypers_.gamma;
    return s;
  }

  // Full posterior multinomial (normalized) over base atoms for one
  // observation, conditioned on everything else. Exposed for tests.
  std::vector<double> channel_posterior(int t, int j, int i) {
    const Observation& x = data_->patients[t].seizures[j].observations[i];
    int l2 = z2_[t][j];
    int k_old = z3_[t][j][i];
    lv_[2].n.add(l2, k_old, -1);
    atoms_[k_old].stats.remove(x);
    std::vector<double> logs = channel_log_scores(l2, x);
    lv_[2].n.add(l2, k_old, +1);
    atoms_[k_old].stats.add(x);
    double lse = log_sum_exp(logs);
    for (double& v : logs) v = std::exp(v - lse);
    return logs;
  }

  // Rebuild every atom's sufficient statistics from the data and z3.
  void recompute_base_stats() {
    for (auto& a : atoms_) a.stats = SuffStats(data_->d);
    for (int t = 0; t < T(); ++t)
      for (int j = 0; j < J(t); ++j)
        for (int i = 0; i < N(t, j); ++i)
          atoms_[z3_[t][j][i]].stats.add(data_->patients[t].seizures[j].observations[i]);
  }

  // Redraw the observations conditional on (z3, atom params), in place.
  // `data` must be the same object the state was constructed around. Used by
  // the successive-conditional (Geweke) sampler check.
  void resample_data(HierDataset& data) {
    if (&data != data_)
      throw std::invalid_argument("resample_data: dataset mismatch");
    for (int t = 0; t < T(); ++t)
      for (int j = 0; j < J(t); ++j)
        for (int i = 0; i < N(t, j); ++i) {
          const BaseAtom& a = atoms_[z3_[t][j][i]];
          Observation& x = data.patients[t].seizures[j].observations[i];
          for (int dd = 0; dd < data.d; ++dd)
            x[dd] = rng_.normal(a.mu[dd], std::sqrt(a.sigma2[dd]));
        }
    recompute_base_stats();
  }

  // Overwrite every atom's sampled parameters with fresh prior draws.
  void prior_draw_atom_params() {
    SuffStats empty(data_->d);
    for (auto& atom : atoms_) {
      auto [mu, s2] = sample_atom_params(prior_, empty, rng_);
      atom.mu = std::move(mu);
      atom.sigma2 = std::move(s2);
    }
  }

  // Consistency audit; returns human-readable violations (empty = clean).
  // strict_empty additionally requires that no non-trailing atom is empty,
  // which holds after step() but not necessarily mid-sweep.
  std::vector<std::string> audit(bool strict_empty = true) const {
    std::vector<std::string> bad;
    auto complain = [&bad](const std::string& s) { bad.push_back(s); };

    if (lv_[1].n.rows() != lv_[0].n.cols()) complain("level shape: rows(n2) != cols(n1)");
    if (lv_[2].n.rows() != lv_[1].n.cols()) complain("level shape: rows(n3) != cols(n2)");
    if (static_cast<int>(atoms_.size()) != lv_[2].n.cols())
      complain("atom list size != cols(n3)");

    // counts recomputed from indicators
    for (int t = 0; t < T(); ++t) {
      if (z1_[t] < 0 || z1_[t] >= lv_[0].atoms()) complain("z1 out of range");
      for (int j = 0; j < J(t); ++j) {
        if (z2_[t][j] < 0 || z2_[t][j] >= lv_[1].atoms()) complain("z2 out of range");
        for (int i = 0; i < N(t, j); ++i)
          if (z3_[t][j][i] < 0 || z3_[t][j][i] >= lv_[2].atoms())
            complain("z3 out of range");
      }
    }
    if (!bad.empty()) return bad;
    CountMatrix r1, r2, r3;
    r1.init(lv_[0].n.rows(), lv_[0].n.cols());
    r2.init(lv_[1].n.rows(), lv_[1].n.cols());
    r3.init(lv_[2].n.rows(), lv_[2].n.cols());
    for (int t = 0; t < T(); ++t) {
      r1.add(0, z1_[t], 1);
      for (int j = 0; j < J(t); ++j) {
        r2.add(z1_[t], z2_[t][j], 1);
        for (int i = 0; i < N(t, j); ++i) r3.add(z2_[t][j], z3_[t][j][i], 1);
      }
    }
    auto cmp = [&](const CountMatrix& a, const CountMatrix& b, const char* name) {
      for (int l = 0; l < a.rows(); ++l) {
        if (a.row_total[l] != b.row_total[l])
          complain(std::string(name) + ": row total mismatch");
        for (int k = 0; k < a.cols(); ++k)
          if (a.at(l, k) != b.at(l, k))
            complain(std::string(name) + ": cell mismatch");
      }
    };
    cmp(lv_[0].n, r1, "n1");
    cmp(lv_[1].n, r2, "n2");
    cmp(lv_[2].n, r3, "n3");

    for (int lev = 0; lev < 3; ++lev) {
      const LevelState& lv = lv_[lev];
      if (lv.n.col_sum(lv.atoms()) != 0) complain("trailing atom not empty");
      if (lv.beta.atoms() != lv.atoms()) complain("beta size != atom count");
      if (std::abs(lv.beta.sum() - 1.0) > 1e-12) complain("beta does not sum to 1");
      for (double v : lv.beta.w)
        if (v < 0.0) complain("negative beta entry");
      if (!(lv.beta.remainder() > 0.0)) complain("beta remainder not positive");
      if (strict_empty)
        for (int k = 0; k < lv.atoms(); ++k)
          if (lv.n.col_sum(k) == 0) complain("empty non-trailing atom");
      for (int l = 0; l < lv.m.rows(); ++l)
        for (int k = 0; k < lv.m.cols(); ++k) {
          if (lv.m.at(l, k) > lv.n.at(l, k)) complain("m > n");
          if ((lv.m.at(l, k) == 0) != (lv.n.at(l, k) == 0)) complain("m zero-pattern != n");
        }
    }
    // trailing rows of the child levels are all zero
    for (int k = 0; k < lv_[1].n.cols(); ++k)
      if (lv_[1].n.at(lv_[1].n.rows() - 1, k) != 0) complain("n2 trailing row not zero");
    for (int k = 0; k < lv_[2].n.cols(); ++k)
      if (lv_[2].n.at(lv_[2].n.rows() - 1, k) != 0) complain("n3 trailing row not zero");

    // sufficient statistics match an exact recomputation
    std::vector<SuffStats> fresh(atoms_.size(), SuffStats(data_->d));
    for (int t = 0; t < T(); ++t)
      for (int j = 0; j < J(t); ++j)
        for (int i = 0; i < N(t, j); ++i)
          fresh[z3_[t][j][i]].add(data_->patients[t].seizures[j].observations[i]);
    for (std::size_t k = 0; k < atoms_.size(); ++k) {
      if (fresh[k].count != atoms_[k].stats.count) complain("stats count mismatch");
      for (int i = 0; i < data_->d; ++i) {
        double scale = std::max({1.0, std::abs(fresh[k].sum[i]), std::abs(fresh[k].sumsq[i])});
        if (std::abs(fresh[k].sum[i] - atoms_[k].stats.sum[i]) > 1e-9 * scale ||
            std::abs(fresh[k].sumsq[i] - atoms_[k].stats.sumsq[i]) > 1e-9 * scale)
          complain("stats moment drift");
      }
    }
    return bad;
  }

  // state fields are public for tests and evaluation tooling
  std::vector<int> z1_;
  std::vector<std::vector<int>> z2_;
  std::vector<std::vector<std::vector<int>>> z3_;
  std::array<LevelState, 3> lv_;
  std::vector<BaseAtom> atoms_;
  HyperState hypers_;
  BasePrior prior_;
  Rng& rng() { return rng_; }

 private:
  int T() const { return data_->num_patients(); }
  int J(int t) const { return static_cast<int>(data_->patients[t].seizures.size()); }
  int N(int t, int j) const {
    return static_cast<int>(data_->patients[t].seizures[j].observations.size());
  }

  double beta_split_frac(double gamma) {
    return rng_.beta(1.0, gamma);
  }

  void grow_patient_type() {
    lv_[0].beta.split_remainder(beta_split_frac(hypers_.gamma[0]));
    lv_[0].n.add_col();
    lv_[0].m.add_col();
    lv_[1].n.add_row();
    lv_[1].m.add_row();
  }

  void grow_seizure_type() {
    lv_[1].beta.split_remainder(beta_split_frac(hypers_.gamma[1]));
    lv_[1].n.add_col();
    lv_[1].m.add_col();
    lv_[2].n.add_row();
    lv_[2].m.add_row();
  }

  void grow_base_atom() {
    lv_[2].beta.split_remainder(beta_split_frac(hypers_.gamma[2]));
    lv_[2].n.add_col();
    lv_[2].m.add_col();
    BaseAtom fresh;
    fresh.stats = SuffStats(data_->d);
    auto [mu, s2] = sample_atom_params(prior_, fresh.stats, rng_);
    fresh.mu = std::move(mu);
    fresh.sigma2 = std::move(s2);
    atoms_.push_back(std::move(fresh));
  }

  // Prior predictive draw of one indicator at `level` within parent row.
  int draw_from_level_prior(int level, int row) {
    const LevelState& lv = lv_[level];
    int K = lv.atoms();
    scores_.assign(K + 1, 0.0);
    for (int k = 0; k <= K; ++k)
      scores_[k] = collapsed_weight(lv.n.at(row, k), lv.n.row_total[row],
                                    hypers_.alpha[level], lv.beta[k]);
    return rng_.categorical(scores_);
  }

  // Sequential predictive initialization: indicators drawn from the
  // generative process given earlier assignments, no likelihood terms.
  void init() {
    int d = data_->d;
    atoms_.clear();
    {
      BaseAtom a;
      a.stats = SuffStats(d);
      auto [mu, s2] = sample_atom_params(prior_, a.stats, rng_);
      a.mu = std::move(mu);
      a.sigma2 = std::move(s2);
      atoms_.push_back(std::move(a));
    }
    for (auto& lv : lv_) {
      lv.beta = ParentWeights{};
      lv.m = TableCounts{};
    }
    lv_[0].n.init(1, 1);
    lv_[0].m.init(1, 1);
    lv_[1].n.init(1, 1);
    lv_[1].m.init(1, 1);
    lv_[2].n.init(1, 1);
    lv_[2].m.init(1, 1);

    z1_.assign(T(), 0);
    z2_.clear();
    z3_.clear();
    for (int t = 0; t < T(); ++t) {
      int l;
      if (levels_ == 2) {
        if (lv_[0].atoms() == 0) grow_patient_type();
        l = 0;
      } else {
        l = draw_from_level_prior(0, 0);
        if (l == lv_[0].atoms()) grow_patient_type();
      }
      z1_[t] = l;
      lv_[0].n.add(0, l, 1);

      z2_.emplace_back();
      z3_.emplace_back();
      for (int j = 0; j < J(t); ++j) {
        int l2 = draw_from_level_prior(1, l);
        if (l2 == lv_[1].atoms()) grow_seizure_type();
        z2_[t].push_back(l2);
        lv_[1].n.add(l, l2, 1);

        z3_[t].emplace_back();
        for (int i = 0; i < N(t, j); ++i) {
          int k = draw_from_level_prior(2, l2);
          if (k == lv_[2].atoms()) grow_base_atom();
          z3_[t][j].push_back(k);
          lv_[2].n.add(l2, k, 1);
          atoms_[k].stats.add(data_->patients[t].seizures[j].observations[i]);
        }
      }
    }
    sample_level_params();
    sample_base_params();
  }

  std::vector<double> channel_log_scores(int l2, const Observation& x) {
    int K = lv_[2].atoms();
    std::vector<double> logs(K + 1);
    const auto& row = lv_[2].n.row(l2);
    double a3 = hypers_.alpha[2];
    for (int k = 0; k <= K; ++k) {
      double like = rao_blackwell_
                        ? posterior_predictive_loglik(prior_, atoms_[k].stats, x, &pcache_)
                        : loglik(atoms_[k], x);
      logs[k] = std::log(static_cast<double>(row[k]) + a3 * lv_[2].beta[k]) + like;
    }
    return logs;
  }

  void move_channel(int t, int j, int i) {
    const Observation& x = data_->patients[t].seizures[j].observations[i];
    int l2 = z2_[t][j];
    int k_old = z3_[t][j][i];
    lv_[2].n.add(l2, k_old, -1);
    atoms_[k_old].stats.remove(x);
    std::vector<double> logs = channel_log_scores(l2, x);
    int k_new = rng_.categorical_logits(logs);
    if (k_new == lv_[2].atoms()) grow_base_atom();
    lv_[2].n.add(l2, k_new, +1);
    atoms_[k_new].stats.add(x);
    z3_[t][j][i] = k_new;
  }

  void move_seizure(int t, int j) {
    int l = z1_[t];
    int old = z2_[t][j];
    std::vector<long long> counts(lv_[2].atoms(), 0);
    for (int k : z3_[t][j]) ++counts[k];
    lv_[1].n.add(l, old, -1);
    for (std::size_t k = 0; k < counts.size(); ++k)
      if (counts[k] > 0) lv_[2].n.add(old, static_cast<int>(k), -counts[k]);

    int L = lv_[1].atoms();
    scores_.assign(L + 1, 0.0);
    double a2 = hypers_.alpha[1];
    for (int cand = 0; cand <= L; ++cand) {
      double w = std::log(static_cast<double>(lv_[1].n.at(l, cand)) +
                          a2 * lv_[1].beta[cand]);
      scores_[cand] = w + group_marginal_loglik(counts, hypers_.alpha[2],
                                                lv_[2].beta, lv_[2].n.row(cand),
                                                lv_[2].n.row_total[cand]);
    }
    int pick = rng_.categorical_logits(scores_);
    if (pick == L) grow_seizure_type();
    lv_[1].n.add(l, pick, +1);
    for (std::size_t k = 0; k < counts.size(); ++k)
      if (counts[k] > 0) lv_[2].n.add(pick, static_cast<int>(k), +counts[k]);
    z2_[t][j] = pick;
  }

  void move_patient(int t) {
    int old = z1_[t];
    std::vector<long long> counts(lv_[1].atoms(), 0);
    for (int l2 : z2_[t]) ++counts[l2];
    lv_[0].n.add(0, old, -1);
    for (std::size_t k = 0; k < counts.size(); ++k)
      if (counts[k] > 0) lv_[1].n.add(old, static_cast<int>(k), -counts[k]);

    int L = lv_[0].atoms();
    scores_.assign(L + 1, 0.0);
    double a1 = hypers_.alpha[0];
    for (int cand = 0; cand <= L; ++cand) {
      double w = std::log(static_cast<double>(lv_[0].n.at(0, cand)) +
                          a1 * lv_[0].beta[cand]);
      scores_[cand] = w + group_marginal_loglik(counts, hypers_.alpha[1],
                                                lv_[1].beta, lv_[1].n.row(cand),
                                                lv_[1].n.row_total[cand]);
    }
    int pick = rng_.categorical_logits(scores_);
    if (pick == L) grow_patient_type();
    lv_[0].n.add(0, pick, +1);
    for (std::size_t k = 0; k < counts.size(); ++k)
      if (counts[k] > 0) lv_[1].n.add(pick, static_cast<int>(k), +counts[k]);
    z1_[t] = pick;
  }

  void prune_base_atoms() {
    int K = lv_[2].atoms();
    std::vector<int> remap(K + 1, -1);
    std::vector<int> dead;
    int next = 0;
    for (int k = 0; k < K; ++k) {
      if (atoms_[k].stats.count == 0)
        dead.push_back(k);
      else
        remap[k] = next++;
    }
    if (dead.empty()) return;
    for (auto it = dead.rbegin(); it != dead.rend(); ++it) {
      int k = *it;
      lv_[2].n.remove_col(k);
      lv_[2].m.remove_col(k);
      lv_[2].beta.fold_into_remainder(k);
      atoms_.erase(atoms_.begin() + k);
    }
    for (auto& zp : z3_)
      for (auto& zs : zp)
        for (int& z : zs) z = remap[z];
  }

  void prune_seizure_types() {
    int L = lv_[1].atoms();
    std::vector<int> remap(L + 1, -1);
    std::vector<int> dead;
    int next = 0;
    for (int k = 0; k < L; ++k) {
      if (lv_[1].n.col_sum(k) == 0)
        dead.push_back(k);
      else
        remap[k] = next++;
    }
    if (dead.empty()) return;
    for (auto it = dead.rbegin(); it != dead.rend(); ++it) {
      int k = *it;
      lv_[1].n.remove_col(k);
      lv_[1].m.remove_col(k);
      lv_[1].beta.fold_into_remainder(k);
      lv_[2].n.remove_row(k);
      lv_[2].m.remove_row(k);
    }
    for (auto& zp : z2_)
      for (int& z : zp) z = remap[z];
  }

  void prune_patient_types() {
    int L = lv_[0].atoms();
    std::vector<int> remap(L + 1, -1);
    std::vector<int> dead;
    int next = 0;
    for (int k = 0; k < L; ++k) {
      if (lv_[0].n.at(0, k) == 0)
        dead.push_back(k);
      else
        remap[k] = next++;
    }
    if (dead.empty()) return;
    for (auto it = dead.rbegin(); it != dead.rend(); ++it) {
      int k = *it;
      lv_[0].n.remove_col(k);
      lv_[0].m.remove_col(k);
      lv_[0].beta.fold_into_remainder(k);
      lv_[1].n.remove_row(k);
      lv_[1].m.remove_row(k);
    }
    for (int& z : z1_) z = remap[z];
  }

  const HierDataset* data_;
  int levels_;
  bool rao_blackwell_;
  bool hyper_sampling_;
  bool random_scan_;
  Rng rng_;
  PredictiveCache pcache_;
  long long iter_ = 0;
  std::vector<double> scores_;
};

inline MlcHdpState init_state(const HierDataset& data, const BasePrior& prior,
                              const HyperState& hypers, const ChainConfig& cfg) {
  cfg.validate();
  return MlcHdpState(data, prior, hypers, cfg);
}

inline std::vector<PosteriorSample> run_chain(const HierDataset& data,
                                              const BasePrior& prior,
                                              const HyperState& hypers,
                                              const ChainConfig& cfg) {
  cfg.validate();
  MlcHdpState state(data, prior, hypers, cfg);
  for (int b = 0; b < cfg.burn_in; ++b) state.step();
  std::vector<PosteriorSample> samples;
  samples.reserve(cfg.n_samples);
  for (int s = 0; s < cfg.n_samples; ++s) {
    for (int th = 0; th < cfg.thin; ++th) state.step();
    samples.push_back(state.record_sample());
  }
  return samples;
}

// Runs n_chains chains with seeds derived from cfg.seed; chains share the
// immutable dataset and are otherwise independent.
inline std::vector<std::vector<PosteriorSample>> run_chains(
    const HierDataset& data, const BasePrior& prior, const HyperState& hypers,
    const ChainConfig& cfg, int n_chains, int threads = 1) {
  std::vector<std::vector<PosteriorSample>> out(n_chains);
  auto work = [&](int c) {
    ChainConfig cc = cfg;
    cc.seed = cfg.seed + 0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(c + 1);
    out[c] = run_chain(data, prior, hypers, cc);
  };
  if (threads <= 1) {
    for (int c = 0; c < n_chains; ++c) work(c);
    return out;
  }
  for (int start = 0; start < n_chains; start += threads) {
    std::vector<std::thread> pool;
    for (int c = start; c < std::min(n_chains, start + threads); ++c)
      pool.emplace_back(work, c);
    for (auto& th : pool) th.join();
  }
  return out;
}

inline BasePrior default_prior(const HierDataset& data) {
  return make_default_prior(data.flatten());
}

// Exact joint draw from the model prior over a fixed structure: indicators
// via lazily stick-broken parent weights, table counts and beta from their
// conditionals, atom parameters from the prior, and data given (z3, atoms).
// The returned state is stationary for step() and is the starting point of
// the Geweke successive-conditional check.
inline MlcHdpState ancestral_state(HierDataset& data, const BasePrior& prior,
                                   const HyperState& hypers, ChainConfig cfg) {
  data.validate();
  cfg.burn_in = 0;
  MlcHdpState state(data, prior, hypers, cfg);
  state.prior_draw_atom_params();
  state.resample_data(data);
  return state;
}

// Dataset shell (all-zero observations) with T patients, J seizures each,
// N observations per seizure, dimension d.
inline HierDataset dataset_shell(int T, int J, int N, int d) {
  HierDataset ds;
  ds.d = d;
  for (int t = 0; t < T; ++t) {
    Patient p;
    p.id = "p" + std::to_string(t);
    for (int j = 0; j < J; ++j) {
      Seizure s;
      s.id = p.id + "_s" + std::to_string(j);
      s.observations.assign(N, Observation(d, 0.0));
      p.seizures.push_back(std::move(s));
    }
    ds.patients.push_back(std::move(p));
  }
  return ds;
}

}  // namespace mlchdp
