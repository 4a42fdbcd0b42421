#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlchdp/base_model.hpp"
#include "mlchdp/baselines.hpp"
#include "mlchdp/data.hpp"
#include "mlchdp/dp.hpp"
#include "mlchdp/math_util.hpp"
#include "mlchdp/sampler.hpp"
#include "mlchdp/synthetic.hpp"

namespace mlchdp {

// ---------------------------------------------------------------------------
// Grid densities and KL divergence
// ---------------------------------------------------------------------------

struct GridDensity {
  std::vector<double> x;
  std::vector<double> pdf;

  double integral() const { return trapezoid(x, pdf); }
};

inline std::vector<double> make_grid(double lo, double hi, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i)
    g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return g;
}

// Simulation-study evaluation grid: covers every Table-1 mode beyond 4 sigma.
inline constexpr double kSimGridLo = -15.0;
inline constexpr double kSimGridHi = 15.0;
inline constexpr int kSimGridN = 3001;
inline constexpr double kDensityFloor = 1e-12;

inline GridDensity mixture_density(const MixtureSpec& m, const std::vector<double>& grid) {
  GridDensity g;
  g.x = grid;
  g.pdf.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) g.pdf[i] = m.pdf(grid[i]);
  return g;
}

// Trapezoid integral of true * log(true / max(est, floor)).
inline double kl_divergence(const GridDensity& truth, const GridDensity& est,
                            double floor = kDensityFloor) {
  if (truth.x.size() != est.x.size())
    throw std::invalid_argument("kl_divergence: grid mismatch");
  for (std::size_t i = 0; i < truth.x.size(); ++i)
    if (std::abs(truth.x[i] - est.x[i]) > 1e-12)
      throw std::invalid_argument("kl_divergence: grid mismatch");
  std::vector<double> integrand(truth.x.size(), 0.0);
  for (std::size_t i = 0; i < truth.x.size(); ++i) {
    double p = truth.pdf[i];
    if (p <= 0.0) continue;
    double q = std::max(est.pdf[i], floor);
    integrand[i] = p * std::log(p / q);
  }
  return trapezoid(truth.x, integrand);
}

// ---------------------------------------------------------------------------
// Rand's C-statistic
// ---------------------------------------------------------------------------

struct Clustering {
  std::vector<int> labels;
};

// Fraction of item pairs on which the two clusterings agree (co-clustered in
// both or separated in both). 1.0 for N = 1 (no pairs).
inline double rand_c(const Clustering& a, const Clustering& b) {
  if (a.labels.size() != b.labels.size())
    throw std::invalid_argument("rand_c: length mismatch");
  std::size_t n = a.labels.size();
  if (n < 1) throw std::invalid_argument("rand_c: empty clustering");
  if (n == 1) return 1.0;
  std::map<int, long long> ca, cb;
  std::map<std::pair<int, int>, long long> cab;
  for (std::size_t i = 0; i < n; ++i) {
    ++ca[a.labels[i]];
    ++cb[b.labels[i]];
    ++cab[{a.labels[i], b.labels[i]}];
  }
  auto choose2 = [](long long m) { return m * (m - 1) / 2; };
  long long total = choose2(static_cast<long long>(n));
  long long sa = 0, sb = 0, s11 = 0;
  for (auto& [k, v] : ca) sa += choose2(v);
  for (auto& [k, v] : cb) sb += choose2(v);
  for (auto& [k, v] : cab) s11 += choose2(v);
  long long agree = total + 2 * s11 - sa - sb;
  return static_cast<double>(agree) / static_cast<double>(total);
}

// ---------------------------------------------------------------------------
// Cluster-count posterior
// ---------------------------------------------------------------------------

inline int distinct_count(const std::vector<int>& v) {
  return static_cast<int>(std::set<int>(v.begin(), v.end()).size());
}

inline int nonempty_atoms_at_level(const PosteriorSample& s, int level) {
  if (level == 1) return distinct_count(s.z1);
  if (level == 2) {
    std::set<int> used;
    for (const auto& row : s.z2) used.insert(row.begin(), row.end());
    return static_cast<int>(used.size());
  }
  if (level == 3) {
    std::set<int> used;
    for (const auto& p : s.z3)
      for (const auto& sz : p) used.insert(sz.begin(), sz.end());
    return static_cast<int>(used.size());
  }
  throw std::invalid_argument("nonempty_atoms_at_level: level must be 1..3");
}

inline std::map<int, double> cluster_count_posterior(const std::vector<int>& counts) {
  if (counts.empty())
    throw std::invalid_argument("cluster_count_posterior: no samples");
  std::map<int, double> hist;
  for (int c : counts) hist[c] += 1.0;
  for (auto& [k, v] : hist) v /= static_cast<double>(counts.size());
  return hist;
}

inline int histogram_mode(const std::map<int, double>& hist) {
  int best = hist.begin()->first;
  double bestv = hist.begin()->second;
  for (const auto& [k, v] : hist)
    if (v > bestv) {
      best = k;
      bestv = v;
    }
  return best;
}

// ---------------------------------------------------------------------------
// Posterior density estimates per group
// ---------------------------------------------------------------------------

// Counts reconstructed from a recorded MLC-HDP sample (no dataset needed).
struct MlcSampleView {
  const PosteriorSample* s = nullptr;
  CountMatrix n2, n3;
  int L1 = 0, L2 = 0, K = 0;
};

inline MlcSampleView make_view(const PosteriorSample& s) {
  MlcSampleView v;
  v.s = &s;
  v.L1 = static_cast<int>(s.beta[0].size()) - 1;
  v.L2 = static_cast<int>(s.beta[1].size()) - 1;
  v.K = static_cast<int>(s.beta[2].size()) - 1;
  v.n2.init(v.L1 + 1, v.L2 + 1);
  v.n3.init(v.L2 + 1, v.K + 1);
  for (std::size_t t = 0; t < s.z2.size(); ++t)
    for (std::size_t j = 0; j < s.z2[t].size(); ++j) {
      v.n2.add(s.z1[t], s.z2[t][j], 1);
      for (int k : s.z3[t][j]) v.n3.add(s.z2[t][j], k, 1);
    }
  return v;
}

// Mixture density of group (t, j) under one sample with the group's DP
// weights integrated out: represented atoms weighted by the collapsed
// predictive, the trailing (prior-drawn) atom by the remainder mass.
inline GridDensity mlc_group_density(const PosteriorSample& s, int t, int j,
                                     const std::vector<double>& grid) {
  if (s.atoms.empty() || s.atoms[0].mu.size() != 1)
    throw std::invalid_argument("mlc_group_density: requires d = 1 samples");
  MlcSampleView v = make_view(s);
  int l2 = s.z2[t][j];
  double a3 = s.alpha[2];
  GridDensity g;
  g.x = grid;
  g.pdf.assign(grid.size(), 0.0);
  for (int k = 0; k <= v.K; ++k) {
    double bk = s.beta[2][k];
    double w = collapsed_weight(v.n3.at(l2, k), v.n3.row_total[l2], a3, bk);
    if (w <= 0.0) continue;
    double mu = s.atoms[k].mu[0], s2 = s.atoms[k].sigma2[0];
    for (std::size_t i = 0; i < grid.size(); ++i)
      g.pdf[i] += w * std::exp(log_normal_pdf(grid[i], mu, s2));
  }
  return g;
}

inline GridDensity ndp_group_density(const NdpSample& s, int g_idx,
                                     const std::vector<double>& grid) {
  if (s.atoms.empty() || s.atoms[0][0].mu.size() != 1)
    throw std::invalid_argument("ndp_group_density: requires d = 1 samples");
  int k = s.group_z[g_idx];
  GridDensity g;
  g.x = grid;
  g.pdf.assign(grid.size(), 0.0);
  for (std::size_t m = 0; m < s.bottom_weights[k].size(); ++m) {
    double w = s.bottom_weights[k][m];
    if (w <= 0.0) continue;
    double mu = s.atoms[k][m].mu[0], s2 = s.atoms[k][m].sigma2[0];
    for (std::size_t i = 0; i < grid.size(); ++i)
      g.pdf[i] += w * std::exp(log_normal_pdf(grid[i], mu, s2));
  }
  return g;
}

// Average of per-sample group densities.
inline GridDensity posterior_density(const std::vector<PosteriorSample>& samples,
                                     int t, int j, const std::vector<double>& grid) {
  if (samples.empty()) throw std::invalid_argument("posterior_density: no samples");
  GridDensity acc;
  acc.x = grid;
  acc.pdf.assign(grid.size(), 0.0);
  for (const auto& s : samples) {
    GridDensity g = mlc_group_density(s, t, j, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) acc.pdf[i] += g.pdf[i];
  }
  for (double& p : acc.pdf) p /= static_cast<double>(samples.size());
  return acc;
}

// ---------------------------------------------------------------------------
// Held-out perplexity (conditional on assigned base atoms)
// ---------------------------------------------------------------------------

inline double seizure_loglik(const Seizure& s, const std::vector<int>& z,
                             const std::vector<AtomParams>& atoms) {
  if (z.size() != s.observations.size())
    throw std::invalid_argument("seizure_loglik: assignment size mismatch");
  double ll = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i)
    ll += loglik(atoms[z[i]].mu, atoms[z[i]].sigma2, s.observations[i]);
  return ll;
}

// PP = exp(-(1/M) sum_j log p(s_j)), p per the product of per-channel
// likelihoods under the assigned atoms.
inline double perplexity(const std::vector<Seizure>& heldout,
                         const std::vector<std::vector<int>>& assignments,
                         const std::vector<AtomParams>& atoms) {
  if (heldout.empty()) throw std::invalid_argument("perplexity: no held-out seizures");
  if (heldout.size() != assignments.size())
    throw std::invalid_argument("perplexity: assignment count mismatch");
  double total = 0.0;
  for (std::size_t j = 0; j < heldout.size(); ++j)
    total += seizure_loglik(heldout[j], assignments[j], atoms);
  return std::exp(-total / static_cast<double>(heldout.size()));
}

inline double log_perplexity(const std::vector<Seizure>& heldout,
                             const std::vector<std::vector<int>>& assignments,
                             const std::vector<AtomParams>& atoms) {
  double total = 0.0;
  for (std::size_t j = 0; j < heldout.size(); ++j)
    total += seizure_loglik(heldout[j], assignments[j], atoms);
  return -total / static_cast<double>(heldout.size());
}

// Deterministic MAP pass: every held-out channel goes to the non-empty atom
// maximizing collapsed weight times likelihood, with the seizure type picked
// by the best total score (level-2 prior weight included). No new atoms are
// created by held-out data.
inline std::vector<int> assign_heldout_mlchdp(const MlcSampleView& v, int t,
                                              const Seizure& s, int* type_out = nullptr) {
  const PosteriorSample& ps = *v.s;
  int l1 = ps.z1.at(t);
  double a2 = ps.alpha[1], a3 = ps.alpha[2];
  double best_total = -1e308;
  std::vector<int> best_assign;
  int best_type = 0;
  for (int l2 = 0; l2 < v.L2; ++l2) {
    double total = std::log(
        collapsed_weight(v.n2.at(l1, l2), v.n2.row_total[l1], a2, ps.beta[1][l2]));
    std::vector<int> assign(s.observations.size(), 0);
    for (std::size_t i = 0; i < s.observations.size(); ++i) {
      double best = -1e308;
      int bestk = 0;
      for (int k = 0; k < v.K; ++k) {
        double score =
            std::log(collapsed_weight(v.n3.at(l2, k), v.n3.row_total[l2], a3,
                                      ps.beta[2][k])) +
            loglik(ps.atoms[k].mu, ps.atoms[k].sigma2, s.observations[i]);
        if (score > best) {
          best = score;
          bestk = k;
        }
      }
      assign[i] = bestk;
      total += best;
    }
    if (total > best_total) {
      best_total = total;
      best_assign = std::move(assign);
      best_type = l2;
    }
  }
  if (type_out != nullptr) *type_out = best_type;
  return best_assign;
}

inline std::vector<int> assign_heldout_dp(const DpSample& ds, const Seizure& s) {
  std::vector<long long> counts(ds.atoms.size(), 0);
  for (int z : ds.z) ++counts[z];
  std::vector<int> assign(s.observations.size(), 0);
  for (std::size_t i = 0; i < s.observations.size(); ++i) {
    double best = -1e308;
    int bestk = 0;
    for (std::size_t k = 0; k < ds.atoms.size(); ++k) {
      if (counts[k] == 0) continue;
      double score = std::log(static_cast<double>(counts[k])) +
                     loglik(ds.atoms[k].mu, ds.atoms[k].sigma2, s.observations[i]);
      if (score > best) {
        best = score;
        bestk = static_cast<int>(k);
      }
    }
    assign[i] = bestk;
  }
  return assign;
}

// ---------------------------------------------------------------------------
// Metric rows (CSV: metric,model,dataset,chain,value)
// ---------------------------------------------------------------------------

struct MetricRow {
  std::string metric, model, dataset, chain;
  double value = 0.0;
};

// Appends mean and standard error (sample std / sqrt(#chains)) across
// numeric-chain rows, per (metric, model, dataset).
inline void append_aggregates(std::vector<MetricRow>& rows) {
  std::map<std::string, std::vector<double>> grouped;
  std::map<std::string, MetricRow> proto;
  for (const auto& r : rows) {
    if (r.chain == "mean" || r.chain == "se") continue;
    std::string key = r.metric + "\x1f" + r.model + "\x1f" + r.dataset;
    grouped[key].push_back(r.value);
    proto[key] = r;
  }
  for (auto& [key, vals] : grouped) {
    MetricRow m = proto[key];
    m.chain = "mean";
    m.value = mean_of(vals);
    rows.push_back(m);
    m.chain = "se";
    m.value = vals.size() > 1
                  ? std::sqrt(variance_of(vals) / static_cast<double>(vals.size()))
                  : 0.0;
    rows.push_back(m);
  }
}

inline void write_metrics_csv(const std::vector<MetricRow>& rows,
                              const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "metric,model,dataset,chain,value\n";
  out.precision(17);
  for (const auto& r : rows)
    out << r.metric << "," << r.model << "," << r.dataset << "," << r.chain << ","
        << r.value << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Growing-prefix perplexity protocol (the M1/M2/M3 experiment)
// ---------------------------------------------------------------------------

struct PrefixPerplexityRow {
  std::string model;  // "m1", "m2", "m3"
  int prefix = 0;     // j: trained on seizures 1..j of the target patient
  int chain = 0;
  double log_pp = 0.0;  // mean over posterior samples
};

struct PrefixProtocolConfig {
  int patient = 0;
  int chains = 3;
  ChainConfig chain_cfg;       // burn_in/thin/n_samples/seed shared by models
  std::vector<int> prefixes;   // empty = 1..J_t-1
  bool run_m1 = true, run_m2 = true, run_m3 = true;
};

inline std::vector<PrefixPerplexityRow> run_growing_prefix(
    const HierDataset& data, const PrefixProtocolConfig& pc) {
  data.validate();
  int t = pc.patient;
  if (t < 0 || t >= data.num_patients())
    throw std::invalid_argument("run_growing_prefix: bad patient index");
  int Jt = static_cast<int>(data.patients[t].seizures.size());
  if (Jt < 2) throw std::invalid_argument("run_growing_prefix: patient needs >= 2 seizures");
  std::vector<int> prefixes = pc.prefixes;
  if (prefixes.empty())
    for (int j = 1; j < Jt; ++j) prefixes.push_back(j);

  std::vector<PrefixPerplexityRow> rows;
  for (int j : prefixes) {
    if (j < 1 || j >= Jt) throw std::invalid_argument("run_growing_prefix: bad prefix");
    std::vector<Seizure> heldout(data.patients[t].seizures.begin() + j,
                                 data.patients[t].seizures.end());

    std::vector<Observation> m1_obs;
    for (int jj = 0; jj < j; ++jj)
      for (const auto& x : data.patients[t].seizures[jj].observations)
        m1_obs.push_back(x);
    std::vector<Observation> m2_obs = m1_obs;
    for (int tt = 0; tt < data.num_patients(); ++tt) {
      if (tt == t) continue;
      for (const auto& sz : data.patients[tt].seizures)
        for (const auto& x : sz.observations) m2_obs.push_back(x);
    }
    HierDataset m3_data = data;
    m3_data.patients[t].seizures.resize(j);

    for (int c = 0; c < pc.chains; ++c) {
      ChainConfig cc = pc.chain_cfg;
      cc.seed = pc.chain_cfg.seed + 0x9e3779b97f4a7c15ull *
                                        static_cast<std::uint64_t>(c * 1000 + j + 1);
      auto score_dp = [&](const std::vector<Observation>& obs, const char* name) {
        BasePrior prior = make_default_prior(obs);
        auto samples = run_dp_chain(obs, prior, 1.0, cc);
        double acc = 0.0;
        for (const auto& s : samples) {
          std::vector<std::vector<int>> assign;
          for (const auto& hs : heldout) assign.push_back(assign_heldout_dp(s, hs));
          acc += log_perplexity(heldout, assign, s.atoms);
        }
        rows.push_back({name, j, c, acc / static_cast<double>(samples.size())});
      };
      if (pc.run_m1) score_dp(m1_obs, "m1");
      if (pc.run_m2) score_dp(m2_obs, "m2");
      if (pc.run_m3) {
        BasePrior prior = default_prior(m3_data);
        HyperState hypers;
        auto samples = run_chain(m3_data, prior, hypers, cc);
        double acc = 0.0;
        for (const auto& s : samples) {
          MlcSampleView view = make_view(s);
          std::vector<std::vector<int>> assign;
          for (const auto& hs : heldout)
            assign.push_back(assign_heldout_mlchdp(view, t, hs));
          acc += log_perplexity(heldout, assign, s.atoms);
        }
        rows.push_back({"m3", j, c, acc / static_cast<double>(samples.size())});
      }
    }
  }
  return rows;
}

}  // namespace mlchdp
