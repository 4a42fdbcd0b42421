#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlchdp/base_model.hpp"
#include "mlchdp/data.hpp"
#include "mlchdp/math_util.hpp"
#include "mlchdp/rng.hpp"

namespace mlchdp {

struct MixtureComponent {
  double w = 1.0;
  double mu = 0.0;
  double sigma2 = 1.0;
};

// Univariate Gaussian mixture, used for the simulation-study truth.
struct MixtureSpec {
  std::vector<MixtureComponent> components;

  void validate() const {
    if (components.empty()) throw std::invalid_argument("MixtureSpec: empty");
    double total = 0.0;
    for (const auto& c : components) {
      if (!(c.sigma2 > 0.0)) throw std::invalid_argument("MixtureSpec: sigma2 <= 0");
      if (c.w < 0.0) throw std::invalid_argument("MixtureSpec: negative weight");
      total += c.w;
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw std::invalid_argument("MixtureSpec: weights do not sum to 1");
  }

  double sample(Rng& rng) const {
    double u = rng.u01();
    double acc = 0.0;
    for (const auto& c : components) {
      acc += c.w;
      if (u < acc) return rng.normal(c.mu, std::sqrt(c.sigma2));
    }
    const auto& c = components.back();
    return rng.normal(c.mu, std::sqrt(c.sigma2));
  }

  double pdf(double x) const {
    double p = 0.0;
    for (const auto& c : components)
      p += c.w * std::exp(log_normal_pdf(x, c.mu, c.sigma2));
    return p;
  }

  double mean() const {
    double m = 0.0;
    for (const auto& c : components) m += c.w * c.mu;
    return m;
  }

  double second_moment() const {
    double m = 0.0;
    for (const auto& c : components) m += c.w * (c.mu * c.mu + c.sigma2);
    return m;
  }

  double variance() const {
    double m = mean();
    return second_moment() - m * m;
  }

  // E[x^4], needed for Monte Carlo standard errors of second moments.
  double fourth_moment() const {
    double m = 0.0;
    for (const auto& c : components) {
      double mu2 = c.mu * c.mu;
      m += c.w * (mu2 * mu2 + 6.0 * mu2 * c.sigma2 + 3.0 * c.sigma2 * c.sigma2);
    }
    return m;
  }
};

// The four true distributions T1-T4 of the simulation study.
inline std::array<MixtureSpec, 4> table1_mixtures() {
  std::array<MixtureSpec, 4> t;
  t[0].components = {{0.75, 0.0, 1.0}, {0.25, 3.0, 2.0}};
  t[1].components = {{0.55, 0.0, 1.0}, {0.45, 3.0, 2.0}};
  t[2].components = {{0.40, 0.0, 1.0}, {0.30, -2.0, 2.0}, {0.30, 2.0, 2.0}};
  t[3].components = {
      {0.39, 0.0, 1.0}, {0.29, -2.0, 2.0}, {0.29, 2.0, 2.0}, {0.03, 10.0, 1.0}};
  for (auto& m : t) m.validate();
  return t;
}

struct Table1Sim {
  HierDataset dataset;        // one dummy root patient, groups as seizures
  std::vector<int> group_labels;  // distribution index 0..3 per group
};

// samples_per_dist groups per distribution, obs_per_sample observations per
// group, d = 1. Groups are ordered T1 block first, then T2, T3, T4.
inline Table1Sim simulate_table1(int samples_per_dist, int obs_per_sample,
                                 std::uint64_t seed) {
  if (samples_per_dist < 1 || obs_per_sample < 1)
    throw std::invalid_argument("simulate_table1: counts must be >= 1");
  auto mixtures = table1_mixtures();
  Rng rng(seed);
  Table1Sim out;
  out.dataset.d = 1;
  Patient root;
  root.id = "sim";
  for (int dist = 0; dist < 4; ++dist)
    for (int g = 0; g < samples_per_dist; ++g) {
      Seizure grp;
      grp.id = "T" + std::to_string(dist + 1) + "_g" + std::to_string(g);
      grp.observations.reserve(obs_per_sample);
      for (int i = 0; i < obs_per_sample; ++i)
        grp.observations.push_back({mixtures[dist].sample(rng)});
      root.seizures.push_back(std::move(grp));
      out.group_labels.push_back(dist);
    }
  out.dataset.patients.push_back(std::move(root));
  out.dataset.validate();
  return out;
}

// Fixed finite truth for hierarchical fixtures: explicit atoms, seizure-type
// weights over atoms, patient-type weights over seizure types. Explicit
// per-patient / per-seizure type assignments override the multinomials.
struct HierarchySpec {
  int T = 1;
  std::vector<int> seizures_per_patient;            // size T (or broadcast one)
  std::vector<int> channels_per_seizure;            // broadcast one, per-patient T, or flat sum(J)
  std::vector<std::vector<double>> patient_type_weights;   // 1 x P (population)
  std::vector<std::vector<double>> seizure_type_weights;   // P x S
  std::vector<std::vector<double>> atom_weights;           // S x K
  std::vector<AtomParams> atoms;                           // K atoms, dim d
  std::vector<int> explicit_patient_types;                 // optional, size T
  std::vector<std::vector<int>> explicit_seizure_types;    // optional, T x J_t
};

struct HierarchySim {
  HierDataset dataset;
  std::vector<int> patient_types;
  std::vector<std::vector<int>> seizure_types;
  std::vector<std::vector<std::vector<int>>> channel_atoms;
};

namespace detail {

inline void check_multinomial(const std::vector<double>& w, const char* what) {
  if (w.empty()) throw std::invalid_argument(std::string("invalid multinomial: empty ") + what);
  double total = 0.0;
  for (double v : w) {
    if (v < 0.0)
      throw std::invalid_argument(std::string("invalid multinomial: negative weight in ") + what);
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument(std::string("invalid multinomial: unnormalized ") + what);
}

inline int broadcast_at(const std::vector<int>& v, int i, const char* what) {
  if (v.size() == 1) return v[0];
  if (i < static_cast<int>(v.size())) return v[i];
  throw std::invalid_argument(std::string("bad size list for ") + what);
}

}  // namespace detail

// Ancestral sampling of the finite analogue of the generative model under a
// fixed truth; labels at all three levels are returned beside the data.
inline HierarchySim simulate_hierarchy(const HierarchySpec& spec,
                                       std::uint64_t seed) {
  if (spec.T < 1) throw std::invalid_argument("simulate_hierarchy: T must be >= 1");
  if (spec.atoms.empty()) throw std::invalid_argument("simulate_hierarchy: no atoms");
  int d = static_cast<int>(spec.atoms.front().mu.size());
  for (const auto& a : spec.atoms)
    if (static_cast<int>(a.mu.size()) != d || a.sigma2.size() != a.mu.size())
      throw std::invalid_argument("simulate_hierarchy: atom shape mismatch");
  if (spec.explicit_patient_types.empty()) {
    if (spec.patient_type_weights.size() != 1)
      throw std::invalid_argument("simulate_hierarchy: need population weights");
    detail::check_multinomial(spec.patient_type_weights[0], "patient types");
  }
  for (const auto& w : spec.seizure_type_weights)
    detail::check_multinomial(w, "seizure types");
  for (const auto& w : spec.atom_weights) detail::check_multinomial(w, "atoms");

  Rng rng(seed);
  HierarchySim out;
  out.dataset.d = d;
  for (int t = 0; t < spec.T; ++t) {
    int pt;
    if (!spec.explicit_patient_types.empty())
      pt = spec.explicit_patient_types.at(t);
    else
      pt = rng.categorical(spec.patient_type_weights[0]);
    out.patient_types.push_back(pt);

    Patient p;
    p.id = "p" + std::to_string(t);
    int J = detail::broadcast_at(spec.seizures_per_patient, t, "seizures_per_patient");
    if (J < 1) throw std::invalid_argument("simulate_hierarchy: J must be >= 1");
    out.seizure_types.emplace_back();
    out.channel_atoms.emplace_back();
    for (int j = 0; j < J; ++j) {
      int st;
      if (!spec.explicit_seizure_types.empty())
        st = spec.explicit_seizure_types.at(t).at(j);
      else
        st = rng.categorical(spec.seizure_type_weights.at(pt));
      out.seizure_types[t].push_back(st);

      Seizure s;
      s.id = p.id + "_s" + std::to_string(j);
      int N = detail::broadcast_at(spec.channels_per_seizure, t, "channels_per_seizure");
      if (N < 1) throw std::invalid_argument("simulate_hierarchy: N must be >= 1");
      out.channel_atoms[t].emplace_back();
      for (int i = 0; i < N; ++i) {
        int k = rng.categorical(spec.atom_weights.at(st));
        out.channel_atoms[t][j].push_back(k);
        Observation x(d);
        for (int dd = 0; dd < d; ++dd)
          x[dd] = rng.normal(spec.atoms[k].mu[dd], std::sqrt(spec.atoms[k].sigma2[dd]));
        s.observations.push_back(std::move(x));
      }
      p.seizures.push_back(std::move(s));
    }
    out.dataset.patients.push_back(std::move(p));
  }
  out.dataset.validate();
  return out;
}

// Truth-label sidecars. Table-1 sidecars carry the group labels plus the
// generating mixtures so evaluation needs no hard-coded truth.
struct Table1Truth {
  std::vector<int> group_labels;
  std::vector<MixtureSpec> distributions;
};

inline void save_table1_truth(const Table1Truth& t, const std::string& path) {
  nlohmann::json j;
  j["group_labels"] = t.group_labels;
  j["distributions"] = nlohmann::json::array();
  for (const auto& m : t.distributions) {
    nlohmann::json jm = nlohmann::json::array();
    for (const auto& c : m.components)
      jm.push_back({{"w", c.w}, {"mu", c.mu}, {"sigma2", c.sigma2}});
    j["distributions"].push_back(std::move(jm));
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump() << "\n";
}

inline Table1Truth load_table1_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open truth file: " + path);
  nlohmann::json j;
  in >> j;
  Table1Truth t;
  t.group_labels = j.at("group_labels").get<std::vector<int>>();
  for (const auto& jm : j.at("distributions")) {
    MixtureSpec m;
    for (const auto& jc : jm)
      m.components.push_back({jc.at("w").get<double>(), jc.at("mu").get<double>(),
                              jc.at("sigma2").get<double>()});
    m.validate();
    t.distributions.push_back(std::move(m));
  }
  return t;
}

inline void save_hierarchy_truth(const HierarchySim& sim, const std::string& path) {
  nlohmann::json j;
  j["patient_types"] = sim.patient_types;
  j["seizure_types"] = sim.seizure_types;
  j["channel_atoms"] = sim.channel_atoms;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump() << "\n";
}

}  // namespace mlchdp
