#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlchdp/baselines.hpp"
#include "mlchdp/sampler.hpp"

namespace mlchdp {

inline nlohmann::json atoms_to_json(const std::vector<AtomParams>& atoms) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& a : atoms) j.push_back({{"mu", a.mu}, {"sigma2", a.sigma2}});
  return j;
}

inline std::vector<AtomParams> atoms_from_json(const nlohmann::json& j) {
  std::vector<AtomParams> out;
  for (const auto& ja : j)
    out.push_back({ja.at("mu").get<std::vector<double>>(),
                   ja.at("sigma2").get<std::vector<double>>()});
  return out;
}

inline nlohmann::json sample_to_json(const PosteriorSample& s) {
  nlohmann::json j;
  j["iter"] = s.iter;
  j["model"] = "mlchdp";
  j["z1"] = s.z1;
  j["z2"] = s.z2;
  j["z3"] = s.z3;
  j["beta"] = {{"l1", s.beta[0]}, {"l2", s.beta[1]}, {"l3", s.beta[2]}};
  j["atoms"] = atoms_to_json(s.atoms);
  j["hypers"] = {{"alpha", s.alpha}, {"gamma", s.gamma}};
  return j;
}

inline PosteriorSample sample_from_json(const nlohmann::json& j) {
  PosteriorSample s;
  s.iter = j.at("iter").get<long long>();
  s.z1 = j.at("z1").get<std::vector<int>>();
  s.z2 = j.at("z2").get<std::vector<std::vector<int>>>();
  s.z3 = j.at("z3").get<std::vector<std::vector<std::vector<int>>>>();
  s.beta[0] = j.at("beta").at("l1").get<std::vector<double>>();
  s.beta[1] = j.at("beta").at("l2").get<std::vector<double>>();
  s.beta[2] = j.at("beta").at("l3").get<std::vector<double>>();
  s.atoms = atoms_from_json(j.at("atoms"));
  s.alpha = j.at("hypers").at("alpha").get<std::array<double, 3>>();
  s.gamma = j.at("hypers").at("gamma").get<std::array<double, 3>>();
  return s;
}

inline nlohmann::json sample_to_json(const DpSample& s) {
  nlohmann::json j;
  j["iter"] = s.iter;
  j["model"] = "dp";
  j["z"] = s.z;
  j["atoms"] = atoms_to_json(s.atoms);
  j["hypers"] = {{"alpha", s.alpha}};
  return j;
}

inline DpSample dp_sample_from_json(const nlohmann::json& j) {
  DpSample s;
  s.iter = j.at("iter").get<long long>();
  s.z = j.at("z").get<std::vector<int>>();
  s.atoms = atoms_from_json(j.at("atoms"));
  s.alpha = j.at("hypers").at("alpha").get<double>();
  return s;
}

inline nlohmann::json sample_to_json(const NdpSample& s) {
  nlohmann::json j;
  j["iter"] = s.iter;
  j["model"] = "ndp";
  j["z2"] = s.group_z;
  j["z3"] = s.obs_z;
  j["weights"] = {{"top", s.top_weights}, {"bottom", s.bottom_weights}};
  nlohmann::json ja = nlohmann::json::array();
  for (const auto& row : s.atoms) ja.push_back(atoms_to_json(row));
  j["atoms"] = ja;
  j["hypers"] = {{"alpha_top", s.alpha_top}, {"alpha_bottom", s.alpha_bottom}};
  return j;
}

inline NdpSample ndp_sample_from_json(const nlohmann::json& j) {
  NdpSample s;
  s.iter = j.at("iter").get<long long>();
  s.group_z = j.at("z2").get<std::vector<int>>();
  s.obs_z = j.at("z3").get<std::vector<std::vector<int>>>();
  s.top_weights = j.at("weights").at("top").get<std::vector<double>>();
  s.bottom_weights =
      j.at("weights").at("bottom").get<std::vector<std::vector<double>>>();
  for (const auto& row : j.at("atoms")) s.atoms.push_back(atoms_from_json(row));
  s.alpha_top = j.at("hypers").at("alpha_top").get<double>();
  s.alpha_bottom = j.at("hypers").at("alpha_bottom").get<double>();
  return s;
}

template <typename SampleT>
void write_jsonl(const std::vector<SampleT>& samples, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const auto& s : samples) out << sample_to_json(s).dump() << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::vector<nlohmann::json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sample file: " + path);
  std::vector<nlohmann::json> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(nlohmann::json::parse(line));
  }
  return out;
}

inline std::string jsonl_model_tag(const std::vector<nlohmann::json>& lines) {
  if (lines.empty()) throw std::runtime_error("empty sample file");
  return lines.front().at("model").get<std::string>();
}

}  // namespace mlchdp
