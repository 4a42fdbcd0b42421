#pragma once

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace mlchdp {

using Observation = std::vector<double>;

struct Seizure {
  std::string id;
  std::vector<Observation> observations;
  bool operator==(const Seizure&) const = default;
};

struct Patient {
  std::string id;
  std::vector<Seizure> seizures;
  bool operator==(const Patient&) const = default;
};

// Nested patients -> seizures -> channel observation vectors in R^d.
// Ragged seizure and channel counts are permitted; d is uniform.
struct HierDataset {
  int d = 0;
  std::vector<Patient> patients;

  bool operator==(const HierDataset&) const = default;

  int num_patients() const { return static_cast<int>(patients.size()); }

  long long total_observations() const {
    long long n = 0;
    for (const auto& p : patients)
      for (const auto& s : p.seizures) n += static_cast<long long>(s.observations.size());
    return n;
  }

  std::vector<Observation> flatten() const {
    std::vector<Observation> out;
    out.reserve(static_cast<std::size_t>(total_observations()));
    for (const auto& p : patients)
      for (const auto& s : p.seizures)
        for (const auto& x : s.observations) out.push_back(x);
    return out;
  }

  void validate() const {
    if (d <= 0) throw std::runtime_error("dataset: d must be positive");
    if (patients.empty()) throw std::runtime_error("dataset: empty patient list");
    for (const auto& p : patients) {
      if (p.seizures.empty())
        throw std::runtime_error("dataset: empty patient '" + p.id + "'");
      for (const auto& s : p.seizures) {
        if (s.observations.empty())
          throw std::runtime_error("dataset: empty seizure '" + s.id +
                                   "' of patient '" + p.id + "'");
        for (const auto& x : s.observations) {
          if (static_cast<int>(x.size()) != d)
            throw std::runtime_error("dataset: dimension mismatch in seizure '" +
                                     s.id + "'");
          for (double v : x)
            if (!std::isfinite(v))
              throw std::runtime_error("dataset: non-finite value in seizure '" +
                                       s.id + "'");
        }
      }
    }
  }
};

inline nlohmann::json dataset_to_json(const HierDataset& ds) {
  nlohmann::json j;
  j["d"] = ds.d;
  j["patients"] = nlohmann::json::array();
  for (const auto& p : ds.patients) {
    nlohmann::json jp;
    jp["id"] = p.id;
    jp["seizures"] = nlohmann::json::array();
    for (const auto& s : p.seizures) {
      nlohmann::json js;
      js["id"] = s.id;
      js["observations"] = s.observations;
      jp["seizures"].push_back(std::move(js));
    }
    j["patients"].push_back(std::move(jp));
  }
  return j;
}

inline HierDataset dataset_from_json(const nlohmann::json& j) {
  HierDataset ds;
  ds.d = j.at("d").get<int>();
  for (const auto& jp : j.at("patients")) {
    Patient p;
    p.id = jp.at("id").get<std::string>();
    for (const auto& js : jp.at("seizures")) {
      Seizure s;
      s.id = js.at("id").get<std::string>();
      s.observations = js.at("observations").get<std::vector<Observation>>();
      p.seizures.push_back(std::move(s));
    }
    ds.patients.push_back(std::move(p));
  }
  ds.validate();
  return ds;
}

inline void save_dataset(const HierDataset& ds, const std::string& path) {
  ds.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << dataset_to_json(ds).dump() << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline HierDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("dataset parse failure: " + path + ": " + e.what());
  }
  try {
    return dataset_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("dataset schema error: " + path + ": " + e.what());
  }
}

}  // namespace mlchdp
