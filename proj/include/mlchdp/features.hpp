#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <fftw3.h>
#include <json.hpp>

namespace mlchdp {

// ---------------------------------------------------------------------------
// Raw signal records: JSON sidecar {"fs": float, "channels": [names]} plus a
// row-major little-endian f64 binary (channels x samples) at the same stem
// with extension .f64 (or an explicit "data" field).
// ---------------------------------------------------------------------------

struct SignalRecord {
  double fs = 0.0;
  double t0 = 0.0;
  std::vector<std::string> names;
  std::vector<std::vector<double>> channels;

  void validate() const {
    if (!(fs > 0.0)) throw std::runtime_error("signal: fs must be > 0");
    if (channels.empty()) throw std::runtime_error("signal: no channels");
    for (const auto& c : channels)
      if (c.size() != channels[0].size())
        throw std::runtime_error("signal: unequal channel lengths");
  }
};

inline std::string sidecar_binary_path(const std::string& sidecar_path,
                                       const nlohmann::json& j) {
  if (j.contains("data")) {
    std::string rel = j.at("data").get<std::string>();
    auto slash = sidecar_path.find_last_of('/');
    if (slash == std::string::npos) return rel;
    return sidecar_path.substr(0, slash + 1) + rel;
  }
  auto dot = sidecar_path.find_last_of('.');
  std::string stem = dot == std::string::npos ? sidecar_path : sidecar_path.substr(0, dot);
  return stem + ".f64";
}

inline SignalRecord load_signal(const std::string& sidecar_path) {
  std::ifstream in(sidecar_path);
  if (!in) throw std::runtime_error("cannot open signal sidecar: " + sidecar_path);
  nlohmann::json j;
  in >> j;
  SignalRecord rec;
  rec.fs = j.at("fs").get<double>();
  rec.names = j.at("channels").get<std::vector<std::string>>();
  if (j.contains("t0")) rec.t0 = j.at("t0").get<double>();

  std::string bin = sidecar_binary_path(sidecar_path, j);
  std::ifstream data(bin, std::ios::binary | std::ios::ate);
  if (!data) throw std::runtime_error("cannot open signal data: " + bin);
  std::streamsize bytes = data.tellg();
  data.seekg(0);
  std::size_t C = rec.names.size();
  if (C == 0 || bytes % static_cast<std::streamsize>(8 * C) != 0)
    throw std::runtime_error("signal data size inconsistent with channel count: " + bin);
  std::size_t samples = static_cast<std::size_t>(bytes) / (8 * C);
  rec.channels.assign(C, std::vector<double>(samples));
  for (std::size_t c = 0; c < C; ++c)
    data.read(reinterpret_cast<char*>(rec.channels[c].data()),
              static_cast<std::streamsize>(samples * 8));
  if (!data) throw std::runtime_error("short read on signal data: " + bin);
  rec.validate();
  return rec;
}

inline void save_signal(const SignalRecord& rec, const std::string& sidecar_path) {
  rec.validate();
  nlohmann::json j;
  j["fs"] = rec.fs;
  j["channels"] = rec.names;
  if (rec.t0 != 0.0) j["t0"] = rec.t0;
  std::ofstream out(sidecar_path);
  if (!out) throw std::runtime_error("cannot open for writing: " + sidecar_path);
  out << j.dump() << "\n";
  std::string bin = sidecar_binary_path(sidecar_path, j);
  std::ofstream data(bin, std::ios::binary);
  for (const auto& c : rec.channels)
    data.write(reinterpret_cast<const char*>(c.data()),
               static_cast<std::streamsize>(c.size() * 8));
  if (!data) throw std::runtime_error("write failed: " + bin);
}

// ---------------------------------------------------------------------------
// Sliding-window log10 band powers
// ---------------------------------------------------------------------------

struct BandSpec {
  std::vector<std::pair<double, double>> bands{
      {4.0, 8.0}, {8.0, 13.0}, {13.0, 30.0}, {30.0, 100.0}};
  double window_sec = 0.5;
  double overlap = 0.5;              // fraction of the window
  double power_floor = 1e-12;        // applied before log10

  void validate() const {
    if (bands.empty()) throw std::invalid_argument("BandSpec: no bands");
    for (auto [lo, hi] : bands)
      if (!(0.0 < lo && lo < hi)) throw std::invalid_argument("BandSpec: bad band");
    if (!(window_sec > 0.0)) throw std::invalid_argument("BandSpec: bad window");
    if (!(0.0 <= overlap && overlap < 1.0))
      throw std::invalid_argument("BandSpec: overlap must be in [0, 1)");
  }
};

inline long long window_samples(double window_sec, double fs) {
  return std::llround(window_sec * fs);
}

inline long long hop_samples(long long win, double overlap) {
  long long hop = std::llround(static_cast<double>(win) * (1.0 - overlap));
  return std::max<long long>(hop, 1);
}

// floor((len - win) / hop) + 1
inline long long window_count(long long len, long long win, long long hop) {
  if (len < win) return 0;
  return (len - win) / hop + 1;
}

namespace detail {

inline std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

// One-sided periodogram of a Hann-tapered segment; psd[b] in power per Hz at
// frequency b * fs / n. Normalization: sum(psd) * df = weighted mean square
// of the segment.
class Periodogram {
 public:
  explicit Periodogram(int n) : n_(n), in_(n), out_(n / 2 + 1) {
    window_.resize(n);
    u_ = 0.0;
    for (int i = 0; i < n; ++i) {
      window_[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / n);  // periodic Hann
      u_ += window_[i] * window_[i];
    }
    std::lock_guard<std::mutex> lock(fftw_mutex());
    plan_ = fftw_plan_dft_r2c_1d(n, in_.data(),
                                 reinterpret_cast<fftw_complex*>(out_.data()),
                                 FFTW_ESTIMATE);
  }

  ~Periodogram() {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    fftw_destroy_plan(plan_);
  }

  Periodogram(const Periodogram&) = delete;
  Periodogram& operator=(const Periodogram&) = delete;

  // psd must have n/2 + 1 entries.
  void compute(const double* x, double fs, std::vector<double>& psd) {
    for (int i = 0; i < n_; ++i) in_[i] = x[i] * window_[i];
    fftw_execute(plan_);
    double scale = 1.0 / (fs * u_);
    int nb = n_ / 2 + 1;
    for (int b = 0; b < nb; ++b) {
      double p = std::norm(out_[b]) * scale;
      bool interior = b != 0 && !(n_ % 2 == 0 && b == nb - 1);
      psd[b] = interior ? 2.0 * p : p;
    }
  }

 private:
  int n_;
  std::vector<double> in_;
  std::vector<std::complex<double>> out_;
  std::vector<double> window_;
  double u_;
  fftw_plan plan_;
};

}  // namespace detail

// log10 power in each band for every window position, window-major (the
// band values of window 0, then window 1, ...). Bands above Nyquist are
// truncated with a warning; bands entirely above Nyquist are an error.
inline std::vector<double> channel_band_features(const std::vector<double>& signal,
                                                 double fs, const BandSpec& spec,
                                                 std::vector<std::string>* warnings = nullptr) {
  spec.validate();
  if (!(fs > 0.0)) throw std::invalid_argument("channel_band_features: fs must be > 0");
  long long win = window_samples(spec.window_sec, fs);
  long long hop = hop_samples(win, spec.overlap);
  if (win < 2) throw std::invalid_argument("channel_band_features: window too short");
  long long nwin = window_count(static_cast<long long>(signal.size()), win, hop);
  if (nwin < 1)
    throw std::invalid_argument("channel_band_features: signal shorter than one window");

  double nyquist = fs / 2.0;
  std::vector<std::pair<double, double>> bands = spec.bands;
  for (auto& [lo, hi] : bands) {
    if (lo >= nyquist)
      throw std::invalid_argument("channel_band_features: band above Nyquist");
    if (hi > nyquist) {
      if (warnings != nullptr)
        warnings->push_back("band truncated at Nyquist: " + std::to_string(lo) + "-" +
                            std::to_string(hi) + " Hz at fs=" + std::to_string(fs));
      hi = nyquist;
    }
  }

  double df = fs / static_cast<double>(win);
  int nb = static_cast<int>(win / 2 + 1);
  // bin b belongs to band [lo, hi) by its center frequency
  std::vector<std::vector<int>> band_bins(bands.size());
  for (std::size_t bi = 0; bi < bands.size(); ++bi)
    for (int b = 0; b < nb; ++b) {
      double f = b * df;
      if (f >= bands[bi].first && f < bands[bi].second) band_bins[bi].push_back(b);
    }

  detail::Periodogram pg(static_cast<int>(win));
  std::vector<double> psd(nb);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(nwin) * bands.size());
  for (long long w = 0; w < nwin; ++w) {
    pg.compute(signal.data() + w * hop, fs, psd);
    for (std::size_t bi = 0; bi < bands.size(); ++bi) {
      double power = 0.0;
      for (int b : band_bins[bi]) power += psd[b] * df;
      out.push_back(std::log10(std::max(power, spec.power_floor)));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// PCA
// ---------------------------------------------------------------------------

struct PCAModel {
  std::vector<double> mean;                    // input_dim
  std::vector<std::vector<double>> components; // target_dim x input_dim, orthonormal rows
  std::vector<double> explained;               // fraction of variance per component

  int input_dim() const { return static_cast<int>(mean.size()); }
  int target_dim() const { return static_cast<int>(components.size()); }
};

// Principal components by descending eigenvalue; component signs fixed so
// the first nonzero coefficient is positive.
inline PCAModel fit_pca(const std::vector<std::vector<double>>& X, int target_dim) {
  std::size_t n = X.size();
  if (n < 2) throw std::invalid_argument("fit_pca: need at least 2 rows");
  int D = static_cast<int>(X[0].size());
  for (const auto& row : X)
    if (static_cast<int>(row.size()) != D)
      throw std::invalid_argument("fit_pca: ragged rows");
  if (target_dim < 1 || target_dim > std::min<int>(static_cast<int>(n) - 1, D))
    throw std::invalid_argument("fit_pca: target_dim must be in [1, min(rows-1, cols)]");

  Eigen::MatrixXd M(n, D);
  for (std::size_t i = 0; i < n; ++i)
    for (int j = 0; j < D; ++j) M(i, j) = X[i][j];
  Eigen::RowVectorXd mean = M.colwise().mean();
  M.rowwise() -= mean;
  double denom = static_cast<double>(n - 1);
  double total_var = M.squaredNorm() / denom;
  if (!(total_var > 0.0)) throw std::invalid_argument("fit_pca: degenerate data");

  Eigen::MatrixXd comps;  // columns = eigenvectors, descending
  Eigen::VectorXd evals;
  if (D <= static_cast<int>(n)) {
    Eigen::MatrixXd cov = M.transpose() * M / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    evals = es.eigenvalues().reverse();
    comps = es.eigenvectors().rowwise().reverse();
  } else {
    // Gram trick: eigenvectors of the n x n Gram matrix lift to components.
    Eigen::MatrixXd gram = M * M.transpose() / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    Eigen::VectorXd gvals = es.eigenvalues().reverse();
    Eigen::MatrixXd gvecs = es.eigenvectors().rowwise().reverse();
    evals = gvals.head(target_dim);
    comps.resize(D, target_dim);
    for (int c = 0; c < target_dim; ++c) {
      double lam = std::max(gvals(c), 0.0);
      Eigen::VectorXd v = M.transpose() * gvecs.col(c);
      double norm = v.norm();
      if (norm <= 0.0) throw std::invalid_argument("fit_pca: rank too low for target_dim");
      comps.col(c) = v / norm;
      evals(c) = lam;
    }
  }

  PCAModel model;
  model.mean.assign(mean.data(), mean.data() + D);
  for (int c = 0; c < target_dim; ++c) {
    Eigen::VectorXd v = comps.col(c);
    for (int j = 0; j < D; ++j) {
      if (std::abs(v(j)) > 1e-12) {
        if (v(j) < 0.0) v = -v;
        break;
      }
    }
    std::vector<double> row(v.data(), v.data() + D);
    model.components.push_back(std::move(row));
    model.explained.push_back(std::max(evals(c), 0.0) / total_var);
  }
  return model;
}

inline std::vector<double> apply_pca(const PCAModel& model, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != model.input_dim())
    throw std::invalid_argument("apply_pca: dimension mismatch");
  std::vector<double> out(model.target_dim(), 0.0);
  for (int c = 0; c < model.target_dim(); ++c) {
    double acc = 0.0;
    for (int j = 0; j < model.input_dim(); ++j)
      acc += model.components[c][j] * (x[j] - model.mean[j]);
    out[c] = acc;
  }
  return out;
}

inline std::vector<double> reconstruct_pca(const PCAModel& model,
                                           const std::vector<double>& y) {
  std::vector<double> x(model.mean);
  for (int c = 0; c < model.target_dim(); ++c)
    for (int j = 0; j < model.input_dim(); ++j)
      x[j] += model.components[c][j] * y[c];
  return x;
}

}  // namespace mlchdp
