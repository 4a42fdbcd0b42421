#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace mlchdp {

// All stochastic code in the library draws through this wrapper so that a
// chain's entire randomness is determined by one seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Independent stream for chain `chain` derived from a base seed.
  static Rng for_chain(std::uint64_t base_seed, int chain) {
    std::seed_seq seq{static_cast<unsigned>(base_seed & 0xffffffffu),
                      static_cast<unsigned>(base_seed >> 32),
                      static_cast<unsigned>(chain)};
    Rng r(0);
    r.engine_.seed(seq);
    return r;
  }

  double u01() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
  }

  double normal(double mean, double sd) {
    return std::normal_distribution<double>(mean, sd)(engine_);
  }

  double gamma(double shape, double scale) {
    return std::gamma_distribution<double>(shape, scale)(engine_);
  }

  double beta(double a, double b) {
    double x = gamma(a, 1.0);
    double y = gamma(b, 1.0);
    double s = x + y;
    if (s <= 0.0) return 0.5;
    double v = x / s;
    // keep strictly inside (0,1); stick-breaking divides by these
    const double eps = 1e-12;
    return std::min(std::max(v, eps), 1.0 - eps);
  }

  double chisq(double nu) { return gamma(0.5 * nu, 2.0); }

  bool bernoulli(double p) { return u01() < p; }

  int uniform_int(int n) {
    return std::uniform_int_distribution<int>(0, n - 1)(engine_);
  }

  // Index draw proportional to nonnegative weights.
  int categorical(const std::vector<double>& w) {
    double total = 0.0;
    for (double v : w) total += v;
    if (!(total > 0.0)) throw std::runtime_error("categorical: zero total weight");
    double u = u01() * total;
    double acc = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      acc += w[k];
      if (u < acc) return static_cast<int>(k);
    }
    return static_cast<int>(w.size()) - 1;
  }

  // Index draw from unnormalized log weights (max-subtracted).
  int categorical_logits(const std::vector<double>& lw) {
    double m = lw[0];
    for (double v : lw) m = std::max(m, v);
    double total = 0.0;
    for (double v : lw) total += std::exp(v - m);
    double u = u01() * total;
    double acc = 0.0;
    for (std::size_t k = 0; k < lw.size(); ++k) {
      acc += std::exp(lw[k] - m);
      if (u < acc) return static_cast<int>(k);
    }
    return static_cast<int>(lw.size()) - 1;
  }

  std::vector<double> dirichlet(const std::vector<double>& conc) {
    std::vector<double> out(conc.size());
    double total = 0.0;
    for (std::size_t i = 0; i < conc.size(); ++i) {
      if (!(conc[i] > 0.0))
        throw std::invalid_argument("dirichlet: nonpositive concentration");
      out[i] = std::max(gamma(conc[i], 1.0), 1e-300);
      total += out[i];
    }
    for (double& v : out) v /= total;
    return out;
  }

  template <typename It>
  void shuffle(It first, It last) {
    std::shuffle(first, last, engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace mlchdp
