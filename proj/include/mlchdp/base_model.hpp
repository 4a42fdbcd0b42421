#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mlchdp/math_util.hpp"
#include "mlchdp/rng.hpp"

namespace mlchdp {

// Per-dimension Normal-scaled-inverse-chi^2 prior on (mu, sigma^2) of a
// diagonal-covariance Normal. kappa0 and nu0 are shared across dimensions,
// mu0 and sigma0sq are per-dimension.
struct BasePrior {
  double kappa0 = 1.0;
  double nu0 = 3.0;
  std::vector<double> mu0;
  std::vector<double> sigma0sq;

  int dim() const { return static_cast<int>(mu0.size()); }

  void validate() const {
    if (!(kappa0 > 0.0) || !(nu0 > 0.0))
      throw std::invalid_argument("BasePrior: kappa0 and nu0 must be > 0");
    if (mu0.empty() || mu0.size() != sigma0sq.size())
      throw std::invalid_argument("BasePrior: mu0/sigma0sq size mismatch");
    for (double s : sigma0sq)
      if (!(s > 0.0)) throw std::invalid_argument("BasePrior: sigma0sq must be > 0");
  }

  static BasePrior isotropic(int d, double kappa0, double mu0, double nu0,
                             double sigma0sq) {
    BasePrior p;
    p.kappa0 = kappa0;
    p.nu0 = nu0;
    p.mu0.assign(d, mu0);
    p.sigma0sq.assign(d, sigma0sq);
    return p;
  }
};

// Data-scaled weakly informative default: empirical mean and per-dimension
// variance of the pooled observations, kappa0 = 1, nu0 = 3.
inline BasePrior make_default_prior(const std::vector<std::vector<double>>& obs) {
  if (obs.empty()) throw std::invalid_argument("make_default_prior: no data");
  int d = static_cast<int>(obs.front().size());
  BasePrior p;
  p.kappa0 = 1.0;
  p.nu0 = 3.0;
  p.mu0.assign(d, 0.0);
  p.sigma0sq.assign(d, 0.0);
  double n = static_cast<double>(obs.size());
  for (const auto& x : obs)
    for (int i = 0; i < d; ++i) p.mu0[i] += x[i];
  for (int i = 0; i < d; ++i) p.mu0[i] /= n;
  for (const auto& x : obs)
    for (int i = 0; i < d; ++i) {
      double dx = x[i] - p.mu0[i];
      p.sigma0sq[i] += dx * dx;
    }
  for (int i = 0; i < d; ++i) {
    p.sigma0sq[i] = obs.size() > 1 ? p.sigma0sq[i] / (n - 1.0) : 1.0;
    if (p.sigma0sq[i] <= 0.0) p.sigma0sq[i] = 1.0;
  }
  return p;
}

// Running sufficient statistics (count, sum, sum of squares) per dimension,
// with Kahan compensation on both accumulators.
struct SuffStats {
  long long count = 0;
  std::vector<double> sum, sum_c, sumsq, sumsq_c;

  SuffStats() = default;
  explicit SuffStats(int d)
      : sum(d, 0.0), sum_c(d, 0.0), sumsq(d, 0.0), sumsq_c(d, 0.0) {}

  int dim() const { return static_cast<int>(sum.size()); }

  void add(const std::vector<double>& x) {
    check_dim(x);
    ++count;
    for (std::size_t i = 0; i < x.size(); ++i) {
      kahan_add(sum[i], sum_c[i], x[i]);
      kahan_add(sumsq[i], sumsq_c[i], x[i] * x[i]);
    }
  }

  void remove(const std::vector<double>& x) {
    if (count <= 0) throw std::runtime_error("SuffStats: remove from empty stats");
    check_dim(x);
    --count;
    if (count == 0) {
      std::fill(sum.begin(), sum.end(), 0.0);
      std::fill(sum_c.begin(), sum_c.end(), 0.0);
      std::fill(sumsq.begin(), sumsq.end(), 0.0);
      std::fill(sumsq_c.begin(), sumsq_c.end(), 0.0);
      return;
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      kahan_add(sum[i], sum_c[i], -x[i]);
      kahan_add(sumsq[i], sumsq_c[i], -x[i] * x[i]);
    }
  }

 private:
  void check_dim(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != dim())
      throw std::invalid_argument("SuffStats: dimension mismatch");
  }
};

// Sampled parameters of one Gaussian atom (used in posterior records,
// synthetic truth, and evaluation as well).
struct AtomParams {
  std::vector<double> mu;
  std::vector<double> sigma2;
};

struct BaseAtom {
  std::vector<double> mu;
  std::vector<double> sigma2;
  SuffStats stats;
};

// Conjugate posterior parameters for one dimension.
struct PosteriorParams {
  double kappa_n, mu_n, nu_n, sigma2_n;
};

inline PosteriorParams posterior_params(const BasePrior& prior,
                                        const SuffStats& stats, int i) {
  PosteriorParams p;
  double n = static_cast<double>(stats.count);
  p.kappa_n = prior.kappa0 + n;
  p.nu_n = prior.nu0 + n;
  double ss = prior.nu0 * prior.sigma0sq[i];
  double sum = stats.count > 0 ? stats.sum[i] : 0.0;
  p.mu_n = (prior.kappa0 * prior.mu0[i] + sum) / p.kappa_n;
  if (stats.count > 0) {
    double centered = stats.sumsq[i] - sum * sum / n;
    if (centered < 0.0) centered = 0.0;
    double xbar = sum / n;
    double dm = xbar - prior.mu0[i];
    ss += centered + prior.kappa0 * n / p.kappa_n * dm * dm;
  }
  p.sigma2_n = ss / p.nu_n;
  return p;
}

// Draw (mu, sigma^2) from the conjugate posterior (the prior when stats are
// empty): sigma^2 ~ scaled-inv-chi^2(nu_n, sigma2_n), mu | sigma^2 ~
// N(mu_n, sigma^2 / kappa_n), independently per dimension.
inline std::pair<std::vector<double>, std::vector<double>> sample_atom_params(
    const BasePrior& prior, const SuffStats& stats, Rng& rng) {
  int d = prior.dim();
  std::vector<double> mu(d), s2(d);
  for (int i = 0; i < d; ++i) {
    PosteriorParams p = posterior_params(prior, stats, i);
    double c = rng.chisq(p.nu_n);
    if (c <= 0.0) c = 1e-300;
    s2[i] = p.nu_n * p.sigma2_n / c;
    mu[i] = rng.normal(p.mu_n, std::sqrt(s2[i] / p.kappa_n));
  }
  return {mu, s2};
}

inline double loglik(const std::vector<double>& mu,
                     const std::vector<double>& sigma2,
                     const std::vector<double>& x) {
  if (x.size() != mu.size())
    throw std::invalid_argument("loglik: dimension mismatch");
  double ll = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    ll += log_normal_pdf(x[i], mu[i], sigma2[i]);
  return ll;
}

inline double loglik(const BaseAtom& atom, const std::vector<double>& x) {
  return loglik(atom.mu, atom.sigma2, x);
}

// lgamma values on the half-integer lattice (nu0 + n) / 2, n = 0, 1, ...
// The predictive is evaluated once per (observation, atom) pair in the
// sampler's inner loop; this cache removes the two lgamma calls.
struct PredictiveCache {
  double nu0 = -1.0;
  std::vector<double> lg;

  void reset(double nu0_in) {
    nu0 = nu0_in;
    lg.clear();
  }

  double lgamma_half(long long n) {
    if (n >= static_cast<long long>(lg.size())) {
      std::size_t old = lg.size();
      lg.resize(static_cast<std::size_t>(n) + 64);
      for (std::size_t i = old; i < lg.size(); ++i)
        lg[i] = std::lgamma(0.5 * (nu0 + static_cast<double>(i)));
    }
    return lg[static_cast<std::size_t>(n)];
  }
};

// Rao-Blackwellized posterior predictive: per dimension a Student-t with
// nu_n d.o.f., location mu_n, squared scale sigma2_n * (1 + 1/kappa_n).
inline double posterior_predictive_loglik(const BasePrior& prior,
                                          const SuffStats& stats,
                                          const std::vector<double>& x,
                                          PredictiveCache* cache = nullptr) {
  if (static_cast<int>(x.size()) != prior.dim())
    throw std::invalid_argument("posterior_predictive_loglik: dimension mismatch");
  double ll = 0.0;
  if (cache != nullptr && cache->nu0 != prior.nu0) cache->reset(prior.nu0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    PosteriorParams p = posterior_params(prior, stats, static_cast<int>(i));
    double scale2 = p.sigma2_n * (1.0 + 1.0 / p.kappa_n);
    if (cache != nullptr) {
      double dx = x[i] - p.mu_n;
      ll += cache->lgamma_half(stats.count + 1) - cache->lgamma_half(stats.count) -
            0.5 * std::log(p.nu_n * M_PI * scale2) -
            0.5 * (p.nu_n + 1.0) * std::log1p(dx * dx / (p.nu_n * scale2));
    } else {
      ll += log_student_t_pdf(x[i], p.nu_n, p.mu_n, scale2);
    }
  }
  return ll;
}

}  // namespace mlchdp
