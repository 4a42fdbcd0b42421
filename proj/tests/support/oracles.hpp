#pragma once

// Test-only oracles, independent of the library implementation paths they
// check: brute-force quadrature of the conjugate predictive, explicit pair
// counting for Rand's C, set-partition enumeration, and small-sample
// statistical tests.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace oracle {

// ---------------------------------------------------------------------------
// Gauss-Legendre panel quadrature (8-point)
// ---------------------------------------------------------------------------

inline const double kGlNodes[8] = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
    -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
    0.7966664774136267,  0.9602898564975363};
inline const double kGlWeights[8] = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
    0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
    0.2223810344533745, 0.1012285362903763};

inline double gl_integrate(const std::function<double(double)>& f, double lo,
                           double hi, int panels) {
  double total = 0.0;
  double h = (hi - lo) / panels;
  for (int p = 0; p < panels; ++p) {
    double a = lo + p * h;
    double mid = a + 0.5 * h;
    double half = 0.5 * h;
    for (int i = 0; i < 8; ++i)
      total += kGlWeights[i] * half * f(mid + half * kGlNodes[i]);
  }
  return total;
}

// ---------------------------------------------------------------------------
// 2-D numerical integration of the Normal - N-Inv-chi^2 predictive:
//   p(x) = int int N(x | mu, s2) N(mu | mu_n, s2/kappa_n)
//                 ScaledInvChi2(s2 | nu_n, sigma2_n) dmu ds2
// in transformed coordinates u = log s2, v = (mu - mu_n) sqrt(kappa_n / s2).
// ---------------------------------------------------------------------------

struct NixParams {
  double kappa_n, mu_n, nu_n, sigma2_n;
};

inline double quad_predictive_pdf(const NixParams& p, double x) {
  double a = 0.5 * p.nu_n;
  double b = 0.5 * p.nu_n * p.sigma2_n;
  double log_const = a * std::log(b) - std::lgamma(a);
  double dx = x - p.mu_n;
  double u_lo = std::log(p.nu_n * p.sigma2_n) - 14.0;
  double u_hi = std::log(p.nu_n * p.sigma2_n + dx * dx) + 40.0;
  int u_panels = static_cast<int>((u_hi - u_lo) / 0.33) + 1;
  double v_half = 12.0;
  int v_panels = 96;

  auto inner = [&](double u) {
    double s2 = std::exp(u);
    double sd_ratio = std::sqrt(s2 / p.kappa_n);
    auto f = [&](double v) {
      double mu = p.mu_n + sd_ratio * v;
      double d = x - mu;
      double log_lik = -0.5 * (std::log(2.0 * M_PI * s2) + d * d / s2);
      double log_phi = -0.5 * (std::log(2.0 * M_PI) + v * v);
      double log_six_u = log_const - a * u - b * std::exp(-u);
      double lg = log_lik + log_phi + log_six_u;
      return lg < -700.0 ? 0.0 : std::exp(lg);
    };
    return gl_integrate(f, -v_half, v_half, v_panels);
  };
  return gl_integrate(inner, u_lo, u_hi, u_panels);
}

// ---------------------------------------------------------------------------
// Student-t log pdf (for closed-form odds oracles in the separation tests)
// ---------------------------------------------------------------------------

inline double t_logpdf(double x, double nu, double loc, double scale2) {
  double dx = x - loc;
  return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
         0.5 * std::log(nu * M_PI * scale2) -
         0.5 * (nu + 1.0) * std::log1p(dx * dx / (nu * scale2));
}

// ---------------------------------------------------------------------------
// Set partitions of {0..n-1} as restricted-growth label vectors
// ---------------------------------------------------------------------------

inline void partitions_rec(int n, int i, int maxl, std::vector<int>& cur,
                           std::vector<std::vector<int>>& out) {
  if (i == n) {
    out.push_back(cur);
    return;
  }
  for (int l = 0; l <= maxl + 1; ++l) {
    cur[i] = l;
    partitions_rec(n, i + 1, std::max(maxl, l), cur, out);
  }
}

inline std::vector<std::vector<int>> all_partitions(int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(n, 0);
  partitions_rec(n, 1, 0, cur, out);
  return out;
}

// Explicit O(N^2) pair-agreement count.
inline double brute_force_rand(const std::vector<int>& a, const std::vector<int>& b) {
  int n = static_cast<int>(a.size());
  if (n == 1) return 1.0;
  long long agree = 0, pairs = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      bool ca = a[i] == a[j];
      bool cb = b[i] == b[j];
      if (ca == cb) ++agree;
      ++pairs;
    }
  return static_cast<double>(agree) / static_cast<double>(pairs);
}

// Canonical key of a partition (first-occurrence relabeling).
inline std::string partition_key(const std::vector<int>& labels) {
  std::map<int, int> remap;
  std::string key;
  for (int l : labels) {
    auto [it, fresh] = remap.emplace(l, static_cast<int>(remap.size()));
    key += static_cast<char>('a' + it->second);
  }
  return key;
}

// ---------------------------------------------------------------------------
// Regularized incomplete gamma P(a, x) (series + continued fraction)
// ---------------------------------------------------------------------------

inline double gammp(double a, double x) {
  if (x < 0.0 || a <= 0.0) return 0.0;
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
  for (int i = 1; i < 500; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return 1.0 - std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

inline double gamma_cdf(double x, double shape, double rate) {
  return gammp(shape, rate * x);
}

inline double chisq_sf(double x, double dof) {
  return 1.0 - gammp(0.5 * dof, 0.5 * x);
}

// ---------------------------------------------------------------------------
// One-sample Kolmogorov-Smirnov p-value (asymptotic)
// ---------------------------------------------------------------------------

inline double ks_pvalue(std::vector<double> sample,
                        const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    double f = cdf(sample[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double p = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    double term = std::exp(-2.0 * j * j * lambda * lambda);
    p += sign * term;
    sign = -sign;
    if (term < 1e-12) break;
  }
  return std::min(std::max(2.0 * p, 0.0), 1.0);
}

// ---------------------------------------------------------------------------
// Two-sample chi-square over category counts (rare categories pooled)
// ---------------------------------------------------------------------------

inline double chisq_two_sample_pvalue(const std::map<std::string, long long>& c1,
                                      const std::map<std::string, long long>& c2,
                                      double min_expected = 5.0) {
  std::map<std::string, std::pair<long long, long long>> merged;
  for (auto& [k, v] : c1) merged[k].first += v;
  for (auto& [k, v] : c2) merged[k].second += v;
  double n1 = 0.0, n2 = 0.0;
  for (auto& [k, v] : merged) {
    n1 += static_cast<double>(v.first);
    n2 += static_cast<double>(v.second);
  }
  double total = n1 + n2;
  std::vector<std::pair<double, double>> cells;
  double pool1 = 0.0, pool2 = 0.0;
  for (auto& [k, v] : merged) {
    double rowtot = static_cast<double>(v.first + v.second);
    if (rowtot * n1 / total < min_expected || rowtot * n2 / total < min_expected) {
      pool1 += static_cast<double>(v.first);
      pool2 += static_cast<double>(v.second);
    } else {
      cells.push_back({static_cast<double>(v.first), static_cast<double>(v.second)});
    }
  }
  if (pool1 + pool2 > 0.0) cells.push_back({pool1, pool2});
  if (cells.size() < 2) return 1.0;
  double chi2 = 0.0;
  for (auto& [o1, o2] : cells) {
    double rowtot = o1 + o2;
    double e1 = rowtot * n1 / total;
    double e2 = rowtot * n2 / total;
    chi2 += (o1 - e1) * (o1 - e1) / e1 + (o2 - e2) * (o2 - e2) / e2;
  }
  return chisq_sf(chi2, static_cast<double>(cells.size() - 1));
}

// ---------------------------------------------------------------------------
// Monte Carlo summaries
// ---------------------------------------------------------------------------

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double sd(const std::vector<double>& v) {
  double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

inline double mc_se(const std::vector<double>& v) {
  return sd(v) / std::sqrt(static_cast<double>(v.size()));
}

// Standard error of the mean of an autocorrelated series via batch means.
inline double batch_means_se(const std::vector<double>& v, int batches = 100) {
  int per = static_cast<int>(v.size()) / batches;
  std::vector<double> bm;
  for (int b = 0; b < batches; ++b) {
    double s = 0.0;
    for (int i = 0; i < per; ++i) s += v[b * per + i];
    bm.push_back(s / per);
  }
  return sd(bm) / std::sqrt(static_cast<double>(batches));
}

}  // namespace oracle
