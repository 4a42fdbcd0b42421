#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace mlchdp {

inline constexpr double kLog2Pi = 1.8378770664093453;

inline double log_normal_pdf(double x, double mean, double var) {
  double dx = x - mean;
  return -0.5 * (kLog2Pi + std::log(var) + dx * dx / var);
}

// Student-t with nu d.o.f., location loc, squared scale scale2.
inline double log_student_t_pdf(double x, double nu, double loc, double scale2) {
  double dx = x - loc;
  return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
         0.5 * std::log(nu * M_PI * scale2) -
         0.5 * (nu + 1.0) * std::log1p(dx * dx / (nu * scale2));
}

inline double log_sum_exp(const std::vector<double>& v) {
  double m = v[0];
  for (double x : v) m = std::max(m, x);
  if (std::isinf(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

inline double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("trapezoid: bad grid");
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i)
    s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return s;
}

// Compensated accumulation; long add/remove chains must not erode the
// centered second moments (see SuffStats).
inline void kahan_add(double& sum, double& comp, double value) {
  double y = value - comp;
  double t = sum + y;
  comp = (t - sum) - y;
  sum = t;
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double variance_of(const std::vector<double>& v) {
  double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace mlchdp
