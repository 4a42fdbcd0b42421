#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mlchdp/rng.hpp"

namespace mlchdp {

// Weights of a parent DP over the currently represented atoms. w has one
// entry per represented atom plus a trailing remainder w.back() for the
// unrepresented mass ("beta_new"). The trailing empty atom at each level of
// the sampler carries exactly that remainder weight.
struct ParentWeights {
  std::vector<double> w{1.0};

  int atoms() const { return static_cast<int>(w.size()) - 1; }
  double operator[](int k) const { return w[static_cast<std::size_t>(k)]; }
  double remainder() const { return w.back(); }

  double sum() const {
    double s = 0.0;
    for (double v : w) s += v;
    return s;
  }

  // A new atom is created out of the unrepresented mass: the remainder is
  // stick-broken into a weight for the new atom and a fresh remainder.
  void split_remainder(double frac) {
    double r = w.back();
    w.back() = r * frac;
    w.push_back(r * (1.0 - frac));
  }

  // Removing a (now empty) atom returns its mass to the remainder.
  void fold_into_remainder(int k) {
    w.back() += w[static_cast<std::size_t>(k)];
    w.erase(w.begin() + k);
  }
};

// Count matrix n[l][k] with maintained row sums. Rows are parent-level atoms
// (including the trailing empty one), columns are this level's atoms
// (including the trailing empty one); the trailing row and column stay zero.
struct CountMatrix {
  std::vector<std::vector<long long>> cell;
  std::vector<long long> row_total;

  void init(int rows, int cols) {
    cell.assign(rows, std::vector<long long>(cols, 0));
    row_total.assign(rows, 0);
  }

  int rows() const { return static_cast<int>(cell.size()); }
  int cols() const { return cell.empty() ? 0 : static_cast<int>(cell[0].size()); }

  long long at(int l, int k) const { return cell[l][k]; }
  const std::vector<long long>& row(int l) const { return cell[l]; }

  void add(int l, int k, long long delta) {
    cell[l][k] += delta;
    row_total[l] += delta;
  }

  long long col_sum(int k) const {
    long long s = 0;
    for (const auto& r : cell) s += r[k];
    return s;
  }

  long long total() const {
    long long s = 0;
    for (long long t : row_total) s += t;
    return s;
  }

  void add_row() {
    cell.emplace_back(cols(), 0);
    row_total.push_back(0);
  }

  void add_col() {
    for (auto& r : cell) r.push_back(0);
  }

  void remove_row(int l) {
    cell.erase(cell.begin() + l);
    row_total.erase(row_total.begin() + l);
  }

  void remove_col(int k) {
    for (std::size_t l = 0; l < cell.size(); ++l) {
      row_total[l] -= cell[l][k];
      cell[l].erase(cell[l].begin() + k);
    }
  }
};

using TableCounts = CountMatrix;

// Predictive probability of sub-atom k within a level atom whose counts are
// (n_lk, n_ldot), with the atom's DP weights integrated out.
inline double collapsed_weight(long long n_lk, long long n_ldot, double alpha,
                               double beta_k) {
  return (static_cast<double>(n_lk) + alpha * beta_k) /
         (static_cast<double>(n_ldot) + alpha);
}

// Number of tables serving dish k in one restaurant with n customers and
// base mass alpha_beta, by sequential table-opening. Exact in distribution
// (Antoniak) and O(n) with no precomputed tables.
inline long long sample_table_count(long long n, double alpha_beta, Rng& rng) {
  if (n <= 0) return 0;
  long long m = 1;
  for (long long i = 2; i <= n; ++i)
    if (rng.bernoulli(alpha_beta / (alpha_beta + static_cast<double>(i - 1)))) ++m;
  return m;
}

inline TableCounts sample_table_counts(const CountMatrix& n, double alpha,
                                       const ParentWeights& beta, Rng& rng) {
  TableCounts m;
  m.init(n.rows(), n.cols());
  for (int l = 0; l < n.rows(); ++l)
    for (int k = 0; k < n.cols(); ++k)
      if (n.at(l, k) > 0) {
        double bk = k < beta.atoms() ? beta[k] : beta.remainder();
        m.add(l, k, sample_table_count(n.at(l, k), alpha * bk, rng));
      }
  return m;
}

// beta | m ~ Dirichlet(m_.1, ..., m_.K, gamma); the last component is the
// remainder mass for unrepresented atoms. Atoms whose table column sums are
// zero (emptied this sweep, removed at end of step) get weight 0 and their
// mass stays in the remainder.
inline ParentWeights sample_parent_weights(const TableCounts& m, double gamma,
                                           Rng& rng) {
  int K = m.cols() - 1;  // trailing column belongs to the empty atom
  if (K < 0) K = 0;
  ParentWeights out;
  if (K == 0) {
    out.w = {1.0};
    return out;
  }
  std::vector<long long> cs(K);
  std::vector<double> conc;
  long long total = 0;
  for (int k = 0; k < K; ++k) {
    cs[k] = m.col_sum(k);
    total += cs[k];
    if (cs[k] > 0) conc.push_back(static_cast<double>(cs[k]));
  }
  if (total == 0)
    throw std::runtime_error("sample_parent_weights: all-zero table counts");
  conc.push_back(gamma);
  std::vector<double> draw = rng.dirichlet(conc);
  out.w.assign(K + 1, 0.0);
  std::size_t next = 0;
  for (int k = 0; k < K; ++k)
    if (cs[k] > 0) out.w[k] = draw[next++];
  out.w[K] = draw.back();
  return out;
}

// Log probability of a group's sub-atom count vector under a candidate level
// atom with existing counts base_counts (row of the level-below CountMatrix),
// items placed sequentially in canonical (ascending sub-atom) order. The
// value depends on the counts only, not the order.
inline double group_marginal_loglik(const std::vector<long long>& group_counts,
                                    double alpha, const ParentWeights& beta,
                                    const std::vector<long long>& base_counts,
                                    long long base_total) {
  double ll = 0.0;
  long long placed = 0;
  for (std::size_t k = 0; k < group_counts.size(); ++k) {
    long long c = group_counts[k];
    if (c == 0) continue;
    double bk = static_cast<int>(k) < beta.atoms() ? beta[static_cast<int>(k)]
                                                   : beta.remainder();
    double base = static_cast<double>(k < base_counts.size() ? base_counts[k] : 0);
    for (long long r = 0; r < c; ++r) {
      ll += std::log(base + static_cast<double>(r) + alpha * bk) -
            std::log(static_cast<double>(base_total + placed) + alpha);
      ++placed;
    }
  }
  return ll;
}

struct GammaPrior {
  double a = 1.0;  // shape
  double b = 1.0;  // rate
};

// Auxiliary-variable resampling of a DP concentration with Gamma(a, b)
// prior, given the total table count and the group sizes it was generated
// from (Escobar & West for one group, Teh et al. for several).
inline double sample_concentration(double current, long long table_total,
                                   const std::vector<long long>& group_sizes,
                                   double a, double b, Rng& rng) {
  if (!(current > 0.0))
    throw std::invalid_argument("sample_concentration: nonpositive concentration");
  double shape = a + static_cast<double>(table_total);
  double rate = b;
  for (long long nj : group_sizes) {
    if (nj <= 0) continue;
    double w = rng.beta(current + 1.0, static_cast<double>(nj));
    rate -= std::log(w);
    double nd = static_cast<double>(nj);
    if (rng.bernoulli(nd / (nd + current))) shape -= 1.0;
  }
  if (shape <= 0.0) shape = a;
  double draw = rng.gamma(shape, 1.0 / rate);
  return std::max(draw, 1e-12);
}

}  // namespace mlchdp
