#pragma once

// Independent reference implementations used as test oracles. None of these
// share code with the library paths they check.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "chainid/graph.hpp"

namespace testsupport {

inline Eigen::MatrixXd random_pd(int n, std::mt19937_64& gen, double ridge = 0.1) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = normal(gen);
  }
  Eigen::MatrixXd m = a * a.transpose() + ridge * Eigen::MatrixXd::Identity(n, n);
  return 0.5 * (m + m.transpose());
}

// Rank-deficient PSD matrix (rank r < n when r < n).
inline Eigen::MatrixXd random_psd(int n, int rank, std::mt19937_64& gen) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd a(n, rank);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < rank; ++j) a(i, j) = normal(gen);
  }
  Eigen::MatrixXd m = a * a.transpose();
  return 0.5 * (m + m.transpose());
}

// Gaussian elimination with partial pivoting, no library factorization.
inline double elimination_det(Eigen::MatrixXd m) {
  const int n = static_cast<int>(m.rows());
  double det = 1.0;
  for (int c = 0; c < n; ++c) {
    int pivot = c;
    for (int r = c + 1; r < n; ++r) {
      if (std::abs(m(r, c)) > std::abs(m(pivot, c))) pivot = r;
    }
    if (m(pivot, c) == 0.0) return 0.0;
    if (pivot != c) {
      m.row(pivot).swap(m.row(c));
      det = -det;
    }
    det *= m(c, c);
    for (int r = c + 1; r < n; ++r) {
      const double f = m(r, c) / m(c, c);
      for (int k = c; k < n; ++k) m(r, k) -= f * m(c, k);
    }
  }
  return det;
}

// Laplace expansion along the first row (dim <= 8).
inline double cofactor_det(const Eigen::MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  if (n == 0) return 1.0;
  if (n == 1) return m(0, 0);
  double det = 0.0;
  for (int j = 0; j < n; ++j) {
    Eigen::MatrixXd minor(n - 1, n - 1);
    for (int r = 1; r < n; ++r) {
      for (int c = 0, cc = 0; c < n; ++c) {
        if (c != j) minor(r - 1, cc++) = m(r, c);
      }
    }
    det += (j % 2 ? -1.0 : 1.0) * m(0, j) * cofactor_det(minor);
  }
  return det;
}

// Sum over all permutations.
inline double permutation_permanent(const Eigen::MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  std::vector<int> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  double total = 0.0;
  do {
    double prod = 1.0;
    for (int i = 0; i < n; ++i) prod *= m(i, p[i]);
    total += prod;
  } while (std::next_permutation(p.begin(), p.end()));
  return total;
}

inline Eigen::MatrixXd select(const Eigen::MatrixXd& m, const std::vector<int>& rows, const std::vector<int>& cols) {
  Eigen::MatrixXd out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = m(rows[i], cols[j]);
  }
  return out;
}

inline std::vector<int> complement(int n, const std::vector<int>& s) {
  std::vector<int> out;
  for (int i = 0; i < n; ++i) {
    if (std::find(s.begin(), s.end(), i) == s.end()) out.push_back(i);
  }
  return out;
}

// Cov(X_B | X_A) as the inverse of the B block of the precision matrix.
inline Eigen::MatrixXd precision_conditional(const Eigen::MatrixXd& sigma, const std::vector<int>& given) {
  const auto rest = complement(static_cast<int>(sigma.rows()), given);
  const Eigen::MatrixXd precision = sigma.inverse();
  return select(precision, rest, rest).inverse();
}

// Edge status per ordered vertex pair compared cell by cell.
inline int matrix_shd(const chainid::ChainGraph& a, const chainid::ChainGraph& b) {
  const int n = a.n_vertices();
  auto status = [n](const chainid::ChainGraph& g) {
    std::vector<std::vector<int>> s(n, std::vector<int>(n, 0));
    for (const auto& [u, v] : g.directed_edges()) s[u][v] = 1;
    for (const auto& [u, v] : g.undirected_edges()) s[u][v] = s[v][u] = 2;
    return s;
  };
  const auto sa = status(a);
  const auto sb = status(b);
  int count = 0;
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      if (sa[u][v] != sb[u][v] || sa[v][u] != sb[v][u]) ++count;
    }
  }
  return count;
}

// All topological orders by filtering every permutation of the components.
inline std::vector<std::vector<int>> permutation_orders(const chainid::ChainGraph& g) {
  std::vector<int> p(static_cast<std::size_t>(g.n_components()));
  std::iota(p.begin(), p.end(), 0);
  std::vector<std::vector<int>> out;
  do {
    std::vector<int> pos(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) pos[p[i]] = static_cast<int>(i);
    bool ok = true;
    for (const auto& [u, v] : g.directed_edges()) {
      if (pos[g.component_of(u)] >= pos[g.component_of(v)]) ok = false;
    }
    if (ok) out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

// Subsets of {0..k-1} as sorted vectors, by mask.
inline std::vector<int> mask_to_set(unsigned mask, int k) {
  std::vector<int> s;
  for (int i = 0; i < k; ++i) {
    if (mask >> i & 1u) s.push_back(i);
  }
  return s;
}

// The three-variable example with components {0,1} -> {2}: Cov(X_01) has det
// sigma2 = 2 and both conditional variances 0.5, and X_2 = X_0 + Z with
// Var Z = sigma2.
inline Eigen::MatrixXd three_variable_example() {
  const double s = 4.0;
  const double r = std::sqrt(14.0);
  Eigen::MatrixXd m(3, 3);
  m << s, r, s,
       r, s, r,
       s, r, s + 2.0;
  return m;
}

}  // namespace testsupport
