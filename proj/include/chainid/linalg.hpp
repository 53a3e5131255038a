#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

namespace chainid {

inline constexpr double kSymmetryRelTol = 1e-10;
inline constexpr double kPdEigenRatio = 1e-10;
inline constexpr int kPermanentMaxDim = 14;

// Dense symmetric covariance matrix whose rows/columns are named by vertex
// labels. Construction checks shape, label uniqueness and symmetry (relative
// tolerance kSymmetryRelTol); positive definiteness is checked by the
// operations that need it.
class CovMatrix {
 public:
  CovMatrix() = default;
  explicit CovMatrix(Eigen::MatrixXd entries);
  CovMatrix(Eigen::MatrixXd entries, std::vector<int> labels);

  int dim() const { return static_cast<int>(entries_.rows()); }
  const Eigen::MatrixXd& entries() const { return entries_; }
  const std::vector<int>& labels() const { return labels_; }

  // Row index of `label`, or -1.
  int index_of(int label) const;

  // Principal submatrix over `labels` (in the given order).
  CovMatrix restrict_to(std::span<const int> labels) const;

  bool is_positive_definite() const;

 private:
  Eigen::MatrixXd entries_;
  std::vector<int> labels_;
};

// The library PD test: symmetric, finite, and smallest eigenvalue greater
// than kPdEigenRatio times the largest (and the largest is positive).
bool is_positive_definite(const Eigen::MatrixXd& m);

// Schur complement Sigma_BB - Sigma_BA Sigma_AA^-1 Sigma_AB of the `given`
// block, labelled by the remaining labels in their original order. An empty
// `given` returns sigma unchanged.
CovMatrix conditional_cov(const CovMatrix& sigma, std::span<const int> given);

// Natural-log determinant as the sum of log Cholesky pivots, after the PD test.
double log_det(const CovMatrix& sigma);

// Cholesky-only log determinant for hot loops; throws SingularityError when
// the factorization fails. The 0x0 matrix has log det 0.
double log_det_spd(const Eigen::MatrixXd& m);

// |log det Sigma - log det Sigma_AA - log det(Schur complement of A)|.
double factorization_check(const CovMatrix& sigma, std::span<const int> split);

enum class StatisticKind { determinant, det_root, trace, diagonal, permanent, hadamard };

// One member of the positive super-additive family. `diagonal_index` is only
// used by StatisticKind::diagonal.
struct SuperAdditiveStatistic {
  StatisticKind kind = StatisticKind::determinant;
  int diagonal_index = 0;
};

std::string to_string(StatisticKind kind);
StatisticKind statistic_kind_from_string(const std::string& name);

double evaluate_statistic(const SuperAdditiveStatistic& stat, const Eigen::MatrixXd& m);
double evaluate_statistic(const SuperAdditiveStatistic& stat, const CovMatrix& sigma);

// Ryser's inclusion-exclusion formula with Gray-code updates, O(2^n n).
// Throws CapabilityError above kPermanentMaxDim.
double permanent(const Eigen::MatrixXd& m);

// Both sides of the law of conditional covariance for a Gaussian with
// covariance `sigma`:
//   Cov(X|Y) = E_Z[Cov(X|Y,Z) | Y] + Cov_Z(E[X|Y,Z] | Y)
// computed in closed form; returns the max-abs entrywise residual.
double conditional_covariance_law_residual(const CovMatrix& sigma, std::span<const int> x, std::span<const int> y,
                                           std::span<const int> z);

}  // namespace chainid
