#include "chainid/linalg.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <sstream>

#include "chainid/errors.hpp"

namespace chainid {

namespace {

std::string label_list(std::span<const int> labels) {
  std::ostringstream out;
  out << '{';
  for (std::size_t i = 0; i < labels.size(); ++i) out << (i ? "," : "") << labels[i];
  out << '}';
  return out.str();
}

Eigen::MatrixXd select(const Eigen::MatrixXd& m, std::span<const int> rows, std::span<const int> cols) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = m(rows[i], cols[j]);
  }
  return out;
}

// Row indices of `labels` in `sigma`; rejects unknown and repeated labels.
std::vector<int> indices_of(const CovMatrix& sigma, std::span<const int> labels, const char* what) {
  std::vector<int> idx;
  idx.reserve(labels.size());
  std::set<int> seen;
  for (int label : labels) {
    const int i = sigma.index_of(label);
    if (i < 0) throw ArgumentError(std::string(what) + ": label " + std::to_string(label) + " not in matrix");
    if (!seen.insert(label).second) {
      throw ArgumentError(std::string(what) + ": label " + std::to_string(label) + " repeated");
    }
    idx.push_back(i);
  }
  return idx;
}

std::vector<int> complement_indices(int dim, std::span<const int> idx) {
  std::vector<bool> taken(static_cast<std::size_t>(dim), false);
  for (int i : idx) taken[i] = true;
  std::vector<int> rest;
  for (int i = 0; i < dim; ++i) {
    if (!taken[i]) rest.push_back(i);
  }
  return rest;
}

// Schur complement of the `given` rows/cols of m, over the `keep` rows/cols.
Eigen::MatrixXd schur(const Eigen::MatrixXd& m, std::span<const int> keep, std::span<const int> given,
                      const std::string& block_name) {
  Eigen::MatrixXd bb = select(m, keep, keep);
  if (given.empty()) return bb;
  const Eigen::MatrixXd aa = select(m, given, given);
  if (!is_positive_definite(aa)) throw SingularityError("conditioning block " + block_name + " is not positive definite");
  const Eigen::LLT<Eigen::MatrixXd> llt(aa);
  if (llt.info() != Eigen::Success) throw SingularityError("conditioning block " + block_name + " is singular");
  const Eigen::MatrixXd ab = select(m, given, keep);
  Eigen::MatrixXd result = bb - ab.transpose() * llt.solve(ab);
  return 0.5 * (result + result.transpose());
}

// log det of a PSD matrix via pivoted LDL^T; -inf when the matrix is
// numerically singular, i.e. some pivot is at most n * eps times the largest.
// Without the rank cut a round-off pivot on singular input makes det^(1/n)
// visibly positive.
double psd_log_det(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return 0.0;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
  if (ldlt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  const Eigen::VectorXd pivots = ldlt.vectorD();
  const double floor = static_cast<double>(m.rows()) * std::numeric_limits<double>::epsilon() * pivots.maxCoeff();
  double sum = 0.0;
  for (double d : pivots) {
    if (!(d > floor)) return -std::numeric_limits<double>::infinity();
    sum += std::log(d);
  }
  return sum;
}

}  // namespace

CovMatrix::CovMatrix(Eigen::MatrixXd entries) : CovMatrix(entries, {}) {}

CovMatrix::CovMatrix(Eigen::MatrixXd entries, std::vector<int> labels)
    : entries_(std::move(entries)), labels_(std::move(labels)) {
  if (entries_.rows() != entries_.cols()) throw ArgumentError("covariance matrix must be square");
  if (labels_.empty() && entries_.rows() > 0) {
    labels_.resize(static_cast<std::size_t>(entries_.rows()));
    for (int i = 0; i < dim(); ++i) labels_[i] = i;
  }
  if (static_cast<Eigen::Index>(labels_.size()) != entries_.rows()) {
    throw ArgumentError("label count does not match matrix dimension");
  }
  if (std::set<int>(labels_.begin(), labels_.end()).size() != labels_.size()) {
    throw ArgumentError("labels must be unique");
  }
  if (!entries_.allFinite()) throw ArgumentError("covariance matrix has non-finite entries");
  const double scale = std::max(1.0, entries_.cwiseAbs().maxCoeff());
  if ((entries_ - entries_.transpose()).cwiseAbs().maxCoeff() > kSymmetryRelTol * scale) {
    throw ArgumentError("covariance matrix is not symmetric");
  }
}

int CovMatrix::index_of(int label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  return it == labels_.end() ? -1 : static_cast<int>(it - labels_.begin());
}

CovMatrix CovMatrix::restrict_to(std::span<const int> labels) const {
  const auto idx = indices_of(*this, labels, "restrict_to");
  return CovMatrix(select(entries_, idx, idx), std::vector<int>(labels.begin(), labels.end()));
}

bool CovMatrix::is_positive_definite() const { return chainid::is_positive_definite(entries_); }

bool is_positive_definite(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() == 0 || !m.allFinite()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > kSymmetryRelTol * scale) return false;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) return false;
  const double largest = eig.eigenvalues().maxCoeff();
  const double smallest = eig.eigenvalues().minCoeff();
  return largest > 0.0 && smallest > kPdEigenRatio * largest;
}

CovMatrix conditional_cov(const CovMatrix& sigma, std::span<const int> given) {
  const auto given_idx = indices_of(sigma, given, "conditional_cov");
  if (static_cast<int>(given_idx.size()) == sigma.dim() && sigma.dim() > 0) {
    throw ArgumentError("conditional_cov: cannot condition on every label");
  }
  const auto keep_idx = complement_indices(sigma.dim(), given_idx);
  std::vector<int> keep_labels;
  keep_labels.reserve(keep_idx.size());
  for (int i : keep_idx) keep_labels.push_back(sigma.labels()[i]);
  return CovMatrix(schur(sigma.entries(), keep_idx, given_idx, label_list(given)), std::move(keep_labels));
}

double log_det_spd(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return 0.0;
  const Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw SingularityError("Cholesky factorization failed");
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

double log_det(const CovMatrix& sigma) {
  if (sigma.dim() == 0) return 0.0;
  if (!sigma.is_positive_definite()) {
    throw SingularityError("log_det: matrix over " + label_list(sigma.labels()) + " is not positive definite");
  }
  return log_det_spd(sigma.entries());
}

double factorization_check(const CovMatrix& sigma, std::span<const int> split) {
  if (split.empty() || static_cast<int>(split.size()) >= sigma.dim()) {
    throw ArgumentError("factorization_check: split must be a non-empty proper subset");
  }
  const double whole = log_det(sigma);
  const double block = log_det(sigma.restrict_to(split));
  const double rest = log_det(conditional_cov(sigma, split));
  return std::abs(whole - block - rest);
}

std::string to_string(StatisticKind kind) {
  switch (kind) {
    case StatisticKind::determinant: return "determinant";
    case StatisticKind::det_root: return "det_root";
    case StatisticKind::trace: return "trace";
    case StatisticKind::diagonal: return "diagonal";
    case StatisticKind::permanent: return "permanent";
    case StatisticKind::hadamard: return "hadamard";
  }
  return "unknown";
}

StatisticKind statistic_kind_from_string(const std::string& name) {
  for (auto kind : {StatisticKind::determinant, StatisticKind::det_root, StatisticKind::trace, StatisticKind::diagonal,
                    StatisticKind::permanent, StatisticKind::hadamard}) {
    if (to_string(kind) == name) return kind;
  }
  throw ArgumentError("unknown statistic '" + name + "'");
}

double permanent(const Eigen::MatrixXd& m) {
  const auto n = static_cast<int>(m.rows());
  if (m.rows() != m.cols()) throw ArgumentError("permanent: matrix must be square");
  if (n > kPermanentMaxDim) {
    throw CapabilityError("permanent: dimension " + std::to_string(n) + " exceeds limit " +
                          std::to_string(kPermanentMaxDim));
  }
  if (n == 0) return 1.0;
  // perm(A) = (-1)^n sum_{S != {}} (-1)^|S| prod_i sum_{j in S} a_ij, visiting
  // subsets in Gray-code order so each step adds or removes one column.
  Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(n);
  double total = 0.0;
  std::uint32_t gray = 0;
  const std::uint32_t count = 1u << n;
  for (std::uint32_t k = 1; k < count; ++k) {
    const int column = std::countr_zero(k);
    const std::uint32_t bit = 1u << column;
    if (gray & bit) row_sums -= m.col(column);
    else row_sums += m.col(column);
    gray ^= bit;
    const double term = row_sums.prod();
    total += (std::popcount(gray) % 2 == 0) ? term : -term;
  }
  return (n % 2 == 0) ? total : -total;
}

double evaluate_statistic(const SuperAdditiveStatistic& stat, const Eigen::MatrixXd& m) {
  if (m.rows() == 0 || m.rows() != m.cols()) throw ArgumentError("evaluate_statistic: need a non-empty square matrix");
  switch (stat.kind) {
    case StatisticKind::determinant: return std::exp(psd_log_det(m));
    case StatisticKind::det_root: return std::exp(psd_log_det(m) / static_cast<double>(m.rows()));
    case StatisticKind::trace: return m.trace();
    case StatisticKind::diagonal:
      if (stat.diagonal_index < 0 || stat.diagonal_index >= m.rows()) {
        throw ArgumentError("diagonal statistic index " + std::to_string(stat.diagonal_index) +
                            " out of range for dimension " + std::to_string(m.rows()));
      }
      return m(stat.diagonal_index, stat.diagonal_index);
    case StatisticKind::permanent: return permanent(m);
    case StatisticKind::hadamard: return m.diagonal().prod();
  }
  throw ArgumentError("unknown statistic kind");
}

double evaluate_statistic(const SuperAdditiveStatistic& stat, const CovMatrix& sigma) {
  return evaluate_statistic(stat, sigma.entries());
}

double conditional_covariance_law_residual(const CovMatrix& sigma, std::span<const int> x, std::span<const int> y,
                                           std::span<const int> z) {
  std::vector<int> all(x.begin(), x.end());
  all.insert(all.end(), y.begin(), y.end());
  all.insert(all.end(), z.begin(), z.end());
  indices_of(sigma, all, "conditional_covariance_law");  // disjointness + membership
  if (x.empty()) throw ArgumentError("conditional_covariance_law: X must be non-empty");

  const auto ix = indices_of(sigma, x, "X");
  const auto iy = indices_of(sigma, y, "Y");
  const auto iz = indices_of(sigma, z, "Z");
  std::vector<int> iyz = iy;
  iyz.insert(iyz.end(), iz.begin(), iz.end());
  const auto& m = sigma.entries();

  const Eigen::MatrixXd lhs = schur(m, ix, iy, label_list(y));
  std::vector<int> yz(y.begin(), y.end());
  yz.insert(yz.end(), z.begin(), z.end());
  const Eigen::MatrixXd within = schur(m, ix, iyz, label_list(yz));

  // E[X | Y, Z] = B_Y Y + B_Z Z; conditional on Y only the Z part varies.
  Eigen::MatrixXd between = Eigen::MatrixXd::Zero(lhs.rows(), lhs.cols());
  if (!iz.empty()) {
    const Eigen::MatrixXd s_yz = select(m, iyz, iyz);
    const Eigen::MatrixXd s_x_yz = select(m, ix, iyz);
    const Eigen::LLT<Eigen::MatrixXd> llt(s_yz);
    if (llt.info() != Eigen::Success) throw SingularityError("conditioning block (Y,Z) is singular");
    const Eigen::MatrixXd coef = llt.solve(s_x_yz.transpose()).transpose();
    const Eigen::MatrixXd coef_z = coef.rightCols(static_cast<Eigen::Index>(iz.size()));
    const Eigen::MatrixXd cov_z_given_y = schur(m, iz, iy, label_list(y));
    between = coef_z * cov_z_given_y * coef_z.transpose();
  }
  return (lhs - within - between).cwiseAbs().maxCoeff();
}

}  // namespace chainid
