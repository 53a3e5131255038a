#include "chainid/learning.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <memory>
#include <numeric>
#include <set>

#include "chainid/errors.hpp"

namespace chainid {

namespace {

// Cholesky of the principal submatrix of `m` on `idx` (in that order), writing
// the running log det after each pivot.
void prefix_log_dets(const Eigen::MatrixXd& m, std::span<const int> idx, std::span<double> out) {
  const auto k = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd l(k, k);
  double running = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = j; i < k; ++i) {
      double s = m(idx[i], idx[j]);
      for (Eigen::Index p = 0; p < j; ++p) s -= l(i, p) * l(j, p);
      if (i == j) {
        if (!(s > 0.0)) throw SingularityError("log-det oracle: submatrix is not positive definite");
        l(j, j) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
    running += 2.0 * std::log(l(j, j));
    out[static_cast<std::size_t>(j)] = running;
  }
}

void check_partition(const CovMatrix& sigma, const std::vector<VertexSet>& components) {
  std::set<int> seen;
  std::size_t total = 0;
  for (const auto& c : components) {
    if (c.empty()) throw ArgumentError("components must be non-empty");
    for (int v : c) {
      if (sigma.index_of(v) < 0) throw ArgumentError("component vertex " + std::to_string(v) + " not in covariance");
      if (!seen.insert(v).second) throw ArgumentError("vertex " + std::to_string(v) + " in two components");
      ++total;
    }
  }
  if (total != static_cast<std::size_t>(sigma.dim())) throw ArgumentError("components do not cover every vertex");
}

// Inverse of a PD block via Cholesky; throws SingularityError naming `what`.
Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m, const std::string& what) {
  if (m.rows() == 0) return m;
  if (!is_positive_definite(m)) throw SingularityError(what + " is not positive definite");
  const Eigen::LLT<Eigen::MatrixXd> llt(m);
  return llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
}

// Partial correlation of (i, j) from a precision matrix.
double partial_correlation(const Eigen::MatrixXd& precision, Eigen::Index i, Eigen::Index j) {
  return -precision(i, j) / std::sqrt(precision(i, i) * precision(j, j));
}

// Two-sided Fisher-z test of a partial correlation with `conditioning` variables.
bool fisher_z_significant(double r, int n_samples, int conditioning, double alpha) {
  const int dof = n_samples - conditioning - 3;
  if (dof <= 0) return false;
  r = std::clamp(r, -1.0 + 1e-15, 1.0 - 1e-15);
  const double z = std::atanh(r) * std::sqrt(static_cast<double>(dof));
  const double critical = boost::math::quantile(boost::math::normal(), 1.0 - alpha / 2.0);
  return std::abs(z) > critical;
}

}  // namespace

SubmodularOracle log_det_oracle(const Eigen::MatrixXd& sigma) {
  SubmodularOracle oracle;
  oracle.ground_size = static_cast<int>(sigma.rows());
  auto shared = std::make_shared<const Eigen::MatrixXd>(sigma);
  oracle.eval = [shared](std::span<const int> s) {
    if (s.empty()) return 0.0;
    std::vector<double> values(s.size());
    prefix_log_dets(*shared, s, values);
    return values.back();
  };
  oracle.eval_prefixes = [shared](std::span<const int> order, std::span<double> values) {
    prefix_log_dets(*shared, order, values);
  };
  return oracle;
}

LearnResult learn_order_known(const CovMatrix& sigma, const std::vector<VertexSet>& components,
                              const SuperAdditiveStatistic& stat) {
  check_partition(sigma, components);
  LearnResult result;
  result.partition = components;
  std::vector<bool> used(components.size(), false);
  std::vector<int> chosen_vertices;
  for (std::size_t step = 0; step < components.size(); ++step) {
    const CovMatrix residual = conditional_cov(sigma, chosen_vertices);
    std::vector<std::pair<int, double>> candidates;
    int best = -1;
    double best_value = 0.0;
    for (std::size_t c = 0; c < components.size(); ++c) {
      if (used[c]) continue;
      const double value = evaluate_statistic(stat, residual.restrict_to(components[c]).entries());
      candidates.emplace_back(static_cast<int>(c), value);
      if (best < 0 || value < best_value - kStepTieTol * std::max(std::abs(value), std::abs(best_value))) {
        best = static_cast<int>(c);
        best_value = value;
      }
    }
    used[best] = true;
    result.order.sequence.push_back(best);
    result.step_values.push_back(best_value);
    result.step_candidates.push_back(std::move(candidates));
    chosen_vertices.insert(chosen_vertices.end(), components[best].begin(), components[best].end());
  }
  return result;
}

LearnResult learn_unknown(const CovMatrix& sigma, SfmMethod method, const MinNormOptions& options) {
  if (sigma.dim() == 0) throw ArgumentError("empty covariance matrix");
  LearnResult result;
  std::vector<int> chosen;
  int step = 0;
  while (static_cast<int>(chosen.size()) < sigma.dim()) {
    const CovMatrix residual = conditional_cov(sigma, chosen);
    SubmodularOracle oracle = log_det_oracle(residual.entries());
    oracle.ground_set = residual.labels();
    SfmResult found;
    try {
      found = min_nonempty(oracle, method, options);
    } catch (const ConvergenceError& e) {
      throw ConvergenceError("step " + std::to_string(step) + ": " + e.what(), e.residual_gap());
    }
    VertexSet component;
    for (int pos : found.minimizer) component.push_back(residual.labels()[pos]);
    std::sort(component.begin(), component.end());
    result.order.sequence.push_back(static_cast<int>(result.partition.size()));
    result.partition.push_back(component);
    result.step_values.push_back(found.value);
    chosen.insert(chosen.end(), component.begin(), component.end());
    ++step;
  }
  return result;
}

CovMatrix empirical_covariance(const Dataset& data) {
  if (data.values.rows() < 2) throw DataError("need at least two samples to estimate a covariance");
  const Eigen::MatrixXd centered = data.values.rowwise() - data.values.colwise().mean();
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(data.values.rows() - 1);
  cov = 0.5 * (cov + cov.transpose()).eval();
  return CovMatrix(std::move(cov));
}

namespace {

CovMatrix checked_empirical(const Dataset& data) {
  if (data.values.rows() <= data.values.cols()) {
    throw DataError("need more samples than variables (" + std::to_string(data.values.rows()) + " <= " +
                    std::to_string(data.values.cols()) + ")");
  }
  CovMatrix cov = empirical_covariance(data);
  if (!cov.is_positive_definite()) {
    throw DataError("empirical covariance is not positive definite; more samples are needed");
  }
  return cov;
}

}  // namespace

LearnResult learn_order_known_from_data(const Dataset& data, const std::vector<VertexSet>& components,
                                        const SuperAdditiveStatistic& stat) {
  LearnResult result = learn_order_known(checked_empirical(data), components, stat);
  result.mode = "empirical";
  return result;
}

LearnResult learn_unknown_from_data(const Dataset& data, SfmMethod method, const MinNormOptions& options) {
  LearnResult result = learn_unknown(checked_empirical(data), method, options);
  result.mode = "empirical";
  return result;
}

ChainGraph recover_edges(const CovMatrix& sigma, const std::vector<VertexSet>& partition,
                         const TopologicalOrder& order, double alpha, int n_samples) {
  const int n = sigma.dim();
  for (int v = 0; v < n; ++v) {
    if (sigma.index_of(v) < 0) throw ArgumentError("edge recovery needs covariance labels 0..n-1");
  }
  check_partition(sigma, partition);
  if (order.sequence.size() != partition.size()) throw ArgumentError("order does not index the partition");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("alpha must lie in (0, 1)");
  const bool population = n_samples <= 0;

  std::vector<VertexPair> directed;
  std::vector<VertexPair> undirected;
  std::vector<int> earlier;
  for (int c : order.sequence) {
    const VertexSet& tau = partition.at(static_cast<std::size_t>(c));
    if (!earlier.empty()) {
      const Eigen::MatrixXd earlier_inverse =
          population ? spd_inverse(sigma.restrict_to(earlier).entries(), "earlier-vertex covariance")
                     : Eigen::MatrixXd();
      for (int u : tau) {
        if (population) {
          Eigen::VectorXd cross(static_cast<Eigen::Index>(earlier.size()));
          for (std::size_t i = 0; i < earlier.size(); ++i) {
            cross(static_cast<Eigen::Index>(i)) = sigma.entries()(sigma.index_of(earlier[i]), sigma.index_of(u));
          }
          const Eigen::VectorXd beta = earlier_inverse * cross;
          for (std::size_t i = 0; i < earlier.size(); ++i) {
            if (std::abs(beta(static_cast<Eigen::Index>(i))) > kPopulationEdgeTol) directed.emplace_back(earlier[i], u);
          }
        } else {
          std::vector<int> block = earlier;
          block.push_back(u);
          const Eigen::MatrixXd k = spd_inverse(sigma.restrict_to(block).entries(), "regression covariance");
          const auto last = static_cast<Eigen::Index>(earlier.size());
          for (std::size_t i = 0; i < earlier.size(); ++i) {
            const double r = partial_correlation(k, static_cast<Eigen::Index>(i), last);
            if (fisher_z_significant(r, n_samples, static_cast<int>(earlier.size()) - 1, alpha)) {
              directed.emplace_back(earlier[i], u);
            }
          }
        }
      }
    }
    if (tau.size() > 1) {
      const CovMatrix residual = conditional_cov(sigma.restrict_to([&] {
        std::vector<int> block = earlier;
        block.insert(block.end(), tau.begin(), tau.end());
        return block;
      }()), earlier);
      const Eigen::MatrixXd k = spd_inverse(residual.entries(), "component residual covariance");
      for (std::size_t i = 0; i < tau.size(); ++i) {
        for (std::size_t j = i + 1; j < tau.size(); ++j) {
          const double r =
              partial_correlation(k, static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
          const bool keep = population ? std::abs(r) > kPopulationEdgeTol
                                       : fisher_z_significant(r, n_samples,
                                                              static_cast<int>(earlier.size() + tau.size()) - 2, alpha);
          if (keep) undirected.emplace_back(tau[i], tau[j]);
        }
      }
    }
    earlier.insert(earlier.end(), tau.begin(), tau.end());
  }
  return ChainGraph::from_edges(n, std::move(directed), std::move(undirected));
}

void attach_edges(LearnResult& result, const CovMatrix& sigma, double alpha, int n_samples) {
  result.recovered_graph = recover_edges(sigma, result.partition, result.order, alpha, n_samples);
}

}  // namespace chainid
