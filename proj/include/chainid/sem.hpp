#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "chainid/graph.hpp"
#include "chainid/linalg.hpp"

namespace chainid {

// Linear-Gaussian AMP model X_tau = M_tau X_PA(tau) + Z_tau.
// weights(u, v) != 0 only for a directed edge v -> u; noise_covs[c] is the
// covariance of Z over component c's (sorted) vertices.
struct AmpSem {
  ChainGraph graph;
  Eigen::MatrixXd weights;
  std::vector<Eigen::MatrixXd> noise_covs;
};

struct Dataset {
  int n_samples = 0;
  int n_vars = 0;
  Eigen::MatrixXd values;  // n_samples x n_vars
  std::uint64_t seed = 0;
};

// Empty result when every AmpSem invariant holds (graph validity, weight
// support, PD noise blocks Markov w.r.t. the undirected edges).
ValidationResult validate(const AmpSem& sem);

// Random chain graph: [0, n_vars) split into n_components contiguous
// intervals (remainder to the last), Erdos-Renyi edges with the given expected
// neighbor count, undirected inside an interval and directed low -> high
// between intervals. Disconnected intervals are bridged by a path through
// their pieces.
ChainGraph generate_chain_graph(int n_vars, int n_components, double expected_neighbors, std::uint64_t seed);

// Weights on directed edges drawn from U(-1.5,-0.5] u U[0.5,1.5).
Eigen::MatrixXd generate_weights(const ChainGraph& graph, std::uint64_t seed);

// Random PD matrix whose precision is supported on `edges` (local indices),
// scaled so that log det equals target_log_det.
Eigen::MatrixXd generate_noise_cov(int component_size, double target_log_det, std::span<const VertexPair> edges,
                                   std::uint64_t seed);

struct SemOptions {
  double expected_neighbors = 2.0;
  double target_log_det = 0.0;  // det(Sigma_tau) = 1
};

// Full synthetic-model protocol: graph, weights and one noise block per component.
AmpSem generate_sem(int n_vars, int n_components, std::uint64_t seed, const SemOptions& options = {});

// Sigma = (I - M)^-1 Omega (I - M)^-T with Omega block-diagonal in the noise blocks.
CovMatrix population_covariance(const AmpSem& sem);

// Ancestral sampling along a topological order of the components.
Dataset sample(const AmpSem& sem, int n_samples, std::uint64_t seed);

// Outcome of one identifiability condition. `slack` is the distance to the
// violation boundary (positive = satisfied); log-det units for the
// unknown-structure conditions, statistic units for the known-components one.
struct ConditionReport {
  std::string name;
  bool holds = false;
  bool vacuous = false;
  double slack = 0.0;
  std::string detail;
};

inline constexpr int kMaxEnumeratedComponent = 10;
inline constexpr double kConditionTol = 1e-9;

// Conditions (i)-(iii) for recovering the partition and order, checked by
// exhaustive enumeration on the population covariance:
//   (i)   log det Cov(X_S | X_{tau\S}, X_PA(tau)) < 0 for non-empty proper S
//   (ii)  log det Cov(X_tau | X_PA(tau)) > 0
//   (iii) those log dets are non-decreasing along some topological order
// Throws CapabilityError for components larger than kMaxEnumeratedComponent.
std::vector<ConditionReport> check_unknown_conditions(const AmpSem& sem);

// The known-components condition: stat(Cov(X_tau | X_PA(tau))) is
// non-decreasing along some topological order.
ConditionReport check_known_condition(const AmpSem& sem, const SuperAdditiveStatistic& stat);

struct CertifiedOptions {
  double margin = 0.2;  // log-space distance of conditions (i) and (ii) from 0
  double rho_min = 0.9;
  double rho_max = 0.99;
  double expected_neighbors = 2.0;
  double max_condition_number = 1e10;
};

// Rejection-samples a model with clique components and equicorrelated noise
// s * (rho J + (1 - rho) I), each block scaled to log det = margin, until the
// enumeration check confirms (i)-(iii) with the requested margin.
AmpSem generate_certified_unknown_instance(int n_vars, int n_components, std::uint64_t seed, int max_tries,
                                           const CertifiedOptions& options = {});

// Model from generate_sem whose known-components condition is verified for `stat`.
AmpSem generate_certified_known_instance(int n_vars, int n_components, std::uint64_t seed, int max_tries,
                                         const SuperAdditiveStatistic& stat = {}, const SemOptions& options = {});

// Law of conditional covariance residual on the model's population covariance.
double conditional_covariance_law_check(const AmpSem& sem, std::span<const int> x, std::span<const int> y,
                                        std::span<const int> z);

}  // namespace chainid
