#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "chainid/graph.hpp"
#include "chainid/linalg.hpp"
#include "chainid/sem.hpp"
#include "chainid/sfm.hpp"

namespace chainid {

struct LearnResult {
  TopologicalOrder order;            // indexes `partition`
  std::vector<VertexSet> partition;  // vertex labels
  std::vector<double> step_values;   // winning statistic / log det per step
  // Known-components runs only: (component index, statistic) for every
  // candidate still remaining at each step.
  std::vector<std::vector<std::pair<int, double>>> step_candidates;
  std::optional<ChainGraph> recovered_graph;
  std::string mode = "population";
};

// Relative tolerance under which two step statistics count as tied.
inline constexpr double kStepTieTol = 1e-9;
inline constexpr double kPopulationEdgeTol = 1e-8;
inline constexpr double kDefaultAlpha = 0.001;

// Order recovery with known components: at each step pick the remaining
// component whose conditional covariance given the chosen vertices has the
// smallest statistic (ties go to the lowest component index).
LearnResult learn_order_known(const CovMatrix& sigma, const std::vector<VertexSet>& components,
                              const SuperAdditiveStatistic& stat = {});

// Structure recovery without components: each step takes the non-empty set of
// remaining vertices minimizing log det of its conditional covariance.
LearnResult learn_unknown(const CovMatrix& sigma, SfmMethod method = SfmMethod::brute_force,
                          const MinNormOptions& options = {});

// Log-det set function over `sigma`'s rows; eval_prefixes shares one
// Cholesky factorization per chain.
SubmodularOracle log_det_oracle(const Eigen::MatrixXd& sigma);

// Mean-centered sample covariance with 1/(n-1) normalization.
CovMatrix empirical_covariance(const Dataset& data);

// Throws DataError when n_samples <= n_vars or the estimate is not PD.
LearnResult learn_order_known_from_data(const Dataset& data, const std::vector<VertexSet>& components,
                                        const SuperAdditiveStatistic& stat = {});
LearnResult learn_unknown_from_data(const Dataset& data, SfmMethod method = SfmMethod::brute_force,
                                    const MinNormOptions& options = {});

// Parent and undirected-edge selection given a partition and its order.
// n_samples == 0 selects population mode (|coefficient| or |partial
// correlation| above kPopulationEdgeTol); otherwise a two-sided Fisher-z test
// at level alpha. Labels of sigma must be 0..n-1.
ChainGraph recover_edges(const CovMatrix& sigma, const std::vector<VertexSet>& partition,
                         const TopologicalOrder& order, double alpha = kDefaultAlpha, int n_samples = 0);

// Fills result.recovered_graph via recover_edges.
void attach_edges(LearnResult& result, const CovMatrix& sigma, double alpha = kDefaultAlpha, int n_samples = 0);

}  // namespace chainid
