#include "chainid/sem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "chainid/errors.hpp"
#include "chainid/rng.hpp"

namespace chainid {

namespace {

std::vector<VertexSet> interval_partition(int n_vars, int n_components) {
  if (n_vars < 1) throw ArgumentError("n_vars must be at least 1");
  if (n_components < 1 || n_components > n_vars) {
    throw ArgumentError("n_components must lie in [1, n_vars], got " + std::to_string(n_components));
  }
  const int width = n_vars / n_components;
  std::vector<VertexSet> parts(static_cast<std::size_t>(n_components));
  for (int v = 0; v < n_vars; ++v) parts[std::min(v / width, n_components - 1)].push_back(v);
  return parts;
}

// Adds edges chaining the connected pieces of `members` (by smallest vertex).
void bridge_pieces(const VertexSet& members, std::vector<VertexPair>& undirected) {
  std::map<int, int> parent;
  for (int v : members) parent[v] = v;
  auto find = [&](int v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (const auto& [u, v] : undirected) {
    if (parent.contains(u) && parent.contains(v)) {
      const int a = find(u);
      const int b = find(v);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  }
  std::vector<int> roots;
  for (int v : members) {
    if (find(v) == v) roots.push_back(v);
  }
  for (std::size_t i = 1; i < roots.size(); ++i) undirected.emplace_back(roots[i - 1], roots[i]);
}

std::vector<VertexPair> local_edges(const ChainGraph& graph, int component) {
  const auto& members = graph.component(component);
  std::vector<VertexPair> edges;
  for (const auto& [u, v] : graph.undirected_edges()) {
    if (graph.component_of(u) != component) continue;
    const auto iu = std::lower_bound(members.begin(), members.end(), u) - members.begin();
    const auto iv = std::lower_bound(members.begin(), members.end(), v) - members.begin();
    edges.emplace_back(static_cast<int>(iu), static_cast<int>(iv));
  }
  return edges;
}

// Cov(X_tau | X_PA(tau)) for every component, from the population covariance.
std::vector<Eigen::MatrixXd> residual_covariances(const AmpSem& sem, const CovMatrix& sigma) {
  std::vector<Eigen::MatrixXd> blocks;
  for (int c = 0; c < sem.graph.n_components(); ++c) {
    const auto parents = parents_of(sem.graph, c);
    std::vector<int> support = parents;
    const auto& members = sem.graph.component(c);
    support.insert(support.end(), members.begin(), members.end());
    const CovMatrix local = sigma.restrict_to(support);
    blocks.push_back(conditional_cov(local, parents).entries());
  }
  return blocks;
}

// Smallest slack of "value[a] <= value[b]" over the component edges a -> b,
// i.e. whether sorting by value is compatible with some topological order.
double monotone_slack(const ChainGraph& graph, const std::vector<double>& values) {
  double slack = std::numeric_limits<double>::infinity();
  for (const auto& [a, b] : graph.component_edges()) slack = std::min(slack, values[b] - values[a]);
  return slack;
}

Eigen::MatrixXd equicorrelation(int size, double rho, double log_det_target) {
  const double m = size;
  const double base_log_det = (m - 1.0) * std::log1p(-rho) + std::log1p((m - 1.0) * rho);
  const double scale = std::exp((log_det_target - base_log_det) / m);
  Eigen::MatrixXd block = Eigen::MatrixXd::Constant(size, size, rho);
  block.diagonal().setOnes();
  return scale * block;
}

}  // namespace

ValidationResult validate(const AmpSem& sem) {
  if (auto g = validate(sem.graph); !g) return g;
  const int n = sem.graph.n_vertices();
  if (sem.weights.rows() != n || sem.weights.cols() != n) return {"weights must be n x n"};
  for (int u = 0; u < n; ++u) {
    for (int v = 0; v < n; ++v) {
      if (sem.weights(u, v) != 0.0 && !sem.graph.has_directed(v, u)) {
        return {"weight (" + std::to_string(u) + "," + std::to_string(v) + ") has no directed edge " +
                std::to_string(v) + "->" + std::to_string(u)};
      }
    }
  }
  if (static_cast<int>(sem.noise_covs.size()) != sem.graph.n_components()) {
    return {"one noise covariance per component required"};
  }
  for (int c = 0; c < sem.graph.n_components(); ++c) {
    const auto& block = sem.noise_covs[c];
    const auto& members = sem.graph.component(c);
    const auto size = static_cast<Eigen::Index>(members.size());
    if (block.rows() != size || block.cols() != size) {
      return {"noise covariance " + std::to_string(c) + " has the wrong size"};
    }
    if (!is_positive_definite(block)) return {"noise covariance " + std::to_string(c) + " is not positive definite"};
    const Eigen::MatrixXd precision = block.inverse();
    for (int i = 0; i < size; ++i) {
      for (int j = i + 1; j < size; ++j) {
        if (std::abs(precision(i, j)) > 1e-8 && !sem.graph.has_undirected(members[i], members[j])) {
          return {"noise precision of component " + std::to_string(c) + " is non-zero off the undirected edges (" +
                  std::to_string(members[i]) + "," + std::to_string(members[j]) + ")"};
        }
      }
    }
  }
  return {};
}

ChainGraph generate_chain_graph(int n_vars, int n_components, double expected_neighbors, std::uint64_t seed) {
  auto parts = interval_partition(n_vars, n_components);
  if (expected_neighbors < 0.0) throw ArgumentError("expected_neighbors must be non-negative");
  Rng rng(seed);
  const double p = n_vars > 1 ? std::min(1.0, expected_neighbors / (n_vars - 1)) : 0.0;
  std::vector<int> interval(static_cast<std::size_t>(n_vars));
  for (int c = 0; c < n_components; ++c) {
    for (int v : parts[c]) interval[v] = c;
  }
  std::vector<VertexPair> directed;
  std::vector<VertexPair> undirected;
  for (int i = 0; i < n_vars; ++i) {
    for (int j = i + 1; j < n_vars; ++j) {
      if (!rng.bernoulli(p)) continue;
      if (interval[i] == interval[j]) undirected.emplace_back(i, j);
      else directed.emplace_back(i, j);
    }
  }
  for (const auto& members : parts) bridge_pieces(members, undirected);
  return ChainGraph::checked(n_vars, std::move(parts), std::move(directed), std::move(undirected));
}

Eigen::MatrixXd generate_weights(const ChainGraph& graph, std::uint64_t seed) {
  Rng rng(seed);
  const int n = graph.n_vertices();
  Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [from, to] : graph.directed_edges()) {
    const double magnitude = rng.uniform(0.5, 1.5);
    weights(to, from) = rng.bernoulli(0.5) ? magnitude : -magnitude;
  }
  return weights;
}

Eigen::MatrixXd generate_noise_cov(int component_size, double target_log_det, std::span<const VertexPair> edges,
                                   std::uint64_t seed) {
  if (component_size < 1) throw ArgumentError("component_size must be at least 1");
  Rng rng(seed);
  const int m = component_size;
  // Diagonally dominant precision supported on the edges.
  Eigen::MatrixXd precision = Eigen::MatrixXd::Zero(m, m);
  for (const auto& [u, v] : edges) {
    if (u < 0 || v < 0 || u >= m || v >= m || u == v) throw ArgumentError("noise edge out of range");
    const double magnitude = rng.uniform(0.5, 1.0);
    const double value = rng.bernoulli(0.5) ? magnitude : -magnitude;
    precision(u, v) = value;
    precision(v, u) = value;
  }
  for (int i = 0; i < m; ++i) {
    precision(i, i) = precision.row(i).cwiseAbs().sum() + rng.uniform(0.5, 1.5);
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(precision);
  Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(m, m));
  cov = 0.5 * (cov + cov.transpose());
  const double current = log_det_spd(cov);
  cov *= std::exp((target_log_det - current) / m);
  return cov;
}

AmpSem generate_sem(int n_vars, int n_components, std::uint64_t seed, const SemOptions& options) {
  Rng streams(seed);
  AmpSem sem;
  sem.graph = generate_chain_graph(n_vars, n_components, options.expected_neighbors, streams.next_u64());
  sem.weights = generate_weights(sem.graph, streams.next_u64());
  for (int c = 0; c < sem.graph.n_components(); ++c) {
    const auto size = static_cast<int>(sem.graph.component(c).size());
    const auto edges = local_edges(sem.graph, c);
    sem.noise_covs.push_back(generate_noise_cov(size, options.target_log_det, edges, streams.next_u64()));
  }
  return sem;
}

CovMatrix population_covariance(const AmpSem& sem) {
  const int n = sem.graph.n_vertices();
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(n, n);
  for (int c = 0; c < sem.graph.n_components(); ++c) {
    const auto& members = sem.graph.component(c);
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (std::size_t j = 0; j < members.size(); ++j) omega(members[i], members[j]) = sem.noise_covs[c](i, j);
    }
  }
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - sem.weights;
  const Eigen::MatrixXd mixing = system.partialPivLu().inverse();
  Eigen::MatrixXd sigma = mixing * omega * mixing.transpose();
  sigma = 0.5 * (sigma + sigma.transpose());
  return CovMatrix(std::move(sigma));
}

Dataset sample(const AmpSem& sem, int n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw ArgumentError("n_samples must be at least 1");
  const int n = sem.graph.n_vertices();
  Rng rng(seed);
  Dataset data{n_samples, n, Eigen::MatrixXd::Zero(n_samples, n), seed};
  for (int c : topological_order(sem.graph).sequence) {
    const auto& members = sem.graph.component(c);
    const auto m = static_cast<Eigen::Index>(members.size());
    const Eigen::LLT<Eigen::MatrixXd> llt(sem.noise_covs[c]);
    if (llt.info() != Eigen::Success) throw SingularityError("noise covariance " + std::to_string(c) + " is not PD");
    const Eigen::MatrixXd lower = llt.matrixL();
    Eigen::MatrixXd z(n_samples, m);
    for (int r = 0; r < n_samples; ++r) {
      for (Eigen::Index j = 0; j < m; ++j) z(r, j) = rng.normal();
    }
    const Eigen::MatrixXd noise = z * lower.transpose();
    for (Eigen::Index j = 0; j < m; ++j) {
      const int v = members[j];
      data.values.col(v) = data.values * sem.weights.row(v).transpose() + noise.col(j);
    }
  }
  return data;
}

std::vector<ConditionReport> check_unknown_conditions(const AmpSem& sem) {
  const int t = sem.graph.n_components();
  for (int c = 0; c < t; ++c) {
    if (static_cast<int>(sem.graph.component(c).size()) > kMaxEnumeratedComponent) {
      throw CapabilityError("component " + std::to_string(c) + " exceeds the enumeration bound of " +
                            std::to_string(kMaxEnumeratedComponent));
    }
  }
  const CovMatrix sigma = population_covariance(sem);
  const auto blocks = residual_covariances(sem, sigma);

  ConditionReport subsets{"(i) proper subsets: log det Cov(X_S | X_tau\\S, X_PA) < 0", true, true,
                          std::numeric_limits<double>::infinity(), ""};
  ConditionReport whole{"(ii) components: log det Cov(X_tau | X_PA) > 0", true, false,
                        std::numeric_limits<double>::infinity(), ""};
  std::vector<double> log_dets(static_cast<std::size_t>(t));
  for (int c = 0; c < t; ++c) {
    const CovMatrix block(blocks[c]);
    log_dets[c] = log_det(block);
    if (log_dets[c] < whole.slack) {
      whole.slack = log_dets[c];
      whole.detail = "tightest component " + std::to_string(c);
    }
    const int m = block.dim();
    for (std::uint32_t mask = 1; mask + 1 < (1u << m); ++mask) {
      std::vector<int> rest;
      for (int i = 0; i < m; ++i) {
        if (!(mask >> i & 1u)) rest.push_back(i);
      }
      const double value = log_det(conditional_cov(block, rest));
      subsets.vacuous = false;
      if (-value < subsets.slack) {
        subsets.slack = -value;
        subsets.detail = "tightest component " + std::to_string(c) + " subset mask " + std::to_string(mask);
      }
    }
  }
  subsets.holds = subsets.vacuous || subsets.slack > 0.0;
  whole.holds = t == 0 || whole.slack > 0.0;
  if (subsets.vacuous) subsets.detail = "all components are singletons";

  ConditionReport monotone{"(iii) log det Cov(X_tau | X_PA) non-decreasing along a topological order", true, false,
                           monotone_slack(sem.graph, log_dets), ""};
  monotone.vacuous = sem.graph.component_edges().empty();
  monotone.holds = monotone.slack >= -kConditionTol;
  if (monotone.vacuous) monotone.detail = "no directed edges between components";
  return {subsets, whole, monotone};
}

ConditionReport check_known_condition(const AmpSem& sem, const SuperAdditiveStatistic& stat) {
  const CovMatrix sigma = population_covariance(sem);
  const auto blocks = residual_covariances(sem, sigma);
  std::vector<double> values;
  double scale = 1.0;
  for (const auto& block : blocks) {
    values.push_back(evaluate_statistic(stat, block));
    scale = std::max(scale, std::abs(values.back()));
  }
  ConditionReport report{to_string(stat.kind) + "(Cov(X_tau | X_PA)) non-decreasing along a topological order", true,
                         false, monotone_slack(sem.graph, values), ""};
  report.vacuous = sem.graph.component_edges().empty();
  report.holds = report.slack >= -kConditionTol * scale;
  if (report.vacuous) report.detail = "no directed edges between components";
  return report;
}

AmpSem generate_certified_unknown_instance(int n_vars, int n_components, std::uint64_t seed, int max_tries,
                                           const CertifiedOptions& options) {
  const auto parts = interval_partition(n_vars, n_components);
  for (const auto& p : parts) {
    if (static_cast<int>(p.size()) > kMaxEnumeratedComponent) {
      throw CapabilityError("component size " + std::to_string(p.size()) + " exceeds the enumeration bound");
    }
  }
  if (max_tries < 1) throw ArgumentError("max_tries must be at least 1");
  if (!(options.rho_min > 0.0 && options.rho_min <= options.rho_max && options.rho_max < 1.0)) {
    throw ArgumentError("rho range must satisfy 0 < rho_min <= rho_max < 1");
  }

  Rng streams(seed);
  std::map<std::string, int> failures;
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    const ChainGraph base =
        generate_chain_graph(n_vars, n_components, options.expected_neighbors, streams.next_u64());
    std::vector<VertexPair> cliques;
    for (const auto& members : base.components()) {
      for (std::size_t i = 0; i < members.size(); ++i) {
        for (std::size_t j = i + 1; j < members.size(); ++j) cliques.emplace_back(members[i], members[j]);
      }
    }
    AmpSem sem;
    sem.graph = ChainGraph::checked(n_vars, base.components(), base.directed_edges(), std::move(cliques));
    sem.weights = generate_weights(sem.graph, streams.next_u64());
    Rng noise_rng(streams.next_u64());
    for (const auto& members : sem.graph.components()) {
      const double rho = noise_rng.uniform(options.rho_min, options.rho_max);
      sem.noise_covs.push_back(equicorrelation(static_cast<int>(members.size()), rho, options.margin));
    }

    const CovMatrix sigma = population_covariance(sem);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma.entries(), Eigen::EigenvaluesOnly);
    const double condition = eig.eigenvalues().maxCoeff() / eig.eigenvalues().minCoeff();
    if (!(condition > 0.0) || condition > options.max_condition_number) {
      ++failures["conditioning"];
      continue;
    }
    const auto reports = check_unknown_conditions(sem);
    const bool subsets_ok = reports[0].vacuous || reports[0].slack >= options.margin - kConditionTol;
    const bool whole_ok = reports[1].slack >= options.margin - kConditionTol;
    const bool monotone_ok = reports[2].holds;
    if (!subsets_ok) ++failures["(i)"];
    if (!whole_ok) ++failures["(ii)"];
    if (!monotone_ok) ++failures["(iii)"];
    if (subsets_ok && whole_ok && monotone_ok) return sem;
  }
  std::string worst = "none";
  int worst_count = -1;
  for (const auto& [name, count] : failures) {
    if (count > worst_count) {
      worst = name;
      worst_count = count;
    }
  }
  throw GenerationError("no certified instance after " + std::to_string(max_tries) + " tries; most frequent failure: " +
                            worst,
                        worst);
}

AmpSem generate_certified_known_instance(int n_vars, int n_components, std::uint64_t seed, int max_tries,
                                         const SuperAdditiveStatistic& stat, const SemOptions& options) {
  if (max_tries < 1) throw ArgumentError("max_tries must be at least 1");
  Rng streams(seed);
  int failures = 0;
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    AmpSem sem = generate_sem(n_vars, n_components, streams.next_u64(), options);
    if (check_known_condition(sem, stat).holds) return sem;
    ++failures;
  }
  throw GenerationError("no certified known-components instance after " + std::to_string(failures) + " tries",
                        "known-monotone");
}

double conditional_covariance_law_check(const AmpSem& sem, std::span<const int> x, std::span<const int> y,
                                        std::span<const int> z) {
  return conditional_covariance_law_residual(population_covariance(sem), x, y, z);
}

}  // namespace chainid
