#include "chainid/sfm.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>

#include "chainid/errors.hpp"

namespace chainid {

namespace {

void require_eval(const SubmodularOracle& oracle) {
  if (!oracle.eval) throw ArgumentError("submodular oracle has no eval function");
  if (oracle.ground_size < 0) throw ArgumentError("negative ground set size");
}

std::vector<double> prefix_values(const SubmodularOracle& oracle, std::span<const int> order) {
  std::vector<double> values(order.size());
  if (oracle.eval_prefixes) {
    oracle.eval_prefixes(order, values);
    return values;
  }
  std::vector<int> prefix;
  for (std::size_t i = 0; i < order.size(); ++i) {
    prefix.insert(std::upper_bound(prefix.begin(), prefix.end(), order[i]), order[i]);
    values[i] = oracle.eval(prefix);
  }
  return values;
}

// Active set of Wolfe's method: base-polytope vertices with convex weights and
// an upper-triangular R with R^T R = 11^T + P^T P.
class ActiveSet {
 public:
  std::vector<Eigen::VectorXd> points;
  std::vector<double> weights;

  bool contains(const Eigen::VectorXd& q, double scale) const {
    return std::any_of(points.begin(), points.end(),
                       [&](const Eigen::VectorXd& p) { return (p - q).lpNorm<Eigen::Infinity>() <= 1e-12 * scale; });
  }

  // Appends q with a triangular-factor column update. Falls back to a full
  // refactorization when the update is ill-conditioned; returns false when q
  // is affinely dependent on the current points.
  bool add(const Eigen::VectorXd& q) {
    const auto n = static_cast<Eigen::Index>(points.size());
    Eigen::VectorXd cross(n);
    for (Eigen::Index i = 0; i < n; ++i) cross(i) = 1.0 + points[i].dot(q);
    const double self = 1.0 + q.squaredNorm();
    Eigen::VectorXd column = cross;
    if (n > 0) factor_.topLeftCorner(n, n).transpose().triangularView<Eigen::Lower>().solveInPlace(column);
    const double pivot_sq = self - column.squaredNorm();
    points.push_back(q);
    weights.push_back(0.0);
    if (pivot_sq > 1e-12 * self) {
      Eigen::MatrixXd grown = Eigen::MatrixXd::Zero(n + 1, n + 1);
      grown.topLeftCorner(n, n) = factor_.topLeftCorner(n, n);
      grown.topRightCorner(n, 1) = column;
      grown(n, n) = std::sqrt(pivot_sq);
      factor_ = std::move(grown);
      return true;
    }
    if (rebuild()) return true;
    points.pop_back();
    weights.pop_back();
    rebuild();
    return false;
  }

  bool rebuild() {
    const auto n = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd gram(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) gram(i, j) = gram(j, i) = 1.0 + points[i].dot(points[j]);
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) return false;
    const Eigen::MatrixXd lower = llt.matrixL();
    if (lower.diagonal().minCoeff() <= 1e-9 * std::sqrt(gram.diagonal().maxCoeff())) return false;
    factor_ = lower.transpose();
    return true;
  }

  // Coefficients of the minimum-norm point of the affine hull (sum to 1).
  Eigen::VectorXd affine_minimizer() const {
    const auto n = static_cast<Eigen::Index>(points.size());
    Eigen::VectorXd a = Eigen::VectorXd::Ones(n);
    const auto upper = factor_.topLeftCorner(n, n);
    upper.transpose().triangularView<Eigen::Lower>().solveInPlace(a);
    upper.triangularView<Eigen::Upper>().solveInPlace(a);
    return a / a.sum();
  }

  void drop_zero_weights() {
    std::size_t out = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (weights[i] > 1e-14) {
        points[out] = std::move(points[i]);
        weights[out] = weights[i];
        ++out;
      }
    }
    points.resize(out);
    weights.resize(out);
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (double& w : weights) w /= total;
    rebuild();
  }

  Eigen::VectorXd combination() const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(points.front().size());
    for (std::size_t i = 0; i < points.size(); ++i) x += weights[i] * points[i];
    return x;
  }

 private:
  Eigen::MatrixXd factor_;
};

std::vector<int> argsort(const Eigen::VectorXd& x) {
  std::vector<int> order(static_cast<std::size_t>(x.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return x(a) < x(b); });
  return order;
}

}  // namespace

std::string to_string(SfmMethod method) {
  return method == SfmMethod::brute_force ? "brute_force" : "min_norm_point";
}

SfmMethod sfm_method_from_string(const std::string& name) {
  if (name == "brute" || name == "brute_force") return SfmMethod::brute_force;
  if (name == "mnp" || name == "min_norm_point") return SfmMethod::min_norm_point;
  throw ArgumentError("unknown SFM method '" + name + "'");
}

bool better_candidate(double value_a, std::span<const int> set_a, double value_b, std::span<const int> set_b) {
  const double tie = 1e-12 * std::max({1.0, std::abs(value_a), std::abs(value_b)});
  if (value_a < value_b - tie) return true;
  if (value_b < value_a - tie) return false;
  if (set_a.size() != set_b.size()) return set_a.size() < set_b.size();
  return std::lexicographical_compare(set_a.begin(), set_a.end(), set_b.begin(), set_b.end());
}

SubmodularOracle normalized(const SubmodularOracle& oracle) {
  require_eval(oracle);
  const double base = oracle.eval(std::span<const int>{});
  SubmodularOracle out = oracle;
  out.eval = [inner = oracle.eval, base](std::span<const int> s) { return inner(s) - base; };
  if (oracle.eval_prefixes) {
    out.eval_prefixes = [inner = oracle.eval_prefixes, base](std::span<const int> order, std::span<double> values) {
      inner(order, values);
      for (double& v : values) v -= base;
    };
  }
  return out;
}

SubmodularOracle contract(const SubmodularOracle& oracle, int pivot) {
  require_eval(oracle);
  if (pivot < 0 || pivot >= oracle.ground_size) throw ArgumentError("contract: pivot out of range");
  const int pivot_value_index = pivot;
  const std::vector<int> single{pivot};
  const double pivot_value = oracle.eval(single);
  SubmodularOracle out;
  out.ground_size = oracle.ground_size - 1;
  for (int i = 0; i < oracle.ground_size; ++i) {
    if (i != pivot && !oracle.ground_set.empty()) out.ground_set.push_back(oracle.ground_set[i]);
  }
  auto lift = [pivot_value_index](int t) { return t < pivot_value_index ? t : t + 1; };
  out.eval = [inner = oracle.eval, lift, pivot, pivot_value](std::span<const int> s) {
    std::vector<int> full;
    full.reserve(s.size() + 1);
    for (int t : s) full.push_back(lift(t));
    full.insert(std::upper_bound(full.begin(), full.end(), pivot), pivot);
    return inner(full) - pivot_value;
  };
  if (oracle.eval_prefixes) {
    out.eval_prefixes = [inner = oracle.eval_prefixes, lift, pivot, pivot_value](std::span<const int> order,
                                                                                  std::span<double> values) {
      std::vector<int> full;
      full.reserve(order.size() + 1);
      full.push_back(pivot);
      for (int t : order) full.push_back(lift(t));
      std::vector<double> full_values(full.size());
      inner(full, full_values);
      for (std::size_t i = 0; i < order.size(); ++i) values[i] = full_values[i + 1] - pivot_value;
    };
  }
  return out;
}

SfmResult brute_force_min(const SubmodularOracle& oracle, bool require_nonempty) {
  require_eval(oracle);
  const int k = oracle.ground_size;
  if (k > kBruteForceMaxGround) {
    throw CapabilityError("brute-force SFM limited to " + std::to_string(kBruteForceMaxGround) + " elements, got " +
                          std::to_string(k));
  }
  if (require_nonempty && k == 0) throw ArgumentError("no non-empty subset of an empty ground set");
  SfmResult best;
  best.method = SfmMethod::brute_force;
  bool have = false;
  std::vector<int> subset;
  subset.reserve(static_cast<std::size_t>(k));
  auto offer = [&](double value, std::span<const int> set) {
    if (!have || better_candidate(value, set, best.value, best.minimizer)) {
      best.value = value;
      best.minimizer.assign(set.begin(), set.end());
      have = true;
    }
  };
  if (oracle.eval_prefixes && k >= 2) {
    // Every subset is a prefix of the sorted chain S u {k-1} for some S, so
    // 2^(k-1) prefix evaluations cover the whole lattice.
    if (!require_nonempty) offer(oracle.eval(std::span<const int>{}), {});
    std::vector<double> values(static_cast<std::size_t>(k));
    const std::uint64_t chains = std::uint64_t{1} << (k - 1);
    for (std::uint64_t mask = 0; mask < chains; ++mask) {
      subset.clear();
      for (int i = 0; i < k - 1; ++i) {
        if (mask >> i & 1u) subset.push_back(i);
      }
      subset.push_back(k - 1);
      const std::span<double> out(values.data(), subset.size());
      oracle.eval_prefixes(subset, out);
      // Prefixes without k-1 recur across chains; re-offering them is harmless.
      for (std::size_t j = 0; j < subset.size(); ++j) offer(out[j], std::span<const int>(subset.data(), j + 1));
    }
    best.iterations = static_cast<int>((std::uint64_t{1} << k) - (require_nonempty ? 1 : 0));
    best.value = oracle.eval(best.minimizer);
    return best;
  }
  const std::uint64_t count = std::uint64_t{1} << k;
  for (std::uint64_t mask = require_nonempty ? 1 : 0; mask < count; ++mask) {
    subset.clear();
    for (int i = 0; i < k; ++i) {
      if (mask >> i & 1u) subset.push_back(i);
    }
    ++best.iterations;
    offer(oracle.eval(subset), subset);
  }
  return best;
}

std::vector<double> greedy_vertex(const SubmodularOracle& oracle, std::span<const int> order) {
  require_eval(oracle);
  if (static_cast<int>(order.size()) != oracle.ground_size) throw ArgumentError("greedy order must cover the ground set");
  std::vector<bool> seen(static_cast<std::size_t>(oracle.ground_size), false);
  for (int e : order) {
    if (e < 0 || e >= oracle.ground_size || seen[e]) throw ArgumentError("greedy order is not a permutation");
    seen[e] = true;
  }
  const double base = oracle.eval(std::span<const int>{});
  const auto values = prefix_values(oracle, order);
  std::vector<double> vertex(order.size());
  double previous = base;
  for (std::size_t i = 0; i < order.size(); ++i) {
    vertex[order[i]] = values[i] - previous;
    previous = values[i];
  }
  return vertex;
}

SfmResult min_norm_point(const SubmodularOracle& raw, const MinNormOptions& options) {
  require_eval(raw);
  const int k = raw.ground_size;
  SfmResult result;
  result.method = SfmMethod::min_norm_point;
  if (k == 0) {
    result.value = raw.eval(std::span<const int>{});
    return result;
  }
  const SubmodularOracle oracle = normalized(raw);
  const int max_major = options.max_major_cycles > 0 ? options.max_major_cycles : 10 * k * k;

  auto to_vector = [](const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())).eval();
  };

  std::vector<int> identity(static_cast<std::size_t>(k));
  std::iota(identity.begin(), identity.end(), 0);
  ActiveSet active;
  active.add(to_vector(greedy_vertex(oracle, identity)));
  active.weights = {1.0};
  Eigen::VectorXd x = active.points.front();
  double scale = std::max(1.0, x.lpNorm<Eigen::Infinity>());

  double gap = std::numeric_limits<double>::infinity();
  bool converged = false;
  int cycle = 0;
  while (cycle < max_major) {
    ++cycle;
    // Greedy vertex minimizing <x, q>; its prefix values are exactly the
    // level sets of x, which gives the primal side of the duality gap.
    const auto order = argsort(x);
    const auto values = prefix_values(oracle, order);
    Eigen::VectorXd q(k);
    double previous = 0.0;
    double best_level = 0.0;  // empty set
    for (int i = 0; i < k; ++i) {
      q(order[i]) = values[i] - previous;
      previous = values[i];
      const bool boundary = i + 1 == k || x(order[i]) < x(order[i + 1]);
      if (boundary) best_level = std::min(best_level, values[i]);
    }
    const double lower = x.cwiseMin(0.0).sum();
    gap = best_level - lower;
    scale = std::max(scale, q.lpNorm<Eigen::Infinity>());
    if (options.trace) {
      *options.trace << std::setprecision(17) << "{\"cycle\":" << cycle << ",\"gap\":" << gap
                     << ",\"active_points\":" << active.points.size() << ",\"norm_sq\":" << x.squaredNorm() << "}\n";
    }
    if (gap <= options.tolerance) {
      converged = true;
      break;
    }
    // Wolfe's optimality test: x already minimizes <x, .> over the polytope.
    if (x.squaredNorm() - x.dot(q) <= 1e-15 * scale * scale * k || active.contains(q, scale)) {
      converged = true;
      break;
    }
    if (!active.add(q)) {
      converged = true;
      break;
    }

    // Minor cycles: move toward the affine minimizer while it leaves the hull.
    while (true) {
      const Eigen::VectorXd alpha = active.affine_minimizer();
      if (alpha.minCoeff() > 1e-12) {
        for (std::size_t i = 0; i < active.weights.size(); ++i) active.weights[i] = alpha(static_cast<Eigen::Index>(i));
        break;
      }
      double theta = 1.0;
      for (std::size_t i = 0; i < active.weights.size(); ++i) {
        const double a = alpha(static_cast<Eigen::Index>(i));
        if (a <= 1e-12) {
          const double lambda = active.weights[i];
          theta = std::min(theta, lambda / (lambda - a));
        }
      }
      for (std::size_t i = 0; i < active.weights.size(); ++i) {
        const double a = alpha(static_cast<Eigen::Index>(i));
        active.weights[i] = (1.0 - theta) * active.weights[i] + theta * a;
        if (a <= 1e-12 && active.weights[i] <= 1e-14 + 1e-12 * std::abs(a)) active.weights[i] = 0.0;
      }
      // The blocking point always leaves the active set.
      std::size_t blocking = 0;
      double smallest = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < active.weights.size(); ++i) {
        if (alpha(static_cast<Eigen::Index>(i)) <= 1e-12 && active.weights[i] < smallest) {
          smallest = active.weights[i];
          blocking = i;
        }
      }
      active.weights[blocking] = 0.0;
      active.drop_zero_weights();
      if (active.points.size() <= 1) {
        if (!active.points.empty()) active.weights = {1.0};
        break;
      }
    }
    x = active.combination();
  }
  if (!converged) {
    throw ConvergenceError("min-norm point did not converge within " + std::to_string(max_major) +
                               " major cycles (gap " + std::to_string(gap) + ")",
                           gap);
  }

  // Threshold sweep over every distinct level of x, scored on the raw oracle.
  const double lower = x.cwiseMin(0.0).sum();
  const double base = raw.eval(std::span<const int>{});
  const auto order = argsort(x);
  std::vector<int> level;
  result.minimizer = {};
  result.value = base;
  for (int i = 0; i < k; ++i) {
    level.insert(std::upper_bound(level.begin(), level.end(), order[i]), order[i]);
    if (i + 1 < k && !(x(order[i]) < x(order[i + 1]))) continue;
    const double value = raw.eval(level);
    if (better_candidate(value, level, result.value, result.minimizer)) {
      result.value = value;
      result.minimizer = level;
    }
  }
  result.iterations = cycle;
  result.certificate_gap = std::max(0.0, (result.value - base) - lower);
  return result;
}

SfmResult min_nonempty(const SubmodularOracle& oracle, SfmMethod method, const MinNormOptions& options) {
  require_eval(oracle);
  if (oracle.ground_size == 0) throw ArgumentError("no non-empty subset of an empty ground set");
  if (method == SfmMethod::brute_force) return brute_force_min(oracle, true);

  SfmResult best;
  best.method = SfmMethod::min_norm_point;
  bool have = false;
  double lower_bound = std::numeric_limits<double>::infinity();
  int iterations = 0;
  for (int pivot = 0; pivot < oracle.ground_size; ++pivot) {
    const SfmResult part = min_norm_point(contract(oracle, pivot), options);
    iterations += part.iterations;
    std::vector<int> candidate;
    candidate.reserve(part.minimizer.size() + 1);
    for (int t : part.minimizer) candidate.push_back(t < pivot ? t : t + 1);
    candidate.insert(std::upper_bound(candidate.begin(), candidate.end(), pivot), pivot);
    const double value = oracle.eval(candidate);
    lower_bound = std::min(lower_bound, value - part.certificate_gap);
    if (!have || better_candidate(value, candidate, best.value, best.minimizer)) {
      best.value = value;
      best.minimizer = std::move(candidate);
      have = true;
    }
  }
  best.iterations = iterations;
  best.certificate_gap = std::max(0.0, best.value - lower_bound);
  return best;
}

}  // namespace chainid
