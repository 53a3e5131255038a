#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace chainid {

// Set function over the ground set {0, ..., ground_size-1}. Subsets are passed
// as sorted position lists. `ground_set` optionally names the positions (e.g.
// vertex labels); it is not used by the minimizers.
//
// `eval_prefixes` is an optional fast path: given an ordering of positions it
// writes F(first i+1 elements) into prefix_values[i]. The greedy step of the
// minimum-norm-point method needs exactly these chains.
struct SubmodularOracle {
  int ground_size = 0;
  std::function<double(std::span<const int>)> eval;
  std::function<void(std::span<const int> order, std::span<double> prefix_values)> eval_prefixes;
  std::vector<int> ground_set;
};

enum class SfmMethod { brute_force, min_norm_point };

std::string to_string(SfmMethod method);
SfmMethod sfm_method_from_string(const std::string& name);

struct SfmResult {
  std::vector<int> minimizer;  // sorted positions
  double value = 0.0;          // oracle.eval(minimizer)
  SfmMethod method = SfmMethod::brute_force;
  int iterations = 0;
  double certificate_gap = 0.0;
};

inline constexpr int kBruteForceMaxGround = 20;
inline constexpr double kSfmTolerance = 1e-9;

// Deterministic ordering on candidate minimizers: lower value first, values
// within a relative 1e-12 count as ties and fall back to smaller cardinality,
// then lexicographic order.
bool better_candidate(double value_a, std::span<const int> set_a, double value_b, std::span<const int> set_b);

// Exhaustive minimization over all 2^k subsets (2^k - 1 when require_nonempty).
// Throws CapabilityError above kBruteForceMaxGround elements.
SfmResult brute_force_min(const SubmodularOracle& oracle, bool require_nonempty);

// Greedy base-polytope vertex for an ordering: q[order[i]] = F(prefix_i) - F(prefix_{i-1}).
std::vector<double> greedy_vertex(const SubmodularOracle& oracle, std::span<const int> order);

struct MinNormOptions {
  double tolerance = kSfmTolerance;
  int max_major_cycles = 0;     // 0 selects 10 * k^2
  std::ostream* trace = nullptr;  // JSON lines per major cycle when set
};

// Fujishige-Wolfe minimum-norm-point method on the base polytope of the
// normalized oracle F(S) - F(empty). Terminates when the duality gap
// F(best level set) - sum_i min(x_i, 0) is at most `tolerance`. Throws
// ConvergenceError (carrying the gap) when the major-cycle cap is hit.
SfmResult min_norm_point(const SubmodularOracle& oracle, const MinNormOptions& options = {});

// Minimizes over non-empty subsets. For the minimum-norm-point method each
// element v is forced in through the contraction T -> F(T u {v}) - F({v});
// brute force enumerates the non-empty subsets directly.
SfmResult min_nonempty(const SubmodularOracle& oracle, SfmMethod method, const MinNormOptions& options = {});

// F(T u {pivot}) - F({pivot}) over the ground set without `pivot`.
SubmodularOracle contract(const SubmodularOracle& oracle, int pivot);

// F(S) - F(empty).
SubmodularOracle normalized(const SubmodularOracle& oracle);

}  // namespace chainid
