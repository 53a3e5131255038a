// Acceptance checks. Prints one line per criterion and exits nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <unistd.h>
#include <vector>

#include "chainid/errors.hpp"
#include "chainid/evaluation.hpp"
#include "chainid/io.hpp"
#include "chainid/learning.hpp"
#include "chainid/linalg.hpp"
#include "chainid/sem.hpp"
#include "chainid/sfm.hpp"
#include "cli.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace chainid;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

std::vector<int> random_subset(const std::vector<int>& pool, std::mt19937_64& gen, bool nonempty) {
  std::uniform_real_distribution<double> unit;
  for (;;) {
    const double p = unit(gen);
    std::vector<int> s;
    for (int v : pool) {
      if (unit(gen) < p) s.push_back(v);
    }
    if (!nonempty || !s.empty()) return s;
  }
}

// Log det of Cov(X_s | X_given); zero for empty s.
double cond_log_det(const CovMatrix& sigma, const std::vector<int>& s, const std::vector<int>& given) {
  if (s.empty()) return 0.0;
  return log_det(conditional_cov(sigma, given).restrict_to(s));
}

std::vector<int> intersect(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  for (int v : a) {
    if (std::find(b.begin(), b.end(), v) != b.end()) out.push_back(v);
  }
  return out;
}

Verdict factorization() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 gen(101);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int n = 2 + i % 11;
    const CovMatrix sigma(testsupport::random_pd(n, gen));
    std::vector<int> all(n);
    std::iota(all.begin(), all.end(), 0);
    std::vector<int> split;
    do split = random_subset(all, gen, true);
    while (static_cast<int>(split.size()) == n);
    worst = std::max(worst, factorization_check(sigma, split));
  }
  const double t = seconds_since(start);
  return {worst < 1e-9 && t < 10.0, fmt("1000 matrices, max residual %.2e, %.2f s (limit 10 s)", worst, t)};
}

Verdict super_additivity() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 gen(202);
  double worst = 0.0;
  double min_pd_value = std::numeric_limits<double>::infinity();
  for (auto kind : {StatisticKind::determinant, StatisticKind::det_root, StatisticKind::trace, StatisticKind::diagonal,
                    StatisticKind::permanent, StatisticKind::hadamard}) {
    const int max_dim = kind == StatisticKind::permanent ? 6 : 8;
    for (int i = 0; i < 1000; ++i) {
      const int n = 1 + i % max_dim;
      const SuperAdditiveStatistic stat{kind, static_cast<int>(gen() % n)};
      // Every third pair has a rank-deficient member.
      Eigen::MatrixXd a = i % 3 == 0 ? testsupport::random_psd(n, 1 + static_cast<int>(gen() % n), gen)
                                     : testsupport::random_pd(n, gen);
      Eigen::MatrixXd b = testsupport::random_psd(n, 1 + static_cast<int>(gen() % n), gen);
      a /= n;
      b /= n;
      const double slack = evaluate_statistic(stat, Eigen::MatrixXd(a + b)) - evaluate_statistic(stat, a) -
                           evaluate_statistic(stat, b);
      worst = std::min(worst, slack);
      if (i % 3 != 0) min_pd_value = std::min(min_pd_value, evaluate_statistic(stat, a));
    }
  }
  const double t = seconds_since(start);
  return {worst >= -1e-9 && min_pd_value > 0.0 && t < 30.0,
          fmt("6 kinds x 1000 pairs, min slack %.2e, min value on PD %.2e, %.2f s (limit 30 s)", worst, min_pd_value, t)};
}

Verdict submodularity() {
  std::mt19937_64 gen(303);
  double worst = std::numeric_limits<double>::infinity();
  long checks = 0;
  for (int i = 0; i < 500; ++i) {
    const int n = 2 + i % 6;
    const Eigen::MatrixXd m = testsupport::random_pd(n, gen) / n;
    std::vector<double> f(1u << n, 0.0);
    for (unsigned mask = 1; mask < f.size(); ++mask) {
      f[mask] = log_det_spd(testsupport::select(m, testsupport::mask_to_set(mask, n), testsupport::mask_to_set(mask, n)));
    }
    for (int v = 0; v < n; ++v) {
      const unsigned bit = 1u << v;
      for (unsigned t = 0; t < f.size(); ++t) {
        if (t & bit) continue;
        // Every S strictly contained in T.
        for (unsigned s = (t - 1) & t; t != 0; s = (s - 1) & t) {
          worst = std::min(worst, (f[s | bit] - f[s]) - (f[t | bit] - f[t]));
          ++checks;
          if (s == 0) break;
        }
      }
    }
  }
  return {worst >= -1e-9, fmt("500 matrices, %ld (S,T,v) triples, min slack %.2e", checks, worst)};
}

Verdict sfm_equivalence() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 gen(404);
  std::uniform_real_distribution<double> log_scale(-1.0, 1.0);
  double worst = 0.0;
  int proper = 0;
  for (int i = 0; i < 200; ++i) {
    const int k = 1 + i % 12;
    // Random correlation with per-variable variances on both sides of 1, so
    // minimizers are spread over the lattice instead of sitting at the ends.
    const Eigen::MatrixXd c = testsupport::random_pd(k, gen, 0.5 * k);
    Eigen::VectorXd sd = c.diagonal().cwiseSqrt().cwiseInverse();
    for (int j = 0; j < k; ++j) sd(j) *= std::exp(0.5 * log_scale(gen));
    const Eigen::MatrixXd m = sd.asDiagonal() * c * sd.asDiagonal();
    const SubmodularOracle oracle = log_det_oracle(m);
    const SfmResult brute = brute_force_min(oracle, false);
    const double free_gap = std::abs(min_norm_point(oracle).value - brute.value);
    proper += !brute.minimizer.empty() && static_cast<int>(brute.minimizer.size()) < k;
    const double nonempty_gap = std::abs(min_nonempty(oracle, SfmMethod::min_norm_point).value -
                                         min_nonempty(oracle, SfmMethod::brute_force).value);
    worst = std::max({worst, free_gap, nonempty_gap});
  }
  const double t = seconds_since(start);
  return {worst <= 1e-9 && t < 120.0, fmt("200 instances (%d with a non-empty proper minimizer), max value gap %.2e, %.2f s (limit 120 s)",
                                                proper, worst, t)};
}

Verdict known_components() {
  const auto start = std::chrono::steady_clock::now();
  int ok = 0;
  double worst_det = 0.0;
  int largest = 0, widest = 0;
  std::string first_problem;
  for (int i = 0; i < 200; ++i) {
    const int size = 1 + i % 5;
    const int c = 1 + (i / 5) % 6;
    try {
      const AmpSem sem = generate_certified_known_instance(size * c, c, static_cast<std::uint64_t>(i), 200);
      for (const auto& block : sem.noise_covs) {
        worst_det = std::max(worst_det, std::abs(log_det_spd(block)));
        largest = std::max(largest, static_cast<int>(block.rows()));
      }
      widest = std::max(widest, sem.graph.n_vertices());
      const CovMatrix sigma = population_covariance(sem);
      const auto det = learn_order_known(sigma, sem.graph.components(), {StatisticKind::determinant});
      const auto root = learn_order_known(sigma, sem.graph.components(), {StatisticKind::det_root});
      if (is_topological(sem.graph, det.order) && det.order == root.order) ++ok;
      else if (first_problem.empty()) first_problem = fmt(", first failure at instance %d", i);
    } catch (const Error& e) {
      if (first_problem.empty()) first_problem = fmt(", instance %d threw: %s", i, e.what());
    }
  }
  const double t = seconds_since(start);
  return {ok == 200 && worst_det < 1e-9 && largest <= 5 && widest <= 30 && t < 60.0,
          fmt("%d/200 topological and identical across determinant and det_root, max |log det noise| %.2e, "
              "d <= %d, blocks <= %d, %.2f s (limit 60 s)%s",
              ok, worst_det, widest, largest, t, first_problem.c_str())};
}

Verdict unknown_structure() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 gen(606);
  int ok = 0;
  long subsets = 0;
  double slack[4] = {0.0, 0.0, 0.0, 0.0};
  std::string first_problem;
  for (int i = 0; i < 100; ++i) {
    const int d = 4 + i % 17;
    const int c = std::max(1, d / (1 + i % 4));
    try {
      const AmpSem sem = generate_certified_unknown_instance(d, c, static_cast<std::uint64_t>(i), 200);
      const CovMatrix sigma = population_covariance(sem);
      const auto r = learn_unknown(sigma, SfmMethod::brute_force);
      TopologicalOrder mapped;
      for (int k : r.order.sequence) mapped.sequence.push_back(sem.graph.component_of(r.partition[k].front()));
      if (!same_partition(r.partition, sem.graph.components()) || !is_topological(sem.graph, mapped)) {
        if (first_problem.empty()) first_problem = fmt(", first failure at instance %d", i);
        continue;
      }
      ++ok;
      std::vector<int> chosen;
      for (std::size_t step = 0; step < mapped.sequence.size(); ++step) {
        std::vector<std::vector<int>> taus, parents;
        std::vector<int> remaining;
        for (std::size_t j = step; j < mapped.sequence.size(); ++j) {
          const int comp = mapped.sequence[j];
          taus.push_back(sem.graph.components()[comp]);
          parents.push_back(parents_of(sem.graph, comp));
          remaining.insert(remaining.end(), taus.back().begin(), taus.back().end());
        }
        std::vector<std::vector<int>> samples;
        for (int s = 0; s < 50; ++s) samples.push_back(random_subset(remaining, gen, true));
        samples.push_back(taus.front());
        const double l4 = cond_log_det(sigma, taus.front(), parents.front());
        for (const auto& s : samples) {
          const double l0 = cond_log_det(sigma, s, chosen);
          double l1 = 0.0, l2 = 0.0, l3 = 0.0;
          std::vector<int> earlier = chosen;
          for (std::size_t j = 0; j < taus.size(); ++j) {
            const auto hit = intersect(s, taus[j]);
            if (!hit.empty()) {
              l1 += cond_log_det(sigma, hit, earlier);
              l2 += cond_log_det(sigma, hit, parents[j]);
              l3 += cond_log_det(sigma, taus[j], parents[j]);
            }
            earlier.insert(earlier.end(), hit.begin(), hit.end());
          }
          slack[0] = std::min(slack[0], -std::abs(l0 - l1));
          slack[1] = std::min(slack[1], l1 - l2);
          slack[2] = std::min(slack[2], l2 - l3);
          slack[3] = std::min(slack[3], l3 - l4);
          ++subsets;
        }
        chosen.insert(chosen.end(), taus.front().begin(), taus.front().end());
      }
    } catch (const Error& e) {
      if (first_problem.empty()) first_problem = fmt(", instance %d threw: %s", i, e.what());
    }
  }
  const double t = seconds_since(start);
  const double min_slack = std::min({slack[0], slack[1], slack[2], slack[3]});
  return {ok == 100 && min_slack >= -1e-9 && t < 300.0,
          fmt("%d/100 exact partition and topological order, %ld subsets, chain slacks %.1e %.1e %.1e %.1e, "
              "%.2f s (limit 300 s)%s",
              ok, subsets, slack[0], slack[1], slack[2], slack[3], t, first_problem.c_str())};
}

Verdict population_edges() {
  int ok = 0;
  std::string first_problem;
  for (int i = 0; i < 100; ++i) {
    try {
      const auto seed = static_cast<std::uint64_t>(1000 + i);
      AmpSem sem;
      LearnResult r;
      CovMatrix sigma;
      if (i < 50) {
        sem = generate_certified_known_instance(12, 4 + i % 3, seed, 200);
        sigma = population_covariance(sem);
        r = learn_order_known(sigma, sem.graph.components());
      } else {
        sem = generate_certified_unknown_instance(10, 3 + i % 3, seed, 200);
        sigma = population_covariance(sem);
        r = learn_unknown(sigma, SfmMethod::min_norm_point);
      }
      attach_edges(r, sigma);
      if (shd(*r.recovered_graph, sem.graph) == 0) ++ok;
      else if (first_problem.empty()) first_problem = fmt(", first failure at instance %d", i);
    } catch (const Error& e) {
      if (first_problem.empty()) first_problem = fmt(", instance %d threw: %s", i, e.what());
    }
  }
  return {ok == 100, fmt("%d/100 certified instances with SHD 0 (50 known, 50 unknown)%s", ok, first_problem.c_str())};
}

Verdict finite_sample() {
  const auto start = std::chrono::steady_clock::now();
  BenchmarkConfig config;
  config.d_list = {10};
  config.n_trials = 200;
  config.mode = BenchMode::empirical;
  config.algorithm = BenchAlgorithm::known;
  const int jobs = std::max(1u, std::thread::hardware_concurrency());
  std::vector<double> shd_means;
  double order_rate_1000 = 0.0;
  bool complete = true;
  for (int n : {250, 1000, 4000}) {
    config.n_samples = n;
    const auto rows = aggregate(run_benchmark(config, jobs));
    if (rows.size() != 1 || !rows[0].mean_shd) {
      complete = false;
      break;
    }
    shd_means.push_back(*rows[0].mean_shd);
    if (n == 1000) order_rate_1000 = rows[0].order_rate;
  }
  if (!complete) return {false, "benchmark produced no summary"};
  const bool decreasing = shd_means[0] > shd_means[1] && shd_means[1] > shd_means[2];
  return {order_rate_1000 >= 0.95 && decreasing,
          fmt("order rate %.3f at n=1000 (target 0.95), mean SHD %.3f > %.3f > %.3f over n=250,1000,4000 "
              "(harness targets), %.1f s",
              order_rate_1000, shd_means[0], shd_means[1], shd_means[2], seconds_since(start))};
}

Verdict determinism() {
  const fs::path root = fs::temp_directory_path() / ("chainid_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const std::vector<std::vector<std::string>> sweeps{
      {"--mode", "empirical", "--algorithm", "unknown", "--sfm", "mnp", "--d", "6,8", "--trials", "6", "--samples",
       "500", "--seed", "5"},
      {"--mode", "population", "--algorithm", "known", "--d", "10,20", "--trials", "5", "--seed", "12"}};
  int identical = 0, compared = 0;
  std::string problem;
  for (std::size_t s = 0; s < sweeps.size(); ++s) {
    std::vector<fs::path> dirs;
    for (const char* jobs : {"1", "3", "3"}) {
      std::vector<std::string> args{"chainid", "bench"};
      args.insert(args.end(), sweeps[s].begin(), sweeps[s].end());
      dirs.push_back(root / fmt("sweep%zu_run%zu", s, dirs.size()));
      args.insert(args.end(), {"--jobs", jobs, "--out-dir", dirs.back().string()});
      std::ostringstream out, err;
      if (cli::run(args, out, err) != 0 && problem.empty()) problem = ", bench failed: " + err.str();
    }
    for (const char* f : {"summary.json", "summary.csv", "reports.jsonl"}) {
      for (std::size_t k = 1; k < dirs.size(); ++k) {
        ++compared;
        try {
          if (read_file((dirs[0] / f).string()) == read_file((dirs[k] / f).string())) ++identical;
        } catch (const Error& e) {
          if (problem.empty()) problem = std::string(", ") + e.what();
        }
      }
    }
  }
  fs::remove_all(root);
  return {identical == compared && problem.empty(),
          fmt("%d/%d output comparisons byte-identical across jobs 1, 3 and a rerun%s", identical, compared,
              problem.c_str())};
}

}  // namespace

int main() {
  const std::vector<std::function<Verdict()>> criteria{factorization,      super_additivity, submodularity,
                                                       sfm_equivalence,    known_components, unknown_structure,
                                                       population_edges,   finite_sample,    determinism};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i]();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    std::printf("criterion %zu %s: %s\n", i + 1, v.pass ? "PASS" : "FAIL", v.detail.c_str());
    std::fflush(stdout);
    failures += !v.pass;
  }
  return failures == 0 ? 0 : 1;
}
