#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "chainid/graph.hpp"
#include "chainid/learning.hpp"
#include "chainid/linalg.hpp"
#include "chainid/sfm.hpp"

namespace chainid {

enum class BenchMode { population, empirical };
enum class BenchAlgorithm { known, unknown };

std::string to_string(BenchMode mode);
std::string to_string(BenchAlgorithm algorithm);
BenchMode bench_mode_from_string(const std::string& name);
BenchAlgorithm bench_algorithm_from_string(const std::string& name);

struct BenchmarkConfig {
  std::vector<int> d_list{10, 20, 30, 40, 50};
  int n_samples = 1000;
  int n_trials = 20;
  std::uint64_t base_seed = 0;
  BenchMode mode = BenchMode::population;
  BenchAlgorithm algorithm = BenchAlgorithm::known;
  SuperAdditiveStatistic statistic{};
  double margin = 0.2;       // certified unknown-structure instances
  int component_size = 2;    // d / component_size chain components
  SfmMethod sfm = SfmMethod::min_norm_point;
  double alpha = kDefaultAlpha;
  int max_tries = 200;       // rejection budget of the certified generators
};

// Throws ArgumentError naming the first invalid field.
void validate(const BenchmarkConfig& config);

// JSON object with the BenchmarkConfig field names; missing fields keep defaults.
BenchmarkConfig config_from_json(const std::string& text);
std::string config_to_json(const BenchmarkConfig& config);

struct TrialReport {
  int d = 0;
  int trial_index = 0;
  std::uint64_t seed = 0;
  BenchMode mode = BenchMode::population;
  BenchAlgorithm algorithm = BenchAlgorithm::known;
  ChainGraph true_graph;
  std::optional<LearnResult> learned;
  int shd = 0;
  bool order_correct = false;
  bool partition_correct = false;
  double wall_time = 0.0;  // seconds
  std::string error_kind;  // empty on success
  std::string error;

  bool failed() const { return !error_kind.empty(); }
};

// Trial seed: split_seed(base_seed, trial_index). Generation, learning and
// scoring errors are recorded in the report instead of thrown.
TrialReport run_trial(const BenchmarkConfig& config, int d, int trial_index);

// Every (d, trial) pair on `jobs` worker threads, returned in (d, trial) order.
std::vector<TrialReport> run_benchmark(const BenchmarkConfig& config, int jobs = 1);

struct SummaryRow {
  int d = 0;
  BenchMode mode = BenchMode::population;
  BenchAlgorithm algorithm = BenchAlgorithm::known;
  std::optional<double> mean_shd;  // over successful trials; empty when all failed
  std::optional<double> sd_shd;
  double order_rate = 0.0;      // failures count as incorrect
  double partition_rate = 0.0;
  double mean_seconds = 0.0;
  int n_trials = 0;
  int n_failures = 0;
};

// One row per (d, mode, algorithm) present in `reports`, sorted by that key.
std::vector<SummaryRow> aggregate(const std::vector<TrialReport>& reports);

// Primary outputs leave timing out unless `with_timing` is set, so reruns are
// byte-identical.
std::string summary_json(const std::vector<SummaryRow>& rows, bool with_timing = false);
std::string summary_csv(const std::vector<SummaryRow>& rows, bool with_timing = false);
std::string summary_table(const std::vector<SummaryRow>& rows, bool with_timing = false);
std::string report_json_line(const TrialReport& report, bool with_timing = false);

}  // namespace chainid
