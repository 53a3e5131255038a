#include "chainid/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <thread>
#include <tuple>

#include "chainid/errors.hpp"
#include "chainid/io.hpp"
#include "chainid/rng.hpp"
#include "chainid/sem.hpp"

namespace chainid {

std::string to_string(BenchMode mode) { return mode == BenchMode::population ? "population" : "empirical"; }

std::string to_string(BenchAlgorithm algorithm) { return algorithm == BenchAlgorithm::known ? "known" : "unknown"; }

BenchMode bench_mode_from_string(const std::string& name) {
  if (name == "population") return BenchMode::population;
  if (name == "empirical" || name == "data") return BenchMode::empirical;
  throw ArgumentError("unknown mode '" + name + "' (population|empirical)");
}

BenchAlgorithm bench_algorithm_from_string(const std::string& name) {
  if (name == "known") return BenchAlgorithm::known;
  if (name == "unknown") return BenchAlgorithm::unknown;
  throw ArgumentError("unknown algorithm '" + name + "' (known|unknown)");
}

void validate(const BenchmarkConfig& config) {
  if (config.d_list.empty()) throw ArgumentError("d_list must not be empty");
  for (std::size_t i = 0; i < config.d_list.size(); ++i) {
    if (config.d_list[i] < 1) throw ArgumentError("d_list entries must be positive");
    if (i > 0 && config.d_list[i] <= config.d_list[i - 1]) throw ArgumentError("d_list must be strictly ascending");
  }
  if (config.n_trials < 1) throw ArgumentError("n_trials must be positive");
  if (config.n_samples < 1) throw ArgumentError("n_samples must be positive");
  if (config.component_size < 1) throw ArgumentError("component_size must be positive");
  if (config.max_tries < 1) throw ArgumentError("max_tries must be positive");
  if (!(config.margin > 0.0)) throw ArgumentError("margin must be positive");
  if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw ArgumentError("alpha must lie in (0, 1)");
}

BenchmarkConfig config_from_json(const std::string& text) {
  const Json j = parse_json(text, "benchmark config");
  if (!j.is_object()) throw ArgumentError("benchmark config must be a JSON object");
  BenchmarkConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "d_list") c.d_list = value.get<std::vector<int>>();
      else if (key == "n_samples") c.n_samples = value.get<int>();
      else if (key == "n_trials") c.n_trials = value.get<int>();
      else if (key == "base_seed") c.base_seed = value.get<std::uint64_t>();
      else if (key == "mode") c.mode = bench_mode_from_string(value.get<std::string>());
      else if (key == "algorithm") c.algorithm = bench_algorithm_from_string(value.get<std::string>());
      else if (key == "statistic") c.statistic.kind = statistic_kind_from_string(value.get<std::string>());
      else if (key == "diagonal_index") c.statistic.diagonal_index = value.get<int>();
      else if (key == "margin") c.margin = value.get<double>();
      else if (key == "component_size") c.component_size = value.get<int>();
      else if (key == "sfm") c.sfm = sfm_method_from_string(value.get<std::string>());
      else if (key == "alpha") c.alpha = value.get<double>();
      else if (key == "max_tries") c.max_tries = value.get<int>();
      else throw ArgumentError("unknown benchmark config field '" + key + "'");
    }
  } catch (const Json::exception& e) {
    throw ArgumentError(std::string("malformed benchmark config: ") + e.what());
  }
  validate(c);
  return c;
}

std::string config_to_json(const BenchmarkConfig& c) {
  Json j;
  j["d_list"] = c.d_list;
  j["n_samples"] = c.n_samples;
  j["n_trials"] = c.n_trials;
  j["base_seed"] = c.base_seed;
  j["mode"] = to_string(c.mode);
  j["algorithm"] = to_string(c.algorithm);
  j["statistic"] = to_string(c.statistic.kind);
  j["diagonal_index"] = c.statistic.diagonal_index;
  j["margin"] = c.margin;
  j["component_size"] = c.component_size;
  j["sfm"] = to_string(c.sfm);
  j["alpha"] = c.alpha;
  j["max_tries"] = c.max_tries;
  return j.dump(2) + "\n";
}

namespace {

// Maps a learned partition onto the true component indices; empty when the
// partitions differ.
std::optional<TopologicalOrder> order_in_true_indices(const ChainGraph& truth, const LearnResult& learned) {
  if (!same_partition(truth.components(), learned.partition)) return std::nullopt;
  TopologicalOrder mapped;
  for (int c : learned.order.sequence) {
    const auto& members = learned.partition.at(static_cast<std::size_t>(c));
    mapped.sequence.push_back(truth.component_of(members.front()));
  }
  return mapped;
}

}  // namespace

TrialReport run_trial(const BenchmarkConfig& config, int d, int trial_index) {
  TrialReport report;
  report.d = d;
  report.trial_index = trial_index;
  report.seed = split_seed(config.base_seed, static_cast<std::uint64_t>(trial_index));
  report.mode = config.mode;
  report.algorithm = config.algorithm;
  const auto start = std::chrono::steady_clock::now();
  try {
    validate(config);
    Rng streams(report.seed);
    const std::uint64_t instance_seed = streams.next_u64();
    const std::uint64_t sample_seed = streams.next_u64();
    const int n_components = std::max(1, d / config.component_size);

    AmpSem sem;
    if (config.algorithm == BenchAlgorithm::known) {
      sem = generate_certified_known_instance(d, n_components, instance_seed, config.max_tries, config.statistic);
    } else {
      CertifiedOptions opts;
      opts.margin = config.margin;
      sem = generate_certified_unknown_instance(d, n_components, instance_seed, config.max_tries, opts);
    }
    report.true_graph = sem.graph;

    CovMatrix sigma = population_covariance(sem);
    int n_for_tests = 0;
    LearnResult learned;
    if (config.mode == BenchMode::empirical) {
      const Dataset data = sample(sem, config.n_samples, sample_seed);
      n_for_tests = data.n_samples;
      learned = config.algorithm == BenchAlgorithm::known
                    ? learn_order_known_from_data(data, sem.graph.components(), config.statistic)
                    : learn_unknown_from_data(data, config.sfm);
      sigma = empirical_covariance(data);
    } else {
      learned = config.algorithm == BenchAlgorithm::known ? learn_order_known(sigma, sem.graph.components(), config.statistic)
                                                           : learn_unknown(sigma, config.sfm);
    }
    attach_edges(learned, sigma, config.alpha, n_for_tests);

    report.shd = shd(*learned.recovered_graph, sem.graph);
    if (const auto mapped = order_in_true_indices(sem.graph, learned)) {
      report.partition_correct = true;
      report.order_correct = is_topological(sem.graph, *mapped);
    }
    report.learned = std::move(learned);
  } catch (const Error& e) {
    report.error_kind = e.kind();
    report.error = e.what();
  } catch (const std::exception& e) {
    report.error_kind = "internal";
    report.error = e.what();
  }
  if (report.failed()) {
    report.order_correct = false;
    report.partition_correct = false;
    report.learned.reset();
    report.shd = 0;
  }
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::vector<TrialReport> run_benchmark(const BenchmarkConfig& config, int jobs) {
  validate(config);
  if (jobs < 1) throw ArgumentError("jobs must be positive");
  std::vector<std::pair<int, int>> tasks;
  for (int d : config.d_list) {
    for (int t = 0; t < config.n_trials; ++t) tasks.emplace_back(d, t);
  }
  std::vector<TrialReport> reports(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) reports[i] = run_trial(config, tasks[i].first, tasks[i].second);
  };
  const int threads = std::min<int>(jobs, static_cast<int>(tasks.size()));
  std::vector<std::jthread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  return reports;
}

std::vector<SummaryRow> aggregate(const std::vector<TrialReport>& reports) {
  using Key = std::tuple<int, int, int>;
  std::map<Key, std::vector<const TrialReport*>> groups;
  for (const auto& r : reports) {
    groups[{r.d, static_cast<int>(r.mode), static_cast<int>(r.algorithm)}].push_back(&r);
  }
  std::vector<SummaryRow> rows;
  for (auto& [key, members] : groups) {
    // Fold in (trial, seed) order so floating sums do not depend on input order.
    std::sort(members.begin(), members.end(), [](const TrialReport* a, const TrialReport* b) {
      return std::tie(a->trial_index, a->seed) < std::tie(b->trial_index, b->seed);
    });
    SummaryRow row;
    row.d = std::get<0>(key);
    row.mode = static_cast<BenchMode>(std::get<1>(key));
    row.algorithm = static_cast<BenchAlgorithm>(std::get<2>(key));
    row.n_trials = static_cast<int>(members.size());
    std::vector<double> shds;
    int order_hits = 0;
    int partition_hits = 0;
    double seconds = 0.0;
    for (const TrialReport* r : members) {
      seconds += r->wall_time;
      if (r->failed()) {
        ++row.n_failures;
        continue;
      }
      shds.push_back(r->shd);
      order_hits += r->order_correct;
      partition_hits += r->partition_correct;
    }
    row.order_rate = static_cast<double>(order_hits) / row.n_trials;
    row.partition_rate = static_cast<double>(partition_hits) / row.n_trials;
    row.mean_seconds = seconds / row.n_trials;
    if (!shds.empty()) {
      double sum = 0.0;
      for (double s : shds) sum += s;
      const double mean = sum / static_cast<double>(shds.size());
      double sq = 0.0;
      for (double s : shds) sq += (s - mean) * (s - mean);
      row.mean_shd = mean;
      row.sd_shd = shds.size() > 1 ? std::sqrt(sq / static_cast<double>(shds.size() - 1)) : 0.0;
    }
    rows.push_back(row);
  }
  return rows;
}

namespace {

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::string csv_optional(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

}  // namespace

std::string summary_json(const std::vector<SummaryRow>& rows, bool with_timing) {
  Json out = Json::array();
  for (const auto& r : rows) {
    Json j;
    j["d"] = r.d;
    j["mode"] = to_string(r.mode);
    j["algorithm"] = to_string(r.algorithm);
    j["mean_shd"] = optional_number(r.mean_shd);
    j["sd_shd"] = optional_number(r.sd_shd);
    j["order_rate"] = r.order_rate;
    j["partition_rate"] = r.partition_rate;
    j["mean_seconds"] = with_timing ? Json(r.mean_seconds) : Json(nullptr);
    j["n_trials"] = r.n_trials;
    j["n_failures"] = r.n_failures;
    out.push_back(std::move(j));
  }
  return out.dump(2) + "\n";
}

std::string summary_csv(const std::vector<SummaryRow>& rows, bool with_timing) {
  std::string out = "d,mode,algorithm,mean_shd,sd_shd,order_rate,partition_rate,mean_seconds,n_trials,n_failures\n";
  for (const auto& r : rows) {
    out += std::to_string(r.d) + ',' + to_string(r.mode) + ',' + to_string(r.algorithm) + ',' +
           csv_optional(r.mean_shd) + ',' + csv_optional(r.sd_shd) + ',' + format_double(r.order_rate) + ',' +
           format_double(r.partition_rate) + ',' + (with_timing ? format_double(r.mean_seconds) : "NA") + ',' +
           std::to_string(r.n_trials) + ',' + std::to_string(r.n_failures) + '\n';
  }
  return out;
}

std::string summary_table(const std::vector<SummaryRow>& rows, bool with_timing) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%5s  %-10s  %-9s  %9s  %7s  %10s  %14s  %12s  %8s  %10s\n", "d", "mode",
                "algorithm", "mean_shd", "sd_shd", "order_rate", "partition_rate", "mean_seconds", "n_trials",
                "n_failures");
  out << line;
  for (const auto& r : rows) {
    const std::string mean = r.mean_shd ? [&] {
      char b[32];
      std::snprintf(b, sizeof b, "%.3f", *r.mean_shd);
      return std::string(b);
    }()
                                        : "NA";
    const std::string sd = r.sd_shd ? [&] {
      char b[32];
      std::snprintf(b, sizeof b, "%.3f", *r.sd_shd);
      return std::string(b);
    }()
                                    : "NA";
    const std::string secs = with_timing ? [&] {
      char b[32];
      std::snprintf(b, sizeof b, "%.4f", r.mean_seconds);
      return std::string(b);
    }()
                                         : "NA";
    std::snprintf(line, sizeof line, "%5d  %-10s  %-9s  %9s  %7s  %10.3f  %14.3f  %12s  %8d  %10d\n", r.d,
                  to_string(r.mode).c_str(), to_string(r.algorithm).c_str(), mean.c_str(), sd.c_str(), r.order_rate,
                  r.partition_rate, secs.c_str(), r.n_trials, r.n_failures);
    out << line;
  }
  return out.str();
}

std::string report_json_line(const TrialReport& r, bool with_timing) {
  Json j;
  j["d"] = r.d;
  j["trial"] = r.trial_index;
  j["seed"] = r.seed;
  j["mode"] = to_string(r.mode);
  j["algorithm"] = to_string(r.algorithm);
  j["shd"] = r.failed() ? Json(nullptr) : Json(r.shd);
  j["order_correct"] = r.order_correct;
  j["partition_correct"] = r.partition_correct;
  j["learned"] = r.learned ? learn_result_to_json(*r.learned) : Json(nullptr);
  j["true_graph"] = r.failed() ? Json(nullptr) : graph_to_json(r.true_graph);
  if (with_timing) j["wall_time"] = r.wall_time;
  if (r.failed()) j["error"] = {{"kind", r.error_kind}, {"message", r.error}};
  return j.dump() + "\n";
}

}  // namespace chainid
