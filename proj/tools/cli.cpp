#include "cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "chainid/errors.hpp"
#include "chainid/evaluation.hpp"
#include "chainid/io.hpp"
#include "chainid/learning.hpp"
#include "chainid/rng.hpp"
#include "chainid/sem.hpp"

namespace chainid::cli {

namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// CHAINID_SEED wins over --seed when set.
std::optional<std::uint64_t> resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (const char* env = std::getenv("CHAINID_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const std::uint64_t v = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw UsageError(std::string("CHAINID_SEED is not an unsigned integer: '") + env + "'");
    }
  }
  return flag;
}

void print_error(std::ostream& err, const std::string& kind, const std::string& message) {
  Json j;
  j["error"] = {{"kind", kind}, {"message", message}};
  err << j.dump() << "\n";
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  std::ostringstream s;
  s << std::put_time(&utc, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

// JSON when the text starts like JSON, otherwise the CSV matrix format.
CovMatrix load_covariance(const std::string& path) {
  const std::string text = read_file(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && (text[first] == '{' || text[first] == '[')) {
    return covariance_from_json(parse_json(text, path));
  }
  return covariance_from_csv(text);
}

SuperAdditiveStatistic parse_statistic(const std::string& name, int diagonal_index) {
  try {
    return {statistic_kind_from_string(name), diagonal_index};
  } catch (const ArgumentError& e) {
    throw UsageError(e.what());
  }
}

SfmMethod parse_sfm(const std::string& name) {
  try {
    return sfm_method_from_string(name);
  } catch (const ArgumentError& e) {
    throw UsageError(e.what());
  }
}

struct GenerateArgs {
  int n_vars = 0;
  int components = 0;
  std::optional<std::uint64_t> seed;
  bool certified = false;
  double margin = 0.2;
  int max_tries = 200;
  double expected_neighbors = 2.0;
  int samples = 0;
  std::string out_dir = ".";
  std::string prefix = "chainid";
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  const auto seed = resolve_seed(a.seed);
  if (!seed) throw UsageError("generate needs --seed (or CHAINID_SEED)");
  if (a.components > a.n_vars) {
    throw UsageError("--components (" + std::to_string(a.components) + ") cannot exceed --n-vars (" +
                     std::to_string(a.n_vars) + ")");
  }
  AmpSem sem;
  if (a.certified) {
    CertifiedOptions opts;
    opts.margin = a.margin;
    opts.expected_neighbors = a.expected_neighbors;
    sem = generate_certified_unknown_instance(a.n_vars, a.components, *seed, a.max_tries, opts);
  } else {
    SemOptions opts;
    opts.expected_neighbors = a.expected_neighbors;
    sem = generate_sem(a.n_vars, a.components, *seed, opts);
  }
  fs::create_directories(a.out_dir);
  const fs::path base(a.out_dir);
  std::vector<std::string> files;
  auto emit = [&](const std::string& suffix, const std::string& contents) {
    const std::string path = (base / (a.prefix + suffix)).string();
    write_file(path, contents);
    files.push_back(path);
  };
  emit("_sem.json", sem_to_json(sem).dump(2) + "\n");
  emit("_graph.json", graph_to_json(sem.graph).dump(2) + "\n");
  emit("_cov.json", covariance_to_json(population_covariance(sem)).dump(2) + "\n");
  if (a.samples > 0) emit("_data.csv", dataset_to_csv(sample(sem, a.samples, split_seed(*seed, 1))));
  Json j;
  j["files"] = files;
  out << j.dump(2) << "\n";
  return 0;
}

struct LearnArgs {
  std::string cov_path;
  std::string data_path;
  std::string known_path;
  std::string stat = "determinant";
  int diagonal_index = 0;
  std::string sfm = "mnp";
  double alpha = kDefaultAlpha;
  bool no_edges = false;
  bool trace = false;
};

int cmd_learn(const LearnArgs& a, const CLI::App& sub, std::ostream& out, std::ostream& err) {
  if (a.cov_path.empty() == a.data_path.empty()) throw UsageError("learn needs exactly one of --cov or --data");
  const bool known = !a.known_path.empty();
  if (!known && sub.count("--stat")) throw UsageError("--stat applies only with --known");
  if (known && sub.count("--sfm")) throw UsageError("--sfm applies only without --known");
  const SuperAdditiveStatistic stat = parse_statistic(a.stat, a.diagonal_index);
  const SfmMethod method = parse_sfm(a.sfm);
  MinNormOptions options;
  if (a.trace) options.trace = &err;

  std::optional<Dataset> data;
  CovMatrix sigma;
  if (!a.data_path.empty()) {
    data = dataset_from_csv(read_file(a.data_path));
  } else {
    sigma = load_covariance(a.cov_path);
  }
  std::vector<VertexSet> components;
  if (known) components = components_from_json(parse_json(read_file(a.known_path), a.known_path));

  LearnResult result;
  if (data) {
    result = known ? learn_order_known_from_data(*data, components, stat) : learn_unknown_from_data(*data, method, options);
    sigma = empirical_covariance(*data);
  } else {
    result = known ? learn_order_known(sigma, components, stat) : learn_unknown(sigma, method, options);
  }
  if (!a.no_edges) attach_edges(result, sigma, a.alpha, data ? data->n_samples : 0);
  out << learn_result_to_json(result).dump(2) << "\n";
  return 0;
}

struct EvalArgs {
  std::string result_path;
  std::string truth_path;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const Json result = parse_json(read_file(a.result_path), a.result_path);
  const ChainGraph truth = graph_from_json(parse_json(read_file(a.truth_path), a.truth_path));
  LearnResult learned;
  try {
    learned.order.sequence = result.at("order").get<std::vector<int>>();
    learned.partition = result.at("partition").get<std::vector<VertexSet>>();
  } catch (const Json::exception& e) {
    throw ArgumentError(std::string("malformed learn result: ") + e.what());
  }
  Json j;
  const bool partition_ok = same_partition(truth.components(), learned.partition);
  bool order_ok = false;
  if (partition_ok) {
    TopologicalOrder mapped;
    for (int c : learned.order.sequence) mapped.sequence.push_back(truth.component_of(learned.partition.at(c).front()));
    order_ok = is_topological(truth, mapped);
  }
  if (result.contains("graph") && !result.at("graph").is_null()) {
    j["shd"] = shd(graph_from_json(result.at("graph")), truth);
  } else {
    j["shd"] = nullptr;
  }
  j["partition_correct"] = partition_ok;
  j["order_correct"] = order_ok;
  out << j.dump(2) << "\n";
  return 0;
}

struct BenchArgs {
  std::string config_path;
  std::vector<int> d_list;
  int trials = 0;
  int samples = 0;
  std::optional<std::uint64_t> seed;
  std::string mode;
  std::string algorithm;
  std::string stat;
  std::string sfm;
  double margin = 0.0;
  int component_size = 0;
  double alpha = 0.0;
  int max_tries = 0;
  int jobs = 1;
  std::string out_dir = "bench_out";
  bool record_timing = false;
};

int cmd_bench(const BenchArgs& a, const CLI::App& sub, std::ostream& out) {
  BenchmarkConfig config;
  if (!a.config_path.empty()) config = config_from_json(read_file(a.config_path));
  try {
    if (sub.count("--d")) config.d_list = a.d_list;
    if (sub.count("--trials")) config.n_trials = a.trials;
    if (sub.count("--samples")) config.n_samples = a.samples;
    if (sub.count("--mode")) config.mode = bench_mode_from_string(a.mode);
    if (sub.count("--algorithm")) config.algorithm = bench_algorithm_from_string(a.algorithm);
    if (sub.count("--stat")) config.statistic.kind = statistic_kind_from_string(a.stat);
    if (sub.count("--sfm")) config.sfm = sfm_method_from_string(a.sfm);
    if (sub.count("--margin")) config.margin = a.margin;
    if (sub.count("--component-size")) config.component_size = a.component_size;
    if (sub.count("--alpha")) config.alpha = a.alpha;
    if (sub.count("--max-tries")) config.max_tries = a.max_tries;
    if (const auto seed = resolve_seed(a.seed)) config.base_seed = *seed;
    validate(config);
  } catch (const ArgumentError& e) {
    throw UsageError(e.what());
  }

  const std::string started = timestamp();
  const auto t0 = std::chrono::steady_clock::now();
  const auto reports = run_benchmark(config, a.jobs);
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto rows = aggregate(reports);

  const fs::path dir(a.out_dir);
  fs::create_directories(dir / "metadata");
  std::string lines;
  for (const auto& r : reports) lines += report_json_line(r, a.record_timing);
  write_file((dir / "reports.jsonl").string(), lines);
  write_file((dir / "summary.json").string(), summary_json(rows, a.record_timing));
  write_file((dir / "summary.csv").string(), summary_csv(rows, a.record_timing));
  write_file((dir / "config.json").string(), config_to_json(config));

  Json timing;
  timing["started"] = started;
  timing["finished"] = timestamp();
  timing["total_seconds"] = total;
  timing["jobs"] = a.jobs;
  Json per_trial = Json::array();
  for (const auto& r : reports) per_trial.push_back({{"d", r.d}, {"trial", r.trial_index}, {"seconds", r.wall_time}});
  timing["trials"] = std::move(per_trial);
  write_file((dir / "metadata" / "timing.json").string(), timing.dump(2) + "\n");

  out << summary_table(rows, a.record_timing);
  const bool all_failed = std::all_of(reports.begin(), reports.end(), [](const TrialReport& r) { return r.failed(); });
  return all_failed ? 1 : 0;
}

struct VerifyArgs {
  std::string sem_path;
  std::string conditions = "all";
  std::string stat = "determinant";
  int diagonal_index = 0;
  bool json = false;
};

int cmd_verify(const VerifyArgs& a, std::ostream& out) {
  const SuperAdditiveStatistic stat = parse_statistic(a.stat, a.diagonal_index);
  const AmpSem sem = sem_from_json(parse_json(read_file(a.sem_path), a.sem_path));
  std::vector<ConditionReport> reports;
  if (a.conditions == "all" || a.conditions == "unknown") reports = check_unknown_conditions(sem);
  if (a.conditions == "all" || a.conditions == "known") reports.push_back(check_known_condition(sem, stat));
  bool all_hold = true;
  Json list = Json::array();
  for (const auto& r : reports) {
    all_hold = all_hold && r.holds;
    const double slack = std::isfinite(r.slack) ? r.slack : 0.0;
    if (a.json) {
      list.push_back({{"name", r.name},
                      {"holds", r.holds},
                      {"vacuous", r.vacuous},
                      {"slack", std::isfinite(r.slack) ? Json(r.slack) : Json(nullptr)},
                      {"detail", r.detail}});
    } else {
      out << (r.vacuous ? "VACUOUS" : r.holds ? "PASS" : "FAIL") << "  " << r.name;
      if (!r.vacuous) out << "  slack=" << format_double(slack);
      if (!r.detail.empty()) out << "  (" << r.detail << ")";
      out << "\n";
    }
  }
  if (a.json) out << Json{{"conditions", list}, {"all_hold", all_hold}}.dump(2) << "\n";
  return all_hold ? 0 : 1;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Chain graph structure learning from covariance or samples"};
  app.name(args.empty() ? "chainid" : fs::path(args.front()).filename().string());
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Sample a linear-Gaussian chain graph model");
  generate->add_option("--n-vars", gen.n_vars, "Number of variables")->required()->check(CLI::PositiveNumber);
  generate->add_option("--components", gen.components, "Number of chain components")->required()->check(CLI::PositiveNumber);
  generate->add_option("--seed", gen.seed, "Random seed (CHAINID_SEED overrides)");
  generate->add_flag("--certified", gen.certified, "Only emit instances passing the unknown-structure conditions");
  generate->add_option("--margin", gen.margin, "Log-det margin for --certified")->check(CLI::PositiveNumber);
  generate->add_option("--max-tries", gen.max_tries, "Rejection budget for --certified")->check(CLI::PositiveNumber);
  generate->add_option("--expected-neighbors", gen.expected_neighbors, "Expected neighbors per vertex")
      ->check(CLI::NonNegativeNumber);
  generate->add_option("--samples", gen.samples, "Also write this many samples as CSV")->check(CLI::NonNegativeNumber);
  generate->add_option("--out-dir", gen.out_dir, "Output directory");
  generate->add_option("--prefix", gen.prefix, "Output file prefix");

  LearnArgs lrn;
  auto* learn = app.add_subcommand("learn", "Recover the chain components, their order and edges");
  auto* cov_opt = learn->add_option("--cov", lrn.cov_path, "Covariance file (JSON or CSV)");
  auto* data_opt = learn->add_option("--data", lrn.data_path, "Sample CSV file");
  cov_opt->excludes(data_opt);
  learn->add_option("--known", lrn.known_path, "Known components (JSON list or graph JSON)");
  learn->add_option("--stat", lrn.stat, "Statistic for known components")
      ->check(CLI::IsMember({"determinant", "det_root", "trace", "diagonal", "permanent", "hadamard"}));
  learn->add_option("--diag-index", lrn.diagonal_index, "Index for --stat diagonal")->check(CLI::NonNegativeNumber);
  learn->add_option("--sfm", lrn.sfm, "Submodular minimizer")->check(CLI::IsMember({"brute", "mnp"}));
  learn->add_option("--alpha", lrn.alpha, "Edge test level in data mode")->check(CLI::Range(0.0, 1.0));
  learn->add_flag("--no-edges", lrn.no_edges, "Skip edge recovery");
  learn->add_flag("--trace", lrn.trace, "Min-norm-point trace as JSON lines on stderr");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Score a learn result against a true graph");
  eval->add_option("--result", ev.result_path, "Learn result JSON")->required();
  eval->add_option("--truth", ev.truth_path, "True graph or SEM JSON")->required();

  BenchArgs bn;
  auto* bench = app.add_subcommand("bench", "Run a synthetic benchmark sweep");
  bench->add_option("--config", bn.config_path, "Benchmark config JSON");
  bench->add_option("--d", bn.d_list, "Variable counts")->delimiter(',');
  bench->add_option("--trials", bn.trials, "Trials per variable count")->check(CLI::PositiveNumber);
  bench->add_option("--samples", bn.samples, "Samples per trial in empirical mode")->check(CLI::PositiveNumber);
  bench->add_option("--seed", bn.seed, "Base seed (CHAINID_SEED overrides)");
  bench->add_option("--mode", bn.mode, "population or empirical")->check(CLI::IsMember({"population", "empirical"}));
  bench->add_option("--algorithm", bn.algorithm, "known or unknown")->check(CLI::IsMember({"known", "unknown"}));
  bench->add_option("--stat", bn.stat, "Statistic for the known algorithm");
  bench->add_option("--sfm", bn.sfm, "Submodular minimizer for the unknown algorithm")
      ->check(CLI::IsMember({"brute", "mnp"}));
  bench->add_option("--margin", bn.margin, "Certified-instance margin");
  bench->add_option("--component-size", bn.component_size, "Variables per chain component");
  bench->add_option("--alpha", bn.alpha, "Edge test level in empirical mode");
  bench->add_option("--max-tries", bn.max_tries, "Rejection budget per instance");
  bench->add_option("--jobs", bn.jobs, "Worker threads")->check(CLI::PositiveNumber);
  bench->add_option("--out-dir", bn.out_dir, "Output directory");
  bench->add_flag("--record-timing", bn.record_timing, "Include wall times in the primary outputs");

  VerifyArgs vf;
  auto* verify = app.add_subcommand("verify", "Check identifiability conditions of a model");
  verify->add_option("--sem", vf.sem_path, "SEM JSON")->required();
  verify->add_option("--conditions", vf.conditions, "all, unknown or known")
      ->check(CLI::IsMember({"all", "unknown", "known"}));
  verify->add_option("--stat", vf.stat, "Statistic for the known-components condition");
  verify->add_option("--diag-index", vf.diagonal_index, "Index for --stat diagonal")->check(CLI::NonNegativeNumber);
  verify->add_flag("--json", vf.json, "Machine-readable output");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (generate->parsed()) return cmd_generate(gen, out);
    if (learn->parsed()) return cmd_learn(lrn, *learn, out, err);
    if (eval->parsed()) return cmd_eval(ev, out);
    if (bench->parsed()) return cmd_bench(bn, *bench, out);
    if (verify->parsed()) return cmd_verify(vf, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    print_error(err, e.kind(), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error(err, "internal", e.what());
    return 1;
  }
  return 2;
}

}  // namespace chainid::cli
