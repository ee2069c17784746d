#include "stratroute/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <map>
#include <unordered_map>

#include <json.hpp>

#include "stratroute/aggregation.hpp"
#include "stratroute/util.hpp"

namespace stratroute::pipeline {

using nlohmann::json;

namespace {

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json snapshot_or_null(const std::string& snapshot) {
  if (snapshot.empty()) return nullptr;
  json parsed = json::parse(snapshot, nullptr, false);
  return parsed.is_discarded() ? json(snapshot) : parsed;
}

}  // namespace

void write_manifest(const std::filesystem::path& out_path, const std::string& command,
                    const std::string& config_snapshot_json) {
  json manifest;
  manifest["tool_version"] = kToolVersion;
  manifest["command"] = command;
  manifest["config"] = snapshot_or_null(config_snapshot_json);
  manifest["created_at"] = iso_timestamp();
  write_text_file_atomic(out_path.string() + ".manifest.json", manifest.dump() + "\n");
}

namespace {

// Per-strategy mean scores and the inter-strategy correlation matrix as a
// plain matrix file for external plotting. Undefined correlations (zero
// score variance) come out as nan.
std::string correlation_to_csv(const CorrelationReport& report) {
  std::string out = "strategy";
  for (StrategyId s : canonical_strategy_order()) {
    out += ',';
    out += to_string(s);
  }
  out += ",mean_score\n";
  for (StrategyId a : canonical_strategy_order()) {
    const auto i = static_cast<size_t>(strategy_index(a));
    out += to_string(a);
    for (StrategyId b : canonical_strategy_order()) {
      const auto j = static_cast<size_t>(strategy_index(b));
      out += ',';
      out += report.defined[i][j] ? format_double(report.correlation[i][j]) : "nan";
    }
    out += ',';
    out += format_double(report.mean_scores[i]);
    out += '\n';
  }
  return out;
}

}  // namespace

ProfileSummary run_profile(const ProfileOptions& options) {
  options.profiler.validate();
  const TraceStore store = TraceStore::load(options.traces_path);
  BuildStats stats;
  const std::vector<SuitabilityRecord> records = build_dataset(store, options.profiler, &stats);
  save_dataset(options.out_path, records, store);
  if (records.size() >= 2) {
    write_text_file_atomic(options.out_path.string() + ".correlation.csv",
                           correlation_to_csv(correlation_report(records)));
  }
  write_manifest(options.out_path, "profile", options.config_snapshot_json);

  ProfileSummary summary;
  summary.complete_groups = stats.complete_groups;
  summary.incomplete_groups = stats.incomplete_groups;
  if (!records.empty()) {
    for (const SuitabilityRecord& rec : records) {
      for (int s = 0; s < kNumStrategies; ++s) {
        summary.mean_scores[static_cast<size_t>(s)] +=
            rec.per_strategy[static_cast<size_t>(s)].score;
      }
    }
    for (double& v : summary.mean_scores) v /= static_cast<double>(records.size());
  }
  return summary;
}

TrainSummary run_train(const TrainOptions& options) {
  const std::vector<DatasetRow> rows = load_dataset(options.dataset_path);
  if (rows.empty()) throw DataError("train: dataset is empty");

  std::vector<SuitabilityRecord> records;
  std::unordered_map<std::string, std::string> texts;
  records.reserve(rows.size());
  for (const DatasetRow& row : rows) {
    records.push_back(row.record);
    texts.emplace(row.record.problem_id, row.text);
  }

  const TrainResult result = train(records, texts, options.features, options.train_config);
  save_model(result.model, options.model_out);

  std::string log;
  for (size_t epoch = 0; epoch < result.epoch_loss.size(); ++epoch) {
    json line;
    line["epoch"] = epoch;
    line["train_loss"] = result.epoch_loss[epoch];
    log += line.dump();
    log += '\n';
  }
  json final_line;
  final_line["train_count"] = result.train_count;
  final_line["val_count"] = result.val_count;
  final_line["train_top1_agreement"] = result.train_top1_agreement;
  final_line["val_top1_agreement"] = result.val_top1_agreement;
  log += final_line.dump();
  log += '\n';
  write_text_file_atomic(options.model_out.string() + ".losslog.jsonl", log);
  write_manifest(options.model_out, "train", options.config_snapshot_json);

  TrainSummary summary;
  summary.epoch_loss = result.epoch_loss;
  summary.train_count = result.train_count;
  summary.val_count = result.val_count;
  summary.train_top1_agreement = result.train_top1_agreement;
  summary.val_top1_agreement = result.val_top1_agreement;
  return summary;
}

CalibrationResult run_calibrate(const CalibrateOptions& options) {
  options.grid.validate();
  const std::vector<ProblemInstance> validation = load_problems(options.validation_path);
  const AdapterModel model = load_model(options.model_path);
  ExecutorRegistry executors = ExecutorRegistry::from_config_file(options.executors_path);

  const CalibrationResult result =
      grid_search(validation, model, executors, options.grid, options.jobs);

  json out;
  out["best_tau_c"] = result.best_tau_c;
  out["best_tau_a"] = result.best_tau_a;
  out["best_accuracy"] = result.best_accuracy;
  out["grid"] = {{"tau_c_values", result.tau_c_values}, {"tau_a_values", result.tau_a_values}};
  write_text_file_atomic(options.out_path, out.dump() + "\n");
  write_text_file_atomic(
      options.out_path.string() + ".accuracy.csv",
      surface_to_csv(result.tau_c_values, result.tau_a_values, result.accuracy));
  write_text_file_atomic(
      options.out_path.string() + ".cost.csv",
      surface_to_csv(result.tau_c_values, result.tau_a_values, result.mean_cost));
  write_manifest(options.out_path, "calibrate", options.config_snapshot_json);
  return result;
}

RouteSummary run_route(const RouteOptions& options) {
  options.routing.validate();
  if (options.runs <= 0) throw DataError("route: runs must be positive");
  const std::vector<ProblemInstance> problems = load_problems(options.problems_path);
  const AdapterModel model = load_model(options.model_path);
  ExecutorRegistry executors = ExecutorRegistry::from_config_file(options.executors_path);
  if (!executors.fully_bound()) {
    throw DataError("route: all four strategies must be bound before routing");
  }

  const Predictor predictor = [&model](const ProblemInstance& p) { return model.predict(p); };

  std::vector<RoutingDecision> decisions;
  decisions.reserve(problems.size() * static_cast<size_t>(options.runs));
  RouteSummary summary;
  for (const ProblemInstance& problem : problems) {
    for (int run = 0; run < options.runs; ++run) {
      RoutingDecision d = route_lenient(problem, predictor, options.routing, executors,
                                        static_cast<uint32_t>(run));
      if (!d.solved) ++summary.unsolved;
      decisions.push_back(std::move(d));
    }
  }
  summary.decisions = decisions.size();
  save_decisions(options.out_path, decisions);
  write_manifest(options.out_path, "route", options.config_snapshot_json);
  return summary;
}

EvalReport run_eval(const EvalOptions& options) {
  if (options.decisions_paths.empty()) throw DataError("eval: no decision files given");
  std::vector<RoutingDecision> decisions;
  for (const auto& path : options.decisions_paths) {
    std::vector<RoutingDecision> part = load_decisions(path);
    decisions.insert(decisions.end(), std::make_move_iterator(part.begin()),
                     std::make_move_iterator(part.end()));
  }
  const std::vector<ProblemInstance> problems = load_problems(options.problems_path);

  const EvalReport report =
      build_eval_report(decisions, problems, options.ks, options.config_snapshot_json);
  write_text_file_atomic(options.out_path, eval_report_to_json(report) + "\n");
  write_text_file_atomic(options.out_path.string() + ".txt", eval_report_to_text(report));

  // Prediction-behavior histograms over the decision distributions, as a
  // plain matrix file for external plotting.
  std::vector<StrategyDistribution> predictions;
  predictions.reserve(decisions.size());
  for (const RoutingDecision& d : decisions) predictions.push_back(d.distribution);
  const BehaviorHistogram hist = behavior_histograms(predictions, 20);
  std::string hist_csv = "bin_low,bin_high,pmax_count,gap_count\n";
  for (size_t b = 0; b + 1 < hist.edges.size(); ++b) {
    hist_csv += format_double(hist.edges[b]);
    hist_csv += ',';
    hist_csv += format_double(hist.edges[b + 1]);
    hist_csv += ',';
    hist_csv += std::to_string(hist.pmax_counts[b]);
    hist_csv += ',';
    hist_csv += std::to_string(hist.gap_counts[b]);
    hist_csv += '\n';
  }
  write_text_file_atomic(options.out_path.string() + ".behavior_hist.csv", hist_csv);
  write_manifest(options.out_path, "eval", options.config_snapshot_json);
  return report;
}

size_t run_sample_validation(const SampleValidationOptions& options) {
  const std::vector<ProblemInstance> problems = load_problems(options.problems_path);
  if (problems.empty()) throw DataError("sample-validation: no problems");
  if (options.sample_size == 0) throw DataError("sample-validation: sample size must be positive");
  if (options.sample_size >= problems.size()) {
    save_problems(options.out_path, problems);
    write_manifest(options.out_path, "sample-validation", options.config_snapshot_json);
    return problems.size();
  }

  // Group by first tag; untagged problems form their own stratum.
  std::map<std::string, std::vector<const ProblemInstance*>> strata;
  for (const ProblemInstance& p : problems) {
    strata[p.tags.empty() ? std::string{} : p.tags.front()].push_back(&p);
  }

  // Proportional allocation, largest remainder.
  struct Allocation {
    std::string tag;
    size_t count = 0;
    double remainder = 0.0;
  };
  std::vector<Allocation> allocations;
  size_t allocated = 0;
  for (const auto& [tag, members] : strata) {
    const double exact = static_cast<double>(options.sample_size) *
                         static_cast<double>(members.size()) /
                         static_cast<double>(problems.size());
    Allocation a;
    a.tag = tag;
    a.count = static_cast<size_t>(exact);
    a.count = std::min(a.count, members.size());
    a.remainder = exact - static_cast<double>(a.count);
    allocated += a.count;
    allocations.push_back(std::move(a));
  }
  std::sort(allocations.begin(), allocations.end(), [](const Allocation& x, const Allocation& y) {
    if (x.remainder != y.remainder) return x.remainder > y.remainder;
    return x.tag < y.tag;
  });
  for (auto& a : allocations) {
    if (allocated >= options.sample_size) break;
    if (a.count < strata[a.tag].size()) {
      ++a.count;
      ++allocated;
    }
  }

  std::vector<ProblemInstance> sample;
  for (const auto& a : allocations) {
    auto members = strata[a.tag];
    std::sort(members.begin(), members.end(),
              [](const ProblemInstance* x, const ProblemInstance* y) { return x->id < y->id; });
    uint64_t state = hash_combine(options.seed, fnv1a64(a.tag));
    for (size_t i = members.size(); i > 1; --i) {
      state = splitmix64(state);
      std::swap(members[i - 1], members[state % i]);
    }
    for (size_t i = 0; i < a.count && i < members.size(); ++i) sample.push_back(*members[i]);
  }
  std::sort(sample.begin(), sample.end(),
            [](const ProblemInstance& x, const ProblemInstance& y) { return x.id < y.id; });
  save_problems(options.out_path, sample);
  write_manifest(options.out_path, "sample-validation", options.config_snapshot_json);
  return sample.size();
}

}  // namespace stratroute::pipeline
