#include "stratroute/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "stratroute/aggregation.hpp"
#include "stratroute/util.hpp"

namespace stratroute {

using nlohmann::json;

double pass_at_k(const std::map<std::string, std::vector<std::string>>& runs,
                 const std::map<std::string, std::string>& gold_answers, int k) {
  if (k <= 0) throw DataError("pass_at_k: k must be positive");
  if (runs.empty()) throw DataError("pass_at_k: no runs");
  size_t hits = 0;
  for (const auto& [problem_id, answers] : runs) {
    const auto gold_it = gold_answers.find(problem_id);
    if (gold_it == gold_answers.end()) {
      throw DataError("pass_at_k: no gold answer for problem \"" + problem_id + "\"");
    }
    if (answers.size() < static_cast<size_t>(k)) {
      throw DataError("pass_at_k: problem \"" + problem_id + "\" has only " +
                      std::to_string(answers.size()) + " runs, need " + std::to_string(k));
    }
    const std::string gold = standardize(gold_it->second).canonical;
    for (int i = 0; i < k; ++i) {
      if (standardize(answers[static_cast<size_t>(i)]).canonical == gold) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(runs.size());
}

ModeFractions mode_distribution(std::span<const RoutingDecision> decisions) {
  if (decisions.empty()) throw DataError("mode_distribution: empty decision list");
  ModeFractions f;
  for (const RoutingDecision& d : decisions) {
    switch (d.mode) {
      case RoutingMode::Confident: f.confident += 1.0; break;
      case RoutingMode::Deliberative: f.deliberative += 1.0; break;
      case RoutingMode::Exploratory: f.exploratory += 1.0; break;
    }
  }
  const auto n = static_cast<double>(decisions.size());
  f.confident /= n;
  f.deliberative /= n;
  f.exploratory /= n;
  return f;
}

SummaryStats summarize(std::vector<double> values) {
  if (values.empty()) throw DataError("summarize: empty value list");
  SummaryStats s;
  s.count = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  s.median = (n % 2 == 1) ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  // Nearest-rank percentile.
  const size_t rank = static_cast<size_t>(std::ceil(0.95 * static_cast<double>(n)));
  s.p95 = values[std::min(n - 1, rank == 0 ? 0 : rank - 1)];
  return s;
}

EfficiencyReport efficiency_report(std::span<const RoutingDecision> decisions) {
  if (decisions.empty()) throw DataError("efficiency_report: empty decision list");
  EfficiencyReport report;
  std::vector<double> times;
  std::vector<double> lengths;
  std::map<std::string, std::vector<double>> mode_times;
  std::map<std::string, std::vector<double>> mode_lengths;
  for (const RoutingDecision& d : decisions) {
    times.push_back(d.total_time_ms);
    lengths.push_back(static_cast<double>(d.total_output_length));
    mode_times[to_string(d.mode)].push_back(d.total_time_ms);
    mode_lengths[to_string(d.mode)].push_back(static_cast<double>(d.total_output_length));
  }
  report.time_ms = summarize(std::move(times));
  report.output_length = summarize(std::move(lengths));
  for (auto& [mode, v] : mode_times) report.per_mode_time_ms[mode] = summarize(std::move(v));
  for (auto& [mode, v] : mode_lengths) {
    report.per_mode_output_length[mode] = summarize(std::move(v));
  }
  return report;
}

BehaviorHistogram behavior_histograms(std::span<const StrategyDistribution> predictions,
                                      int bins) {
  if (predictions.empty()) throw DataError("behavior_histograms: empty prediction list");
  if (bins <= 0) throw DataError("behavior_histograms: bins must be positive");
  BehaviorHistogram h;
  h.edges.resize(static_cast<size_t>(bins) + 1);
  for (int i = 0; i <= bins; ++i) {
    h.edges[static_cast<size_t>(i)] = static_cast<double>(i) / static_cast<double>(bins);
  }
  h.pmax_counts.assign(static_cast<size_t>(bins), 0);
  h.gap_counts.assign(static_cast<size_t>(bins), 0);
  auto bucket = [bins](double v) {
    auto b = static_cast<int>(v * static_cast<double>(bins));
    if (b >= bins) b = bins - 1;  // v == 1.0 lands in the last bin
    if (b < 0) b = 0;
    return static_cast<size_t>(b);
  };
  for (const StrategyDistribution& p : predictions) {
    const auto [top1, top2] = p.top_two();
    h.pmax_counts[bucket(p[top1])] += 1;
    h.gap_counts[bucket(p[top1] - p[top2])] += 1;
  }
  return h;
}

CorrelationReport correlation_report(std::span<const SuitabilityRecord> records) {
  if (records.size() < 2) throw DataError("correlation_report: need at least 2 records");
  CorrelationReport report;
  const auto n = static_cast<double>(records.size());

  std::array<std::vector<double>, kNumStrategies> scores;
  for (int s = 0; s < kNumStrategies; ++s) {
    scores[static_cast<size_t>(s)].reserve(records.size());
  }
  for (const SuitabilityRecord& rec : records) {
    for (int s = 0; s < kNumStrategies; ++s) {
      scores[static_cast<size_t>(s)].push_back(rec.per_strategy[static_cast<size_t>(s)].score);
    }
  }

  std::array<double, kNumStrategies> mean{};
  std::array<double, kNumStrategies> var{};
  for (int s = 0; s < kNumStrategies; ++s) {
    const auto& v = scores[static_cast<size_t>(s)];
    double sum = 0.0;
    for (double x : v) sum += x;
    mean[static_cast<size_t>(s)] = sum / n;
    double sq = 0.0;
    for (double x : v) sq += (x - mean[static_cast<size_t>(s)]) * (x - mean[static_cast<size_t>(s)]);
    var[static_cast<size_t>(s)] = sq / n;
  }
  report.mean_scores = mean;

  for (int a = 0; a < kNumStrategies; ++a) {
    for (int b = 0; b < kNumStrategies; ++b) {
      const auto ia = static_cast<size_t>(a);
      const auto ib = static_cast<size_t>(b);
      if (var[ia] <= 0.0 || var[ib] <= 0.0) {
        report.defined[ia][ib] = false;
        report.correlation[ia][ib] = 0.0;
        continue;
      }
      if (a == b) {
        report.defined[ia][ib] = true;
        report.correlation[ia][ib] = 1.0;
        continue;
      }
      double cov = 0.0;
      for (size_t i = 0; i < records.size(); ++i) {
        cov += (scores[ia][i] - mean[ia]) * (scores[ib][i] - mean[ib]);
      }
      cov /= n;
      report.defined[ia][ib] = true;
      report.correlation[ia][ib] = cov / std::sqrt(var[ia] * var[ib]);
    }
  }
  return report;
}

EvalReport build_eval_report(std::span<const RoutingDecision> decisions,
                             const std::vector<ProblemInstance>& problems,
                             const std::vector<int>& ks, std::string config_snapshot_json) {
  if (decisions.empty()) throw DataError("build_eval_report: empty decision list");
  if (ks.empty()) throw DataError("build_eval_report: no k values requested");

  std::map<std::string, std::string> gold;
  for (const ProblemInstance& p : problems) {
    if (p.gold_answer) gold[p.id] = *p.gold_answer;
  }

  // Final answers per problem, ordered by run index.
  std::map<std::string, std::map<uint32_t, std::string>> by_problem;
  for (const RoutingDecision& d : decisions) {
    auto [it, inserted] = by_problem[d.problem_id].emplace(d.run, d.final_answer);
    if (!inserted) {
      throw DataError("build_eval_report: duplicate (problem, run) pair (" + d.problem_id + ", " +
                      std::to_string(d.run) + ")");
    }
  }
  std::map<std::string, std::vector<std::string>> runs;
  for (const auto& [problem_id, by_run] : by_problem) {
    if (!gold.count(problem_id)) {
      throw DataError("build_eval_report: no gold answer for problem \"" + problem_id + "\"");
    }
    auto& ordered = runs[problem_id];
    for (const auto& [_, answer] : by_run) ordered.push_back(answer);
  }

  EvalReport report;
  for (int k : ks) report.pass_at[k] = pass_at_k(runs, gold, k);
  report.mode_fractions = mode_distribution(decisions);
  report.efficiency = efficiency_report(decisions);
  for (const RoutingDecision& d : decisions) {
    for (StrategyId s : d.executed) {
      report.strategy_counts[static_cast<size_t>(strategy_index(s))] += 1;
    }
  }
  report.canonicalizer_version = kCanonicalizerVersion;
  report.config_snapshot_json = std::move(config_snapshot_json);
  return report;
}

namespace {

json stats_to_json(const SummaryStats& s) {
  return json{{"mean", s.mean}, {"median", s.median}, {"p95", s.p95}, {"count", s.count}};
}

}  // namespace

std::string eval_report_to_json(const EvalReport& report) {
  json j;
  json pass = json::object();
  for (const auto& [k, v] : report.pass_at) pass[std::to_string(k)] = v;
  j["pass_at"] = pass;
  j["mode_fractions"] = {{"Confident", report.mode_fractions.confident},
                         {"Deliberative", report.mode_fractions.deliberative},
                         {"Exploratory", report.mode_fractions.exploratory}};
  j["time_ms"] = stats_to_json(report.efficiency.time_ms);
  j["output_length"] = stats_to_json(report.efficiency.output_length);
  json per_mode = json::object();
  for (const auto& [mode, stats] : report.efficiency.per_mode_time_ms) {
    per_mode[mode] = {{"time_ms", stats_to_json(stats)},
                      {"output_length",
                       stats_to_json(report.efficiency.per_mode_output_length.at(mode))}};
  }
  j["per_mode"] = per_mode;
  json counts = json::object();
  for (StrategyId s : canonical_strategy_order()) {
    counts[to_string(s)] = report.strategy_counts[static_cast<size_t>(strategy_index(s))];
  }
  j["strategy_counts"] = counts;
  j["canonicalizer_version"] = report.canonicalizer_version;
  if (!report.config_snapshot_json.empty()) {
    json snapshot = json::parse(report.config_snapshot_json, nullptr, false);
    j["config"] = snapshot.is_discarded() ? json(report.config_snapshot_json) : snapshot;
  }
  return j.dump();
}

std::string eval_report_to_text(const EvalReport& report) {
  std::ostringstream out;
  out << "== evaluation report ==\n";
  for (const auto& [k, v] : report.pass_at) {
    out << "pass@" << k << ": " << format_double(v) << "\n";
  }
  out << "mode fractions: Confident " << format_double(report.mode_fractions.confident)
      << ", Deliberative " << format_double(report.mode_fractions.deliberative)
      << ", Exploratory " << format_double(report.mode_fractions.exploratory) << "\n";
  out << "time_ms: mean " << format_double(report.efficiency.time_ms.mean) << ", median "
      << format_double(report.efficiency.time_ms.median) << ", p95 "
      << format_double(report.efficiency.time_ms.p95) << "\n";
  out << "output_length: mean " << format_double(report.efficiency.output_length.mean)
      << ", median " << format_double(report.efficiency.output_length.median) << ", p95 "
      << format_double(report.efficiency.output_length.p95) << "\n";
  for (const auto& [mode, stats] : report.efficiency.per_mode_time_ms) {
    out << "  " << mode << ": n=" << stats.count << " time mean "
        << format_double(stats.mean) << ", length mean "
        << format_double(report.efficiency.per_mode_output_length.at(mode).mean) << "\n";
  }
  out << "strategy executions:";
  for (StrategyId s : canonical_strategy_order()) {
    out << " " << to_string(s) << "="
        << report.strategy_counts[static_cast<size_t>(strategy_index(s))];
  }
  out << "\ncanonicalizer: " << report.canonicalizer_version << "\n";
  return out.str();
}

}  // namespace stratroute
