#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "stratroute/core.hpp"
#include "stratroute/router.hpp"

namespace stratroute {

// Fraction of problems whose first k runs contain a gold-matching final
// answer. `runs` maps problem id to final answers ordered by run index;
// every problem needs at least k entries. Comparison goes through the
// shared canonicalizer.
double pass_at_k(const std::map<std::string, std::vector<std::string>>& runs,
                 const std::map<std::string, std::string>& gold_answers, int k);

struct ModeFractions {
  double confident = 0.0;
  double deliberative = 0.0;
  double exploratory = 0.0;
};

ModeFractions mode_distribution(std::span<const RoutingDecision> decisions);

struct SummaryStats {
  double mean = 0.0;
  double median = 0.0;
  double p95 = 0.0;
  size_t count = 0;
};

SummaryStats summarize(std::vector<double> values);

struct EfficiencyReport {
  SummaryStats time_ms;
  SummaryStats output_length;
  // Keyed by routing mode name; only modes that occur are present.
  std::map<std::string, SummaryStats> per_mode_time_ms;
  std::map<std::string, SummaryStats> per_mode_output_length;
};

EfficiencyReport efficiency_report(std::span<const RoutingDecision> decisions);

struct BehaviorHistogram {
  std::vector<double> edges;       // bins + 1 edges covering [0, 1]
  std::vector<size_t> pmax_counts; // histogram of p_max
  std::vector<size_t> gap_counts;  // histogram of p_max - p_2nd
};

BehaviorHistogram behavior_histograms(std::span<const StrategyDistribution> predictions,
                                      int bins);

struct CorrelationReport {
  std::array<double, kNumStrategies> mean_scores{};
  std::array<std::array<double, kNumStrategies>, kNumStrategies> correlation{};
  // Pearson correlation is undefined when either score vector has zero variance.
  std::array<std::array<bool, kNumStrategies>, kNumStrategies> defined{};
};

CorrelationReport correlation_report(std::span<const SuitabilityRecord> records);

struct EvalReport {
  std::map<int, double> pass_at;
  ModeFractions mode_fractions;
  EfficiencyReport efficiency;
  std::array<size_t, kNumStrategies> strategy_counts{};  // executions per strategy
  std::string canonicalizer_version;
  std::string config_snapshot_json;  // resolved configuration, verbatim
};

// Builds the full report over decision records. Decisions are grouped per
// problem by run index; every problem must have at least max(ks) runs.
EvalReport build_eval_report(std::span<const RoutingDecision> decisions,
                             const std::vector<ProblemInstance>& problems,
                             const std::vector<int>& ks, std::string config_snapshot_json);

std::string eval_report_to_text(const EvalReport& report);
std::string eval_report_to_json(const EvalReport& report);

}  // namespace stratroute
