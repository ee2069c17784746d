#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "stratroute/adapter.hpp"
#include "stratroute/core.hpp"
#include "stratroute/executors.hpp"

namespace stratroute {

struct RoutingConfig {
  double tau_c = 0.4;  // confidence threshold
  double tau_a = 0.08; // ambiguity margin
  // When the single strategy of a Confident decision fails, re-route the
  // problem as Exploratory instead of raising. Off by default so that cost
  // accounting stays honest.
  bool fallback_to_exploratory = false;

  void validate() const;
};

enum class RoutingMode { Confident, Deliberative, Exploratory };

const std::string& to_string(RoutingMode m);
std::optional<RoutingMode> routing_mode_from_string(std::string_view name);

struct ModeDecision {
  RoutingMode mode = RoutingMode::Exploratory;
  std::vector<StrategyId> strategies;  // 1, 2, or 4 entries
};

// Mode selection on the top two probabilities:
//   Confident     p_max >= tau_c and (p_max - p_2nd) >= tau_a   -> {top1}
//   Deliberative  p_max >= tau_c and (p_max - p_2nd) <  tau_a   -> {top1, top2}
//   Exploratory   p_max <  tau_c                                -> all four
// Equal probabilities resolve to canonical strategy order.
ModeDecision decide_mode(const StrategyDistribution& distribution, const RoutingConfig& config);

struct RoutingDecision {
  std::string problem_id;
  uint32_t run = 0;
  RoutingMode mode = RoutingMode::Exploratory;
  StrategyDistribution distribution;
  std::vector<StrategyId> executed;           // the decided strategy set
  std::map<StrategyId, std::string> answers;  // successful executions only
  std::vector<StrategyId> failed;
  bool solved = true;
  std::string final_answer;  // canonical form
  double total_time_ms = 0.0;  // sum over attempted executions
  double max_time_ms = 0.0;    // parallel-dispatch accounting
  int64_t total_output_length = 0;
};

using Predictor = std::function<StrategyDistribution(const ProblemInstance&)>;

// Executes the decided strategies and votes. A failed strategy in a
// multi-strategy mode is excluded from the vote and recorded; total failure
// (or a Confident-mode failure without fallback) raises ExecutorError
// naming the strategy.
RoutingDecision route(const ProblemInstance& problem, const Predictor& predictor,
                      const RoutingConfig& config, ExecutorRegistry& executors, uint32_t run = 0);

RoutingDecision route(const ProblemInstance& problem, const AdapterModel& model,
                      const RoutingConfig& config, ExecutorRegistry& executors, uint32_t run = 0);

// Same policy, but a total failure comes back as an unsolved decision
// instead of an exception. Batch callers record these as incorrect.
RoutingDecision route_lenient(const ProblemInstance& problem, const Predictor& predictor,
                              const RoutingConfig& config, ExecutorRegistry& executors,
                              uint32_t run = 0);

// Line-delimited decision records, one JSON object per line.
std::string decisions_to_jsonl(const std::vector<RoutingDecision>& decisions);
void save_decisions(const std::filesystem::path& path,
                    const std::vector<RoutingDecision>& decisions);
std::vector<RoutingDecision> load_decisions(const std::filesystem::path& path);

}  // namespace stratroute
