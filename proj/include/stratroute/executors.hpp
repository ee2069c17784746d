#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "stratroute/core.hpp"
#include "stratroute/trace_store.hpp"

namespace stratroute {

struct ExecutorResult {
  std::string raw_answer;
  double time_ms = 0.0;
  int64_t output_length = 0;
  bool succeeded = false;
  std::string failure_reason;  // set iff !succeeded

  static ExecutorResult failure(std::string reason) {
    ExecutorResult r;
    r.failure_reason = std::move(reason);
    return r;
  }
};

// One strategy execution backend. `run` selects the sampling stream for
// stochastic backends; replay ignores it. Expected per-call failures
// (replay miss, timeout) come back as failed results, not exceptions.
class Executor {
 public:
  virtual ~Executor() = default;
  virtual ExecutorResult execute(StrategyId strategy, const ProblemInstance& problem,
                                 uint32_t run) = 0;
};

// Returns stored trace fields verbatim; fails on a missing (problem, strategy) pair.
class ReplayExecutor : public Executor {
 public:
  explicit ReplayExecutor(std::shared_ptr<const TraceStore> store);
  ExecutorResult execute(StrategyId strategy, const ProblemInstance& problem,
                         uint32_t run) override;

 private:
  std::shared_ptr<const TraceStore> store_;
};

// Tag-matched simulation rule. Correctness probability plus time/length
// ranges per strategy, in canonical order.
struct SyntheticRule {
  std::string tag = "*";  // "*" matches every problem
  std::array<double, kNumStrategies> p_correct{0.5, 0.5, 0.5, 0.5};
  std::array<std::pair<double, double>, kNumStrategies> time_ms{
      {{50.0, 150.0}, {50.0, 150.0}, {50.0, 150.0}, {50.0, 150.0}}};
  std::array<std::pair<int64_t, int64_t>, kNumStrategies> length{
      {{20, 100}, {20, 100}, {20, 100}, {20, 100}}};
};

// Deterministic function of (seed, problem id, strategy, run): correct
// executions answer the gold answer, incorrect ones draw from a small
// pool of wrong answers so that wrong strategies occasionally agree.
class SyntheticExecutor : public Executor {
 public:
  SyntheticExecutor(uint64_t seed, std::vector<SyntheticRule> rules);
  ExecutorResult execute(StrategyId strategy, const ProblemInstance& problem,
                         uint32_t run) override;

 private:
  const SyntheticRule& rule_for(const ProblemInstance& problem) const;

  uint64_t seed_;
  std::vector<SyntheticRule> rules_;
  SyntheticRule fallback_;
};

struct RemoteEndpointConfig {
  std::string base_url;
  std::string template_id;
  int timeout_ms = 5000;
  int max_retries = 2;
  std::string auth_env;     // environment variable holding the bearer token
  int max_concurrency = 4;  // per-endpoint in-flight request cap

  void validate() const;
};

// Single request/response exchange per execution:
//   POST /execute {"problem_id", "text", "strategy", "template_id"}
//   200 -> {"answer": string, "token_count": integer (optional)}
// Timing is measured client-side around the successful attempt.
class RemoteExecutor : public Executor {
 public:
  explicit RemoteExecutor(RemoteEndpointConfig config);
  ~RemoteExecutor() override;
  ExecutorResult execute(StrategyId strategy, const ProblemInstance& problem,
                         uint32_t run) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

class ExecutorRegistry {
 public:
  void bind(StrategyId strategy, std::shared_ptr<Executor> executor);
  bool fully_bound() const;
  std::vector<StrategyId> unbound_strategies() const;

  // Throws ExecutorError when the strategy has no binding.
  ExecutorResult execute(StrategyId strategy, const ProblemInstance& problem, uint32_t run = 0);

  // Config file: JSON object mapping "NLR"/"CAR"/"TIR"/"EBR" (or "all") to
  // a binding {"kind": "replay"|"synthetic"|"remote", ...}.
  static ExecutorRegistry from_config_file(const std::filesystem::path& path);

 private:
  std::array<std::shared_ptr<Executor>, kNumStrategies> bindings_;
};

}  // namespace stratroute
