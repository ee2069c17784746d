#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stratroute/errors.hpp"

namespace stratroute {

// The four reasoning strategy families. The enum values fix the canonical
// ordering used everywhere (serialization, tie-breaking, matrix layout).
enum class StrategyId : int { NLR = 0, CAR = 1, TIR = 2, EBR = 3 };

inline constexpr int kNumStrategies = 4;

const std::array<StrategyId, kNumStrategies>& canonical_strategy_order();

inline int strategy_index(StrategyId s) { return static_cast<int>(s); }
StrategyId strategy_at(int index);

const std::string& to_string(StrategyId s);
std::optional<StrategyId> strategy_from_string(std::string_view name);

struct ProblemInstance {
  std::string id;
  std::string text;
  std::optional<std::string> gold_answer;
  std::vector<std::string> tags;

  bool operator==(const ProblemInstance&) const = default;
};

struct StrategyTrace {
  std::string problem_id;
  StrategyId strategy = StrategyId::NLR;
  std::string raw_answer;
  int correct = 0;           // {0, 1}
  double quality = 0.0;      // [0, 1]
  double time_ms = 0.0;      // >= 0
  int64_t output_length = 0; // >= 0, unit fixed per dataset

  bool operator==(const StrategyTrace&) const = default;
};

// Throws DataError naming the offending field when a range constraint fails.
void validate_trace(const StrategyTrace& trace);

// A probability distribution over the four strategies, in canonical order.
// Construction enforces nonnegativity and sum-to-one (within 1e-9).
class StrategyDistribution {
 public:
  // Uniform distribution.
  StrategyDistribution() : probs_{0.25, 0.25, 0.25, 0.25} {}

  explicit StrategyDistribution(const std::array<double, kNumStrategies>& probs);

  // Stabilized softmax of raw logits (max subtracted before exponentiation).
  static StrategyDistribution softmax(const std::array<double, kNumStrategies>& logits);

  double operator[](StrategyId s) const { return probs_[strategy_index(s)]; }
  double at(int index) const { return probs_[static_cast<size_t>(index)]; }
  const std::array<double, kNumStrategies>& probs() const { return probs_; }

  // Highest-probability strategy; equal probabilities resolve to the
  // earlier strategy in canonical order.
  StrategyId argmax() const;

  // (top-1, top-2) under the same tie rule.
  std::pair<StrategyId, StrategyId> top_two() const;

  bool operator==(const StrategyDistribution&) const = default;

 private:
  std::array<double, kNumStrategies> probs_;
};

// Per-strategy signals backing one suitability score.
struct StrategySignals {
  double corr = 0.0;
  double qual = 0.0;
  double eff = 0.0;
  double score = 0.0;
};

struct SuitabilityRecord {
  std::string problem_id;
  std::array<StrategySignals, kNumStrategies> per_strategy;
  StrategyDistribution target;
  StrategyId best_strategy = StrategyId::NLR;
};

}  // namespace stratroute
