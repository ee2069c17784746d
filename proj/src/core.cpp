#include "stratroute/core.hpp"

#include <algorithm>
#include <cmath>

namespace stratroute {

const std::array<StrategyId, kNumStrategies>& canonical_strategy_order() {
  static const std::array<StrategyId, kNumStrategies> order = {
      StrategyId::NLR, StrategyId::CAR, StrategyId::TIR, StrategyId::EBR};
  return order;
}

StrategyId strategy_at(int index) {
  if (index < 0 || index >= kNumStrategies) {
    throw DataError("strategy index out of range: " + std::to_string(index));
  }
  return static_cast<StrategyId>(index);
}

const std::string& to_string(StrategyId s) {
  static const std::array<std::string, kNumStrategies> names = {"NLR", "CAR", "TIR", "EBR"};
  return names[static_cast<size_t>(strategy_index(s))];
}

std::optional<StrategyId> strategy_from_string(std::string_view name) {
  for (StrategyId s : canonical_strategy_order()) {
    if (name == to_string(s)) return s;
  }
  return std::nullopt;
}

void validate_trace(const StrategyTrace& trace) {
  if (trace.problem_id.empty()) {
    throw DataError("trace has empty problem_id");
  }
  if (trace.correct != 0 && trace.correct != 1) {
    throw DataError("trace " + trace.problem_id + "/" + to_string(trace.strategy) +
                    ": correct must be 0 or 1, got " + std::to_string(trace.correct));
  }
  if (!std::isfinite(trace.quality) || trace.quality < 0.0 || trace.quality > 1.0) {
    throw DataError("trace " + trace.problem_id + "/" + to_string(trace.strategy) +
                    ": quality out of range [0,1]");
  }
  if (!std::isfinite(trace.time_ms) || trace.time_ms < 0.0) {
    throw DataError("trace " + trace.problem_id + "/" + to_string(trace.strategy) +
                    ": time_ms must be nonnegative");
  }
  if (trace.output_length < 0) {
    throw DataError("trace " + trace.problem_id + "/" + to_string(trace.strategy) +
                    ": output_length must be nonnegative");
  }
}

StrategyDistribution::StrategyDistribution(const std::array<double, kNumStrategies>& probs)
    : probs_(probs) {
  double sum = 0.0;
  for (double p : probs_) {
    if (!std::isfinite(p) || p < 0.0) {
      throw DataError("distribution probability must be finite and nonnegative");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw DataError("distribution does not sum to 1 (sum=" + std::to_string(sum) + ")");
  }
}

StrategyDistribution StrategyDistribution::softmax(
    const std::array<double, kNumStrategies>& logits) {
  const double zmax = *std::max_element(logits.begin(), logits.end());
  std::array<double, kNumStrategies> e{};
  double sum = 0.0;
  for (int i = 0; i < kNumStrategies; ++i) {
    e[static_cast<size_t>(i)] = std::exp(logits[static_cast<size_t>(i)] - zmax);
    sum += e[static_cast<size_t>(i)];
  }
  for (double& v : e) v /= sum;
  return StrategyDistribution(e);
}

StrategyId StrategyDistribution::argmax() const {
  int best = 0;
  for (int i = 1; i < kNumStrategies; ++i) {
    if (probs_[static_cast<size_t>(i)] > probs_[static_cast<size_t>(best)]) best = i;
  }
  return static_cast<StrategyId>(best);
}

std::pair<StrategyId, StrategyId> StrategyDistribution::top_two() const {
  const int first = strategy_index(argmax());
  int second = -1;
  for (int i = 0; i < kNumStrategies; ++i) {
    if (i == first) continue;
    if (second < 0 || probs_[static_cast<size_t>(i)] > probs_[static_cast<size_t>(second)]) {
      second = i;
    }
  }
  return {static_cast<StrategyId>(first), static_cast<StrategyId>(second)};
}

}  // namespace stratroute
