#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "stratroute/core.hpp"
#include "stratroute/trace_store.hpp"

namespace stratroute {

using StrategyValues = std::array<double, kNumStrategies>;

// Weights aggregating correctness, process quality, and efficiency into one
// suitability score. All nonnegative, at least one strictly positive.
struct ScoreWeights {
  double w_correct = 0.6;
  double w_quality = 0.2;
  double w_efficiency = 0.2;

  void validate() const;
};

struct ProfilerConfig {
  ScoreWeights weights;
  double temperature = 0.5;
  double epsilon = 1e-8;

  void validate() const;
};

// Per-instance min-max scaling: (v - min) / (max - min + epsilon).
// All-equal inputs map to all zeros (zero numerator over epsilon).
StrategyValues minmax_normalize(const StrategyValues& values, double epsilon);

// eff(s) = 1 - (normalized_time(s) + normalized_length(s)) / 2, in (0, 1].
StrategyValues efficiency_scores(const StrategyValues& times, const StrategyValues& lengths,
                                 double epsilon);

StrategyValues suitability_scores(const StrategyValues& corr, const StrategyValues& qual,
                                  const StrategyValues& eff, const ScoreWeights& weights);

// Temperature-scaled softmax over the four scores.
StrategyDistribution target_distribution(const StrategyValues& scores, double temperature);

struct BuildStats {
  size_t complete_groups = 0;
  size_t incomplete_groups = 0;
};

// One SuitabilityRecord per complete trace group, sorted by problem id.
// Incomplete groups are skipped and counted in `stats`.
std::vector<SuitabilityRecord> build_dataset(const TraceStore& store, const ProfilerConfig& config,
                                             BuildStats* stats = nullptr);

// Dataset file row: a SuitabilityRecord plus the problem text (needed for
// adapter training) and gold answer.
struct DatasetRow {
  SuitabilityRecord record;
  std::string text;
  std::optional<std::string> gold_answer;
};

void save_dataset(const std::filesystem::path& path, const std::vector<SuitabilityRecord>& records,
                  const TraceStore& store);
std::vector<DatasetRow> load_dataset(const std::filesystem::path& path);

}  // namespace stratroute
