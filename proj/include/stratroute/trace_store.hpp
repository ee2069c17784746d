#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stratroute/core.hpp"

namespace stratroute {

struct TraceMetadata {
  std::string length_unit = "tokens";
  std::string source_model;
  std::string creation_time;  // passthrough; preserved verbatim on save

  bool operator==(const TraceMetadata&) const = default;
};

// A validated, immutable collection of multi-strategy execution traces.
// At most one trace per (problem, strategy) pair; every trace references
// a known problem.
class TraceStore {
 public:
  TraceStore() = default;

  static TraceStore load(const std::filesystem::path& path);

  // Validates and groups in-memory records. Problems referenced by traces
  // must all be present in `problems`.
  static TraceStore build(TraceMetadata metadata, std::vector<ProblemInstance> problems,
                          std::vector<StrategyTrace> traces);

  void save(const std::filesystem::path& path) const;
  std::string to_jsonl() const;

  const TraceMetadata& metadata() const { return metadata_; }
  const std::map<std::string, ProblemInstance>& problems() const { return problems_; }

  // Traces per problem, each group in canonical strategy order.
  const std::map<std::string, std::vector<StrategyTrace>>& groups() const { return groups_; }

  const StrategyTrace* find(const std::string& problem_id, StrategyId strategy) const;

  // Problems with all four strategy traces, sorted by id.
  std::vector<std::string> complete_group_ids() const;
  size_t incomplete_group_count() const;

  size_t trace_count() const;

  bool operator==(const TraceStore&) const;

 private:
  TraceMetadata metadata_;
  std::map<std::string, ProblemInstance> problems_;
  std::map<std::string, std::vector<StrategyTrace>> groups_;
};

// Problems file: one JSON object per line with fields problem_id, text,
// optional gold_answer, optional tags.
std::vector<ProblemInstance> load_problems(const std::filesystem::path& path);
void save_problems(const std::filesystem::path& path, const std::vector<ProblemInstance>& problems);

}  // namespace stratroute
