#include "stratroute/trace_store.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <json.hpp>

#include "stratroute/util.hpp"

namespace stratroute {

using nlohmann::json;

namespace {

constexpr const char* kMetaId = "__meta__";

json parse_json_line(const std::string& line, size_t line_no) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw DataError("line " + std::to_string(line_no) + ": not a valid JSON object");
  }
  return j;
}

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed, size_t line_no) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw DataError("line " + std::to_string(line_no) + ": unknown field \"" + it.key() + "\"");
    }
  }
}

double require_number(const json& j, const char* key, size_t line_no) {
  if (!j.contains(key) || !j[key].is_number()) {
    throw DataError("line " + std::to_string(line_no) + ": missing or non-numeric field \"" +
                    key + "\"");
  }
  return j[key].get<double>();
}

std::string require_string(const json& j, const char* key, size_t line_no) {
  if (!j.contains(key) || !j[key].is_string()) {
    throw DataError("line " + std::to_string(line_no) + ": missing or non-string field \"" + key +
                    "\"");
  }
  return j[key].get<std::string>();
}

}  // namespace

TraceStore TraceStore::load(const std::filesystem::path& path) {
  const std::string content = read_text_file(path);
  std::istringstream in(content);

  TraceMetadata metadata;
  std::vector<ProblemInstance> problems;
  std::vector<StrategyTrace> traces;
  std::map<std::string, size_t> problem_index;

  std::string line;
  size_t line_no = 0;
  bool meta_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim_view(line).empty()) continue;
    json j = parse_json_line(line, line_no);

    const std::string problem_id = require_string(j, "problem_id", line_no);
    if (problem_id == kMetaId) {
      if (meta_seen) {
        throw DataError("line " + std::to_string(line_no) + ": duplicate metadata record");
      }
      reject_unknown_keys(
          j, {"problem_id", "length_unit", "source_model", "creation_time"}, line_no);
      meta_seen = true;
      if (j.contains("length_unit")) metadata.length_unit = j["length_unit"].get<std::string>();
      if (j.contains("source_model")) metadata.source_model = j["source_model"].get<std::string>();
      if (j.contains("creation_time")) {
        metadata.creation_time = j["creation_time"].get<std::string>();
      }
      continue;
    }

    reject_unknown_keys(j,
                        {"problem_id", "text", "gold_answer", "strategy", "raw_answer", "correct",
                         "quality", "time_ms", "output_length"},
                        line_no);

    const std::string strategy_name = require_string(j, "strategy", line_no);
    const auto strategy = strategy_from_string(strategy_name);
    if (!strategy) {
      throw DataError("line " + std::to_string(line_no) + ": unknown strategy \"" + strategy_name +
                      "\"");
    }

    StrategyTrace trace;
    trace.problem_id = problem_id;
    trace.strategy = *strategy;
    trace.raw_answer = require_string(j, "raw_answer", line_no);
    const double correct = require_number(j, "correct", line_no);
    if (correct != 0.0 && correct != 1.0) {
      throw DataError("line " + std::to_string(line_no) + ": correct must be 0 or 1");
    }
    trace.correct = static_cast<int>(correct);
    trace.quality = require_number(j, "quality", line_no);
    trace.time_ms = require_number(j, "time_ms", line_no);
    trace.output_length = static_cast<int64_t>(require_number(j, "output_length", line_no));
    try {
      validate_trace(trace);
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }

    auto it = problem_index.find(problem_id);
    if (it == problem_index.end()) {
      if (!j.contains("text")) {
        throw DataError("line " + std::to_string(line_no) + ": first record for \"" + problem_id +
                        "\" must carry the problem text");
      }
      ProblemInstance problem;
      problem.id = problem_id;
      problem.text = require_string(j, "text", line_no);
      if (problem.text.empty()) {
        throw DataError("line " + std::to_string(line_no) + ": empty problem text");
      }
      if (j.contains("gold_answer")) {
        problem.gold_answer = require_string(j, "gold_answer", line_no);
      }
      problem_index.emplace(problem_id, problems.size());
      problems.push_back(std::move(problem));
    } else if (j.contains("text")) {
      const std::string text = require_string(j, "text", line_no);
      if (text != problems[it->second].text) {
        throw DataError("line " + std::to_string(line_no) + ": conflicting text for \"" +
                        problem_id + "\"");
      }
    }
    traces.push_back(std::move(trace));
  }

  return build(std::move(metadata), std::move(problems), std::move(traces));
}

TraceStore TraceStore::build(TraceMetadata metadata, std::vector<ProblemInstance> problems,
                             std::vector<StrategyTrace> traces) {
  TraceStore store;
  store.metadata_ = std::move(metadata);
  for (auto& p : problems) {
    if (p.id.empty()) throw DataError("problem with empty id");
    if (p.text.empty()) throw DataError("problem \"" + p.id + "\" has empty text");
    const std::string id = p.id;
    if (!store.problems_.emplace(id, std::move(p)).second) {
      throw DataError("duplicate problem id \"" + id + "\"");
    }
  }
  for (auto& t : traces) {
    validate_trace(t);
    if (!store.problems_.count(t.problem_id)) {
      throw DataError("trace references unknown problem \"" + t.problem_id + "\"");
    }
    auto& group = store.groups_[t.problem_id];
    for (const auto& existing : group) {
      if (existing.strategy == t.strategy) {
        throw DataError("duplicate trace for (" + t.problem_id + ", " + to_string(t.strategy) +
                        ")");
      }
    }
    group.push_back(std::move(t));
  }
  for (auto& [_, group] : store.groups_) {
    std::sort(group.begin(), group.end(), [](const StrategyTrace& a, const StrategyTrace& b) {
      return strategy_index(a.strategy) < strategy_index(b.strategy);
    });
  }
  return store;
}

std::string TraceStore::to_jsonl() const {
  std::string out;
  json meta;
  meta["problem_id"] = kMetaId;
  meta["length_unit"] = metadata_.length_unit;
  if (!metadata_.source_model.empty()) meta["source_model"] = metadata_.source_model;
  if (!metadata_.creation_time.empty()) meta["creation_time"] = metadata_.creation_time;
  out += meta.dump();
  out += '\n';

  for (const auto& [problem_id, group] : groups_) {
    const ProblemInstance& problem = problems_.at(problem_id);
    bool first = true;
    for (const StrategyTrace& t : group) {
      json j;
      j["problem_id"] = t.problem_id;
      if (first) {
        j["text"] = problem.text;
        if (problem.gold_answer) j["gold_answer"] = *problem.gold_answer;
        first = false;
      }
      j["strategy"] = to_string(t.strategy);
      j["raw_answer"] = t.raw_answer;
      j["correct"] = t.correct;
      j["quality"] = t.quality;
      j["time_ms"] = t.time_ms;
      j["output_length"] = t.output_length;
      out += j.dump();
      out += '\n';
    }
  }
  return out;
}

void TraceStore::save(const std::filesystem::path& path) const {
  write_text_file_atomic(path, to_jsonl());
}

const StrategyTrace* TraceStore::find(const std::string& problem_id, StrategyId strategy) const {
  auto it = groups_.find(problem_id);
  if (it == groups_.end()) return nullptr;
  for (const StrategyTrace& t : it->second) {
    if (t.strategy == strategy) return &t;
  }
  return nullptr;
}

std::vector<std::string> TraceStore::complete_group_ids() const {
  std::vector<std::string> ids;
  for (const auto& [problem_id, group] : groups_) {
    if (group.size() == static_cast<size_t>(kNumStrategies)) ids.push_back(problem_id);
  }
  return ids;  // std::map iteration is already sorted by id
}

size_t TraceStore::incomplete_group_count() const {
  size_t n = 0;
  for (const auto& [_, group] : groups_) {
    if (group.size() < static_cast<size_t>(kNumStrategies)) ++n;
  }
  return n;
}

size_t TraceStore::trace_count() const {
  size_t n = 0;
  for (const auto& [_, group] : groups_) n += group.size();
  return n;
}

bool TraceStore::operator==(const TraceStore& other) const {
  return metadata_ == other.metadata_ && problems_ == other.problems_ && groups_ == other.groups_;
}

std::vector<ProblemInstance> load_problems(const std::filesystem::path& path) {
  const std::string content = read_text_file(path);
  std::istringstream in(content);
  std::vector<ProblemInstance> problems;
  std::set<std::string> seen;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim_view(line).empty()) continue;
    json j = parse_json_line(line, line_no);
    ProblemInstance p;
    p.id = require_string(j, "problem_id", line_no);
    p.text = require_string(j, "text", line_no);
    if (p.id.empty() || p.text.empty()) {
      throw DataError("line " + std::to_string(line_no) + ": problem_id and text must be non-empty");
    }
    if (!seen.insert(p.id).second) {
      throw DataError("line " + std::to_string(line_no) + ": duplicate problem id \"" + p.id +
                      "\"");
    }
    if (j.contains("gold_answer")) p.gold_answer = require_string(j, "gold_answer", line_no);
    if (j.contains("tags")) {
      if (!j["tags"].is_array()) {
        throw DataError("line " + std::to_string(line_no) + ": tags must be an array");
      }
      for (const auto& t : j["tags"]) p.tags.push_back(t.get<std::string>());
    }
    problems.push_back(std::move(p));
  }
  return problems;
}

void save_problems(const std::filesystem::path& path,
                   const std::vector<ProblemInstance>& problems) {
  std::string out;
  for (const ProblemInstance& p : problems) {
    json j;
    j["problem_id"] = p.id;
    j["text"] = p.text;
    if (p.gold_answer) j["gold_answer"] = *p.gold_answer;
    if (!p.tags.empty()) j["tags"] = p.tags;
    out += j.dump();
    out += '\n';
  }
  write_text_file_atomic(path, out);
}

}  // namespace stratroute
