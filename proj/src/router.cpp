#include "stratroute/router.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "stratroute/aggregation.hpp"
#include "stratroute/util.hpp"

namespace stratroute {

using nlohmann::json;

void RoutingConfig::validate() const {
  for (double t : {tau_c, tau_a}) {
    if (!std::isfinite(t) || t <= 0.0 || t >= 1.0) {
      throw DataError("routing thresholds must lie in (0, 1)");
    }
  }
}

const std::string& to_string(RoutingMode m) {
  static const std::array<std::string, 3> names = {"Confident", "Deliberative", "Exploratory"};
  return names[static_cast<size_t>(m)];
}

std::optional<RoutingMode> routing_mode_from_string(std::string_view name) {
  for (RoutingMode m : {RoutingMode::Confident, RoutingMode::Deliberative, RoutingMode::Exploratory}) {
    if (name == to_string(m)) return m;
  }
  return std::nullopt;
}

ModeDecision decide_mode(const StrategyDistribution& distribution, const RoutingConfig& config) {
  config.validate();
  const auto [top1, top2] = distribution.top_two();
  const double p_max = distribution[top1];
  const double p_2nd = distribution[top2];

  ModeDecision decision;
  if (p_max >= config.tau_c) {
    if (p_max - p_2nd >= config.tau_a) {
      decision.mode = RoutingMode::Confident;
      decision.strategies = {top1};
    } else {
      decision.mode = RoutingMode::Deliberative;
      decision.strategies = {top1, top2};
    }
  } else {
    decision.mode = RoutingMode::Exploratory;
    decision.strategies.assign(canonical_strategy_order().begin(),
                               canonical_strategy_order().end());
  }
  return decision;
}

namespace {

// Dispatches the decided strategies, votes over the successes, and fills in
// the cost accounting.
RoutingDecision execute_decision(const ProblemInstance& problem,
                                 const StrategyDistribution& distribution,
                                 const ModeDecision& decision, ExecutorRegistry& executors,
                                 uint32_t run) {
  RoutingDecision out;
  out.problem_id = problem.id;
  out.run = run;
  out.mode = decision.mode;
  out.distribution = distribution;
  out.executed = decision.strategies;

  for (StrategyId s : decision.strategies) {
    const ExecutorResult result = executors.execute(s, problem, run);
    out.total_time_ms += result.time_ms;
    out.max_time_ms = std::max(out.max_time_ms, result.time_ms);
    if (result.succeeded) {
      out.answers[s] = result.raw_answer;
      out.total_output_length += result.output_length;
    } else {
      out.failed.push_back(s);
    }
  }

  if (out.answers.empty()) {
    out.solved = false;
    return out;
  }
  out.final_answer = vote(out.answers, distribution);
  return out;
}

}  // namespace

RoutingDecision route_lenient(const ProblemInstance& problem, const Predictor& predictor,
                              const RoutingConfig& config, ExecutorRegistry& executors,
                              uint32_t run) {
  config.validate();
  const StrategyDistribution distribution = predictor(problem);
  const ModeDecision decision = decide_mode(distribution, config);

  RoutingDecision out = execute_decision(problem, distribution, decision, executors, run);
  if (!out.solved && decision.mode == RoutingMode::Confident && config.fallback_to_exploratory) {
    ModeDecision fallback;
    fallback.mode = RoutingMode::Exploratory;
    fallback.strategies.assign(canonical_strategy_order().begin(),
                               canonical_strategy_order().end());
    RoutingDecision retried = execute_decision(problem, distribution, fallback, executors, run);
    // Keep the original failure visible in the record.
    for (StrategyId s : out.failed) {
      if (std::find(retried.failed.begin(), retried.failed.end(), s) == retried.failed.end()) {
        retried.failed.push_back(s);
      }
    }
    std::sort(retried.failed.begin(), retried.failed.end(),
              [](StrategyId a, StrategyId b) { return strategy_index(a) < strategy_index(b); });
    return retried;
  }
  return out;
}

RoutingDecision route(const ProblemInstance& problem, const Predictor& predictor,
                      const RoutingConfig& config, ExecutorRegistry& executors, uint32_t run) {
  RoutingDecision out = route_lenient(problem, predictor, config, executors, run);
  if (!out.solved) {
    std::string names;
    for (StrategyId s : out.failed) {
      if (!names.empty()) names += ", ";
      names += to_string(s);
    }
    throw ExecutorError("strategy execution failed for problem " + problem.id + " (" + names +
                        ")");
  }
  return out;
}

RoutingDecision route(const ProblemInstance& problem, const AdapterModel& model,
                      const RoutingConfig& config, ExecutorRegistry& executors, uint32_t run) {
  return route(
      problem, [&model](const ProblemInstance& p) { return model.predict(p); }, config, executors,
      run);
}

std::string decisions_to_jsonl(const std::vector<RoutingDecision>& decisions) {
  std::string out;
  for (const RoutingDecision& d : decisions) {
    json j;
    j["problem_id"] = d.problem_id;
    j["run"] = d.run;
    j["mode"] = to_string(d.mode);
    j["distribution"] = d.distribution.probs();
    json executed = json::array();
    for (StrategyId s : d.executed) executed.push_back(to_string(s));
    j["executed"] = executed;
    json answers = json::object();
    for (const auto& [s, a] : d.answers) answers[to_string(s)] = a;
    j["answers"] = answers;
    if (!d.failed.empty()) {
      json failed = json::array();
      for (StrategyId s : d.failed) failed.push_back(to_string(s));
      j["failed"] = failed;
    }
    j["solved"] = d.solved;
    j["final_answer"] = d.final_answer;
    j["total_time_ms"] = d.total_time_ms;
    j["max_time_ms"] = d.max_time_ms;
    j["total_output_length"] = d.total_output_length;
    out += j.dump();
    out += '\n';
  }
  return out;
}

void save_decisions(const std::filesystem::path& path,
                    const std::vector<RoutingDecision>& decisions) {
  write_text_file_atomic(path, decisions_to_jsonl(decisions));
}

std::vector<RoutingDecision> load_decisions(const std::filesystem::path& path) {
  const std::string content = read_text_file(path);
  std::istringstream in(content);
  std::vector<RoutingDecision> decisions;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim_view(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw DataError("decisions line " + std::to_string(line_no) + ": not a valid JSON object");
    }
    try {
      RoutingDecision d;
      d.problem_id = j.at("problem_id").get<std::string>();
      d.run = j.value("run", 0u);
      const auto mode = routing_mode_from_string(j.at("mode").get<std::string>());
      if (!mode) throw DataError("unknown routing mode");
      d.mode = *mode;
      std::array<double, kNumStrategies> probs{};
      for (int i = 0; i < kNumStrategies; ++i) {
        probs[static_cast<size_t>(i)] = j.at("distribution").at(static_cast<size_t>(i)).get<double>();
      }
      d.distribution = StrategyDistribution(probs);
      for (const json& name : j.at("executed")) {
        const auto s = strategy_from_string(name.get<std::string>());
        if (!s) throw DataError("unknown strategy in executed list");
        d.executed.push_back(*s);
      }
      for (auto it = j.at("answers").begin(); it != j.at("answers").end(); ++it) {
        const auto s = strategy_from_string(it.key());
        if (!s) throw DataError("unknown strategy in answers");
        d.answers[*s] = it.value().get<std::string>();
      }
      if (j.contains("failed")) {
        for (const json& name : j["failed"]) {
          const auto s = strategy_from_string(name.get<std::string>());
          if (!s) throw DataError("unknown strategy in failed list");
          d.failed.push_back(*s);
        }
      }
      d.solved = j.value("solved", true);
      d.final_answer = j.at("final_answer").get<std::string>();
      d.total_time_ms = j.at("total_time_ms").get<double>();
      d.max_time_ms = j.value("max_time_ms", 0.0);
      d.total_output_length = j.at("total_output_length").get<int64_t>();
      decisions.push_back(std::move(d));
    } catch (const json::exception& e) {
      throw DataError("decisions line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("decisions line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return decisions;
}

}  // namespace stratroute
