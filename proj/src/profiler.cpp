#include "stratroute/profiler.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "stratroute/util.hpp"

namespace stratroute {

using nlohmann::json;

void ScoreWeights::validate() const {
  for (double w : {w_correct, w_quality, w_efficiency}) {
    if (!std::isfinite(w) || w < 0.0) {
      throw DataError("score weights must be finite and nonnegative");
    }
  }
  if (w_correct + w_quality + w_efficiency <= 0.0) {
    throw DataError("at least one score weight must be strictly positive");
  }
}

void ProfilerConfig::validate() const {
  weights.validate();
  if (!std::isfinite(temperature) || temperature <= 0.0) {
    throw DataError("temperature must be > 0");
  }
  if (!std::isfinite(epsilon) || epsilon <= 0.0) {
    throw DataError("epsilon must be > 0");
  }
}

StrategyValues minmax_normalize(const StrategyValues& values, double epsilon) {
  for (double v : values) {
    if (!std::isfinite(v)) throw DataError("minmax_normalize: non-finite input");
  }
  const double lo = *std::min_element(values.begin(), values.end());
  const double hi = *std::max_element(values.begin(), values.end());
  StrategyValues out{};
  for (int i = 0; i < kNumStrategies; ++i) {
    out[static_cast<size_t>(i)] = (values[static_cast<size_t>(i)] - lo) / (hi - lo + epsilon);
  }
  return out;
}

StrategyValues efficiency_scores(const StrategyValues& times, const StrategyValues& lengths,
                                 double epsilon) {
  const StrategyValues t_hat = minmax_normalize(times, epsilon);
  const StrategyValues l_hat = minmax_normalize(lengths, epsilon);
  StrategyValues eff{};
  for (int i = 0; i < kNumStrategies; ++i) {
    eff[static_cast<size_t>(i)] =
        1.0 - 0.5 * (t_hat[static_cast<size_t>(i)] + l_hat[static_cast<size_t>(i)]);
  }
  return eff;
}

StrategyValues suitability_scores(const StrategyValues& corr, const StrategyValues& qual,
                                  const StrategyValues& eff, const ScoreWeights& weights) {
  StrategyValues scores{};
  for (int i = 0; i < kNumStrategies; ++i) {
    const auto s = static_cast<size_t>(i);
    scores[s] = weights.w_correct * corr[s] + weights.w_quality * qual[s] +
                weights.w_efficiency * eff[s];
  }
  return scores;
}

StrategyDistribution target_distribution(const StrategyValues& scores, double temperature) {
  if (!(temperature > 0.0)) throw DataError("temperature must be > 0");
  StrategyValues logits{};
  for (int i = 0; i < kNumStrategies; ++i) {
    const auto s = static_cast<size_t>(i);
    if (!std::isfinite(scores[s])) throw DataError("target_distribution: non-finite score");
    logits[s] = scores[s] / temperature;
  }
  return StrategyDistribution::softmax(logits);
}

namespace {

StrategyId best_of(const StrategyValues& scores) {
  int best = 0;
  for (int i = 1; i < kNumStrategies; ++i) {
    if (scores[static_cast<size_t>(i)] > scores[static_cast<size_t>(best)]) best = i;
  }
  return static_cast<StrategyId>(best);
}

}  // namespace

std::vector<SuitabilityRecord> build_dataset(const TraceStore& store, const ProfilerConfig& config,
                                             BuildStats* stats) {
  config.validate();
  std::vector<SuitabilityRecord> records;
  const auto complete = store.complete_group_ids();
  for (const std::string& problem_id : complete) {
    const auto& group = store.groups().at(problem_id);
    StrategyValues corr{}, qual{}, times{}, lengths{};
    for (const StrategyTrace& t : group) {
      const auto s = static_cast<size_t>(strategy_index(t.strategy));
      corr[s] = static_cast<double>(t.correct);
      qual[s] = t.quality;
      times[s] = t.time_ms;
      lengths[s] = static_cast<double>(t.output_length);
    }
    const StrategyValues eff = efficiency_scores(times, lengths, config.epsilon);
    const StrategyValues scores = suitability_scores(corr, qual, eff, config.weights);

    SuitabilityRecord rec;
    rec.problem_id = problem_id;
    for (int i = 0; i < kNumStrategies; ++i) {
      const auto s = static_cast<size_t>(i);
      rec.per_strategy[s] = StrategySignals{corr[s], qual[s], eff[s], scores[s]};
    }
    rec.target = target_distribution(scores, config.temperature);
    rec.best_strategy = best_of(scores);
    records.push_back(std::move(rec));
  }
  if (stats != nullptr) {
    stats->complete_groups = complete.size();
    stats->incomplete_groups = store.incomplete_group_count();
  }
  return records;
}

void save_dataset(const std::filesystem::path& path, const std::vector<SuitabilityRecord>& records,
                  const TraceStore& store) {
  std::string out;
  for (const SuitabilityRecord& rec : records) {
    json j;
    j["problem_id"] = rec.problem_id;
    const auto it = store.problems().find(rec.problem_id);
    if (it == store.problems().end()) {
      throw DataError("dataset record references unknown problem \"" + rec.problem_id + "\"");
    }
    j["text"] = it->second.text;
    if (it->second.gold_answer) j["gold_answer"] = *it->second.gold_answer;
    json per;
    for (StrategyId s : canonical_strategy_order()) {
      const StrategySignals& sig = rec.per_strategy[static_cast<size_t>(strategy_index(s))];
      per[to_string(s)] = {
          {"corr", sig.corr}, {"qual", sig.qual}, {"eff", sig.eff}, {"score", sig.score}};
    }
    j["per_strategy"] = per;
    j["target"] = rec.target.probs();
    j["best_strategy"] = to_string(rec.best_strategy);
    out += j.dump();
    out += '\n';
  }
  write_text_file_atomic(path, out);
}

std::vector<DatasetRow> load_dataset(const std::filesystem::path& path) {
  const std::string content = read_text_file(path);
  std::istringstream in(content);
  std::vector<DatasetRow> rows;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim_view(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw DataError("line " + std::to_string(line_no) + ": not a valid JSON object");
    }
    try {
      DatasetRow row;
      row.record.problem_id = j.at("problem_id").get<std::string>();
      row.text = j.at("text").get<std::string>();
      if (j.contains("gold_answer")) row.gold_answer = j["gold_answer"].get<std::string>();
      for (StrategyId s : canonical_strategy_order()) {
        const json& sig = j.at("per_strategy").at(to_string(s));
        auto& dst = row.record.per_strategy[static_cast<size_t>(strategy_index(s))];
        dst.corr = sig.at("corr").get<double>();
        dst.qual = sig.at("qual").get<double>();
        dst.eff = sig.at("eff").get<double>();
        dst.score = sig.at("score").get<double>();
      }
      std::array<double, kNumStrategies> probs{};
      const json& target = j.at("target");
      if (!target.is_array() || target.size() != kNumStrategies) {
        throw DataError("target must be an array of 4 probabilities");
      }
      for (int i = 0; i < kNumStrategies; ++i) {
        probs[static_cast<size_t>(i)] = target[static_cast<size_t>(i)].get<double>();
      }
      row.record.target = StrategyDistribution(probs);
      const std::string best = j.at("best_strategy").get<std::string>();
      const auto strategy = strategy_from_string(best);
      if (!strategy) throw DataError("unknown best_strategy \"" + best + "\"");
      row.record.best_strategy = *strategy;
      rows.push_back(std::move(row));
    } catch (const json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

}  // namespace stratroute
