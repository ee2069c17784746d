#include "stratroute/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <thread>

#include "stratroute/aggregation.hpp"
#include "stratroute/util.hpp"

namespace stratroute {

namespace {

std::vector<double> axis_values(double low, double high, double step) {
  std::vector<double> values;
  const auto count = static_cast<size_t>(std::floor((high - low) / step + 1.0 + 1e-9));
  values.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    // Snap accumulated floating error so headers print cleanly.
    const double v = std::round((low + static_cast<double>(i) * step) * 1e9) / 1e9;
    values.push_back(v);
  }
  return values;
}

}  // namespace

std::vector<double> GridSpec::tau_c_values() const {
  return axis_values(tau_c_low, tau_c_high, tau_c_step);
}

std::vector<double> GridSpec::tau_a_values() const {
  return axis_values(tau_a_low, tau_a_high, tau_a_step);
}

void GridSpec::validate() const {
  for (double v : {tau_c_low, tau_c_high, tau_c_step, tau_a_low, tau_a_high, tau_a_step}) {
    if (!std::isfinite(v)) throw DataError("grid spec has a non-finite value");
  }
  if (tau_c_low >= tau_c_high || tau_a_low >= tau_a_high) {
    throw DataError("grid spec: low must be less than high");
  }
  if (tau_c_step <= 0.0 || tau_a_step <= 0.0) throw DataError("grid spec: step must be > 0");
  if (tau_c_values().size() < 2 || tau_a_values().size() < 2) {
    throw DataError("grid spec: each axis needs at least 2 points");
  }
}

namespace {

// Shared per-(problem, strategy) executor output cache.
class ExecutionCache {
 public:
  ExecutionCache(const std::vector<ProblemInstance>& problems, ExecutorRegistry& executors)
      : problems_(problems), executors_(executors),
        results_(problems.size() * kNumStrategies), filled_(problems.size() * kNumStrategies, false) {}

  // The lock is held across the executor call so a strategy never runs
  // twice for one problem, even with parallel grid workers.
  const ExecutorResult& get(size_t problem_index, StrategyId strategy) {
    const size_t slot = problem_index * kNumStrategies +
                        static_cast<size_t>(strategy_index(strategy));
    std::lock_guard lock(mu_);
    if (!filled_[slot]) {
      results_[slot] = executors_.execute(strategy, problems_[problem_index], /*run=*/0);
      filled_[slot] = true;
    }
    return results_[slot];
  }

 private:
  const std::vector<ProblemInstance>& problems_;
  ExecutorRegistry& executors_;
  std::vector<ExecutorResult> results_;
  std::vector<char> filled_;
  std::mutex mu_;
};

struct CellOutcome {
  double accuracy = 0.0;
  double mean_cost = 0.0;
};

CellOutcome evaluate_cell(const std::vector<ProblemInstance>& problems,
                          const std::vector<StrategyDistribution>& predictions,
                          const std::vector<std::string>& gold_canonicals, ExecutionCache& cache,
                          double tau_c, double tau_a) {
  RoutingConfig config;
  config.tau_c = tau_c;
  config.tau_a = tau_a;

  size_t correct = 0;
  size_t executed_total = 0;
  for (size_t i = 0; i < problems.size(); ++i) {
    const ModeDecision decision = decide_mode(predictions[i], config);
    executed_total += decision.strategies.size();

    std::map<StrategyId, std::string> answers;
    for (StrategyId s : decision.strategies) {
      const ExecutorResult& r = cache.get(i, s);
      if (r.succeeded) answers[s] = r.raw_answer;
    }
    if (answers.empty()) continue;  // total failure counts as incorrect
    const std::string final_answer = vote(answers, predictions[i]);
    if (final_answer == gold_canonicals[i]) ++correct;
  }
  CellOutcome out;
  const auto n = static_cast<double>(problems.size());
  out.accuracy = static_cast<double>(correct) / n;
  out.mean_cost = static_cast<double>(executed_total) / n;
  return out;
}

}  // namespace

CalibrationResult grid_search(const std::vector<ProblemInstance>& validation,
                              const Predictor& predictor, ExecutorRegistry& executors,
                              const GridSpec& grid, int jobs) {
  grid.validate();
  if (validation.empty()) throw DataError("grid_search: empty validation set");
  if (!executors.fully_bound()) {
    throw DataError("grid_search: all four strategies must be bound");
  }
  for (const ProblemInstance& p : validation) {
    if (!p.gold_answer) {
      throw DataError("grid_search: problem \"" + p.id + "\" has no gold answer");
    }
  }

  std::vector<StrategyDistribution> predictions;
  std::vector<std::string> gold_canonicals;
  predictions.reserve(validation.size());
  gold_canonicals.reserve(validation.size());
  for (const ProblemInstance& p : validation) {
    predictions.push_back(predictor(p));
    gold_canonicals.push_back(standardize(*p.gold_answer).canonical);
  }

  CalibrationResult result;
  result.tau_c_values = grid.tau_c_values();
  result.tau_a_values = grid.tau_a_values();
  const size_t rows = result.tau_c_values.size();
  const size_t cols = result.tau_a_values.size();
  result.accuracy.assign(rows, std::vector<double>(cols, 0.0));
  result.mean_cost.assign(rows, std::vector<double>(cols, 0.0));

  ExecutionCache cache(validation, executors);

  const auto evaluate_rows = [&](size_t row_begin, size_t row_end) {
    for (size_t i = row_begin; i < row_end; ++i) {
      for (size_t j = 0; j < cols; ++j) {
        const CellOutcome cell =
            evaluate_cell(validation, predictions, gold_canonicals, cache,
                          result.tau_c_values[i], result.tau_a_values[j]);
        result.accuracy[i][j] = cell.accuracy;
        result.mean_cost[i][j] = cell.mean_cost;
      }
    }
  };

  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(rows)));
  if (workers == 1) {
    evaluate_rows(0, rows);
  } else {
    std::vector<std::thread> threads;
    const size_t chunk = (rows + static_cast<size_t>(workers) - 1) / static_cast<size_t>(workers);
    for (int w = 0; w < workers; ++w) {
      const size_t begin = static_cast<size_t>(w) * chunk;
      const size_t end = std::min(rows, begin + chunk);
      if (begin >= end) break;
      threads.emplace_back(evaluate_rows, begin, end);
    }
    for (auto& t : threads) t.join();
  }

  // Max accuracy; ties prefer lower cost, then smaller (tau_c, tau_a).
  size_t best_i = 0;
  size_t best_j = 0;
  for (size_t i = 0; i < rows; ++i) {
    for (size_t j = 0; j < cols; ++j) {
      const double acc = result.accuracy[i][j];
      const double best_acc = result.accuracy[best_i][best_j];
      if (acc > best_acc ||
          (acc == best_acc && result.mean_cost[i][j] < result.mean_cost[best_i][best_j])) {
        best_i = i;
        best_j = j;
      }
    }
  }
  result.best_tau_c = result.tau_c_values[best_i];
  result.best_tau_a = result.tau_a_values[best_j];
  result.best_accuracy = result.accuracy[best_i][best_j];
  return result;
}

CalibrationResult grid_search(const std::vector<ProblemInstance>& validation,
                              const AdapterModel& model, ExecutorRegistry& executors,
                              const GridSpec& grid, int jobs) {
  return grid_search(
      validation, [&model](const ProblemInstance& p) { return model.predict(p); }, executors, grid,
      jobs);
}

std::string surface_to_csv(const std::vector<double>& tau_c_values,
                           const std::vector<double>& tau_a_values,
                           const std::vector<std::vector<double>>& surface) {
  std::string out = "tau_c\\tau_a";
  for (double a : tau_a_values) {
    out += ',';
    out += format_double(a);
  }
  out += '\n';
  for (size_t i = 0; i < tau_c_values.size(); ++i) {
    out += format_double(tau_c_values[i]);
    for (size_t j = 0; j < tau_a_values.size(); ++j) {
      out += ',';
      out += format_double(surface[i][j]);
    }
    out += '\n';
  }
  return out;
}

void save_surface(const std::filesystem::path& path, const CalibrationResult& result) {
  write_text_file_atomic(path,
                         surface_to_csv(result.tau_c_values, result.tau_a_values, result.accuracy));
}

}  // namespace stratroute
