#pragma once

#include <filesystem>
#include <vector>

#include "stratroute/core.hpp"
#include "stratroute/executors.hpp"
#include "stratroute/router.hpp"

namespace stratroute {

struct GridSpec {
  double tau_c_low = 0.10;
  double tau_c_high = 0.70;
  double tau_c_step = 0.05;
  double tau_a_low = 0.02;
  double tau_a_high = 0.20;
  double tau_a_step = 0.01;

  std::vector<double> tau_c_values() const;
  std::vector<double> tau_a_values() const;
  void validate() const;  // low < high, step > 0, at least 2 points per axis
};

struct CalibrationResult {
  double best_tau_c = 0.0;
  double best_tau_a = 0.0;
  double best_accuracy = 0.0;
  std::vector<double> tau_c_values;
  std::vector<double> tau_a_values;
  // accuracy[i][j] at (tau_c_values[i], tau_a_values[j])
  std::vector<std::vector<double>> accuracy;
  // mean strategies executed per problem, same shape
  std::vector<std::vector<double>> mean_cost;
};

// Pass@1 over the validation set at every grid point. Per-problem executor
// outputs are cached so each strategy runs at most once per problem across
// the whole search. The best point maximizes accuracy; ties prefer lower
// mean cost, then lexicographically smaller (tau_c, tau_a).
CalibrationResult grid_search(const std::vector<ProblemInstance>& validation,
                              const Predictor& predictor, ExecutorRegistry& executors,
                              const GridSpec& grid, int jobs = 1);

CalibrationResult grid_search(const std::vector<ProblemInstance>& validation,
                              const AdapterModel& model, ExecutorRegistry& executors,
                              const GridSpec& grid, int jobs = 1);

// Matrix as comma-separated text: first row lists tau_a values, each data
// row starts with its tau_c value.
std::string surface_to_csv(const std::vector<double>& tau_c_values,
                           const std::vector<double>& tau_a_values,
                           const std::vector<std::vector<double>>& surface);

void save_surface(const std::filesystem::path& path, const CalibrationResult& result);

}  // namespace stratroute
