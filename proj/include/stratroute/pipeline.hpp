#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "stratroute/adapter.hpp"
#include "stratroute/calibrate.hpp"
#include "stratroute/evalkit.hpp"
#include "stratroute/profiler.hpp"
#include "stratroute/router.hpp"

namespace stratroute::pipeline {

inline constexpr const char* kToolVersion = "0.1.0";

// Every command writes `<out>.manifest.json` recording the resolved
// configuration, tool version, and timestamps.
void write_manifest(const std::filesystem::path& out_path, const std::string& command,
                    const std::string& config_snapshot_json);

struct ProfileOptions {
  std::filesystem::path traces_path;
  std::filesystem::path out_path;
  ProfilerConfig profiler;
  std::string config_snapshot_json;
};

struct ProfileSummary {
  size_t complete_groups = 0;
  size_t incomplete_groups = 0;
  std::array<double, kNumStrategies> mean_scores{};
};

ProfileSummary run_profile(const ProfileOptions& options);

struct TrainOptions {
  std::filesystem::path dataset_path;
  std::filesystem::path model_out;
  FeatureConfig features;
  TrainConfig train_config;
  std::string config_snapshot_json;
};

// Writes the model file and `<model>.losslog.jsonl`, returns the training
// summary (the model itself stays on disk).
struct TrainSummary {
  std::vector<double> epoch_loss;
  size_t train_count = 0;
  size_t val_count = 0;
  double train_top1_agreement = 0.0;
  double val_top1_agreement = 0.0;
};

TrainSummary run_train(const TrainOptions& options);

struct CalibrateOptions {
  std::filesystem::path validation_path;
  std::filesystem::path model_path;
  std::filesystem::path executors_path;
  std::filesystem::path out_path;  // result JSON; surfaces go to <out>.accuracy.csv / <out>.cost.csv
  GridSpec grid;
  int jobs = 1;
  std::string config_snapshot_json;
};

CalibrationResult run_calibrate(const CalibrateOptions& options);

struct RouteOptions {
  std::filesystem::path problems_path;
  std::filesystem::path model_path;
  std::filesystem::path executors_path;
  std::filesystem::path out_path;  // decisions JSONL
  RoutingConfig routing;
  int runs = 1;
  std::string config_snapshot_json;
};

struct RouteSummary {
  size_t decisions = 0;
  size_t unsolved = 0;
};

RouteSummary run_route(const RouteOptions& options);

struct EvalOptions {
  std::vector<std::filesystem::path> decisions_paths;
  std::filesystem::path problems_path;  // gold answers
  std::filesystem::path out_path;       // JSON report; text goes to <out>.txt
  std::vector<int> ks;
  std::string config_snapshot_json;
};

EvalReport run_eval(const EvalOptions& options);

struct SampleValidationOptions {
  std::filesystem::path problems_path;
  std::filesystem::path out_path;
  size_t sample_size = 200;
  uint64_t seed = 17;
  std::string config_snapshot_json;
};

// Stratified sample over the problems' first tag, proportional allocation
// with largest-remainder rounding.
size_t run_sample_validation(const SampleValidationOptions& options);

}  // namespace stratroute::pipeline
