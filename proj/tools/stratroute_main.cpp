// Command-line front end for the strategy routing pipeline.
//
// Offline: profile -> train -> calibrate.  Online: route -> eval.
// Configuration precedence: command-line flags > config file > defaults;
// the resolved snapshot lands in every run manifest.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stratroute/pipeline.hpp"
#include "stratroute/util.hpp"

using nlohmann::json;
using namespace stratroute;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitExecutor = 3;

// Applies config-file values to options the user did not pass explicitly.
class ConfigLayer {
 public:
  ConfigLayer(CLI::App* cmd, json file_config) : cmd_(cmd), file_(std::move(file_config)) {}

  template <typename T>
  void apply(const std::string& flag, const std::string& key, T& value) const {
    if (cmd_->count(flag) > 0) return;
    if (file_.contains(key)) value = file_.at(key).get<T>();
  }

 private:
  CLI::App* cmd_;
  json file_;
};

json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  json config = json::parse(read_text_file(path), nullptr, false);
  if (config.is_discarded() || !config.is_object()) {
    throw DataError("config file is not a JSON object: " + path);
  }
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"strategy routing engine"};
  app.require_subcommand(1);
  app.fallthrough();  // app-level --config may follow the subcommand name

  std::string config_path;
  app.add_option("--config", config_path, "flat JSON config file")->configurable(false);

  // profile
  auto* profile = app.add_subcommand("profile", "build suitability records from traces");
  std::string profile_traces, profile_out;
  ProfilerConfig profiler_cfg;
  profile->add_option("--traces", profile_traces, "trace file (JSONL)")->required();
  profile->add_option("--out", profile_out, "output dataset file")->required();
  profile->add_option("--w-correct", profiler_cfg.weights.w_correct, "correctness weight");
  profile->add_option("--w-quality", profiler_cfg.weights.w_quality, "process quality weight");
  profile->add_option("--w-efficiency", profiler_cfg.weights.w_efficiency, "efficiency weight");
  profile->add_option("--temperature", profiler_cfg.temperature, "softmax temperature");
  profile->add_option("--epsilon", profiler_cfg.epsilon, "normalization epsilon");

  // train
  auto* train_cmd = app.add_subcommand("train", "train the strategy adapter");
  std::string train_dataset, train_out;
  FeatureConfig feature_cfg;
  TrainConfig train_cfg;
  train_cmd->add_option("--dataset", train_dataset, "dataset file from profile")->required();
  train_cmd->add_option("--out", train_out, "output model file")->required();
  train_cmd->add_option("--lambda", train_cfg.lambda, "ordinal loss weight");
  train_cmd->add_option("--lr", train_cfg.learning_rate, "learning rate");
  train_cmd->add_option("--epochs", train_cfg.epochs, "training epochs");
  train_cmd->add_option("--batch-size", train_cfg.batch_size, "mini-batch size");
  train_cmd->add_option("--seed", train_cfg.seed, "shuffle seed");
  train_cmd->add_option("--l2", train_cfg.l2, "weight decay");
  train_cmd->add_option("--val-fraction", train_cfg.val_fraction, "held-out fraction");
  train_cmd->add_option("--dimension", feature_cfg.dimension, "hash space size");
  train_cmd->add_option("--hash-seed", feature_cfg.hash_seed, "feature hash seed");

  // calibrate
  auto* calibrate_cmd = app.add_subcommand("calibrate", "grid-search routing thresholds");
  std::string cal_validation, cal_model, cal_executors, cal_out;
  GridSpec grid;
  int cal_jobs = 1;
  calibrate_cmd->add_option("--validation", cal_validation, "validation problems (JSONL)")
      ->required();
  calibrate_cmd->add_option("--model", cal_model, "adapter model file")->required();
  calibrate_cmd->add_option("--executors", cal_executors, "executor bindings (JSON)")->required();
  calibrate_cmd->add_option("--out", cal_out, "output result file")->required();
  calibrate_cmd->add_option("--tau-c-low", grid.tau_c_low, "tau_c range low");
  calibrate_cmd->add_option("--tau-c-high", grid.tau_c_high, "tau_c range high");
  calibrate_cmd->add_option("--tau-c-step", grid.tau_c_step, "tau_c step");
  calibrate_cmd->add_option("--tau-a-low", grid.tau_a_low, "tau_a range low");
  calibrate_cmd->add_option("--tau-a-high", grid.tau_a_high, "tau_a range high");
  calibrate_cmd->add_option("--tau-a-step", grid.tau_a_step, "tau_a step");
  calibrate_cmd->add_option("--jobs", cal_jobs, "parallel grid workers");

  // route
  auto* route_cmd = app.add_subcommand("route", "route problems through executors");
  std::string route_problems, route_model, route_executors, route_out;
  RoutingConfig routing_cfg;
  int route_runs = 1;
  route_cmd->add_option("--problems", route_problems, "problems file (JSONL)")->required();
  route_cmd->add_option("--model", route_model, "adapter model file")->required();
  route_cmd->add_option("--executors", route_executors, "executor bindings (JSON)")->required();
  route_cmd->add_option("--out", route_out, "output decisions file")->required();
  route_cmd->add_option("--tau-c", routing_cfg.tau_c, "confidence threshold");
  route_cmd->add_option("--tau-a", routing_cfg.tau_a, "ambiguity margin");
  route_cmd->add_flag("--fallback", routing_cfg.fallback_to_exploratory,
                      "re-route a failed Confident decision as Exploratory");
  route_cmd->add_option("--runs", route_runs, "independent runs per problem");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate routing decisions");
  std::vector<std::string> eval_decisions;
  std::string eval_problems, eval_out;
  std::vector<int> eval_ks;
  eval_cmd->add_option("--decisions", eval_decisions, "decision file(s)")->required();
  eval_cmd->add_option("--problems", eval_problems, "problems with gold answers")->required();
  eval_cmd->add_option("--out", eval_out, "output report file")->required();
  eval_cmd->add_option("--k", eval_ks, "pass@k values (repeatable)");

  // sample-validation
  auto* sample_cmd = app.add_subcommand("sample-validation", "stratified validation sampler");
  std::string sample_problems, sample_out;
  size_t sample_n = 200;
  uint64_t sample_seed = 17;
  sample_cmd->add_option("--problems", sample_problems, "problems file (JSONL)")->required();
  sample_cmd->add_option("--out", sample_out, "output sample file")->required();
  sample_cmd->add_option("--n", sample_n, "sample size");
  sample_cmd->add_option("--seed", sample_seed, "sampling seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints the usage message
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    const json file_config = load_config_file(config_path);

    if (profile->parsed()) {
      ConfigLayer layer(profile, file_config);
      layer.apply("--w-correct", "w_correct", profiler_cfg.weights.w_correct);
      layer.apply("--w-quality", "w_quality", profiler_cfg.weights.w_quality);
      layer.apply("--w-efficiency", "w_efficiency", profiler_cfg.weights.w_efficiency);
      layer.apply("--temperature", "temperature", profiler_cfg.temperature);
      layer.apply("--epsilon", "epsilon", profiler_cfg.epsilon);

      json snapshot = {{"w_correct", profiler_cfg.weights.w_correct},
                       {"w_quality", profiler_cfg.weights.w_quality},
                       {"w_efficiency", profiler_cfg.weights.w_efficiency},
                       {"temperature", profiler_cfg.temperature},
                       {"epsilon", profiler_cfg.epsilon},
                       {"traces", profile_traces},
                       {"out", profile_out}};
      pipeline::ProfileOptions options{profile_traces, profile_out, profiler_cfg, snapshot.dump()};
      const auto summary = pipeline::run_profile(options);
      std::cout << "profiled " << summary.complete_groups << " complete groups";
      if (summary.incomplete_groups > 0) {
        std::cout << " (warning: " << summary.incomplete_groups << " incomplete groups skipped)";
      }
      std::cout << "\nmean scores:";
      for (StrategyId s : canonical_strategy_order()) {
        std::cout << " " << to_string(s) << "="
                  << format_double(summary.mean_scores[static_cast<size_t>(strategy_index(s))]);
      }
      std::cout << "\n";
      return 0;
    }

    if (train_cmd->parsed()) {
      ConfigLayer layer(train_cmd, file_config);
      layer.apply("--lambda", "lambda", train_cfg.lambda);
      layer.apply("--lr", "learning_rate", train_cfg.learning_rate);
      layer.apply("--epochs", "epochs", train_cfg.epochs);
      layer.apply("--batch-size", "batch_size", train_cfg.batch_size);
      layer.apply("--seed", "seed", train_cfg.seed);
      layer.apply("--l2", "l2", train_cfg.l2);
      layer.apply("--val-fraction", "val_fraction", train_cfg.val_fraction);
      layer.apply("--dimension", "dimension", feature_cfg.dimension);
      layer.apply("--hash-seed", "hash_seed", feature_cfg.hash_seed);

      json snapshot = {{"lambda", train_cfg.lambda},
                       {"learning_rate", train_cfg.learning_rate},
                       {"epochs", train_cfg.epochs},
                       {"batch_size", train_cfg.batch_size},
                       {"seed", train_cfg.seed},
                       {"l2", train_cfg.l2},
                       {"val_fraction", train_cfg.val_fraction},
                       {"dimension", feature_cfg.dimension},
                       {"hash_seed", feature_cfg.hash_seed},
                       {"dataset", train_dataset},
                       {"out", train_out}};
      pipeline::TrainOptions options{train_dataset, train_out, feature_cfg, train_cfg,
                                     snapshot.dump()};
      const auto summary = pipeline::run_train(options);
      std::cout << "trained on " << summary.train_count << " records (" << summary.val_count
                << " held out), final loss "
                << format_double(summary.epoch_loss.empty() ? 0.0 : summary.epoch_loss.back())
                << ", train top-1 agreement " << format_double(summary.train_top1_agreement)
                << "\n";
      return 0;
    }

    if (calibrate_cmd->parsed()) {
      ConfigLayer layer(calibrate_cmd, file_config);
      layer.apply("--tau-c-low", "tau_c_low", grid.tau_c_low);
      layer.apply("--tau-c-high", "tau_c_high", grid.tau_c_high);
      layer.apply("--tau-c-step", "tau_c_step", grid.tau_c_step);
      layer.apply("--tau-a-low", "tau_a_low", grid.tau_a_low);
      layer.apply("--tau-a-high", "tau_a_high", grid.tau_a_high);
      layer.apply("--tau-a-step", "tau_a_step", grid.tau_a_step);
      layer.apply("--jobs", "jobs", cal_jobs);

      json snapshot = {{"tau_c_low", grid.tau_c_low},     {"tau_c_high", grid.tau_c_high},
                       {"tau_c_step", grid.tau_c_step},   {"tau_a_low", grid.tau_a_low},
                       {"tau_a_high", grid.tau_a_high},   {"tau_a_step", grid.tau_a_step},
                       {"jobs", cal_jobs},                {"validation", cal_validation},
                       {"model", cal_model},              {"executors", cal_executors},
                       {"out", cal_out}};
      pipeline::CalibrateOptions options{cal_validation, cal_model,       cal_executors, cal_out,
                                         grid,           cal_jobs,        snapshot.dump()};
      const auto result = pipeline::run_calibrate(options);
      std::cout << "best tau_c=" << format_double(result.best_tau_c)
                << " tau_a=" << format_double(result.best_tau_a)
                << " accuracy=" << format_double(result.best_accuracy) << " over "
                << result.tau_c_values.size() * result.tau_a_values.size() << " grid points\n";
      return 0;
    }

    if (route_cmd->parsed()) {
      ConfigLayer layer(route_cmd, file_config);
      layer.apply("--tau-c", "tau_c", routing_cfg.tau_c);
      layer.apply("--tau-a", "tau_a", routing_cfg.tau_a);
      layer.apply("--fallback", "fallback_to_exploratory", routing_cfg.fallback_to_exploratory);
      layer.apply("--runs", "runs", route_runs);

      json snapshot = {{"tau_c", routing_cfg.tau_c},
                       {"tau_a", routing_cfg.tau_a},
                       {"fallback_to_exploratory", routing_cfg.fallback_to_exploratory},
                       {"runs", route_runs},
                       {"problems", route_problems},
                       {"model", route_model},
                       {"executors", route_executors},
                       {"out", route_out}};
      pipeline::RouteOptions options{route_problems, route_model, route_executors, route_out,
                                     routing_cfg,    route_runs,  snapshot.dump()};
      const auto summary = pipeline::run_route(options);
      std::cout << "routed " << summary.decisions << " decisions";
      if (summary.unsolved > 0) std::cout << " (" << summary.unsolved << " unsolved)";
      std::cout << "\n";
      return 0;
    }

    if (eval_cmd->parsed()) {
      ConfigLayer layer(eval_cmd, file_config);
      layer.apply("--k", "k", eval_ks);
      if (eval_ks.empty()) eval_ks = {1};

      json snapshot = {{"k", eval_ks},
                       {"problems", eval_problems},
                       {"out", eval_out},
                       {"decisions", eval_decisions}};
      pipeline::EvalOptions options;
      for (const auto& p : eval_decisions) options.decisions_paths.emplace_back(p);
      options.problems_path = eval_problems;
      options.out_path = eval_out;
      options.ks = eval_ks;
      options.config_snapshot_json = snapshot.dump();
      const auto report = pipeline::run_eval(options);
      std::cout << eval_report_to_text(report);
      return 0;
    }

    if (sample_cmd->parsed()) {
      ConfigLayer layer(sample_cmd, file_config);
      layer.apply("--n", "sample_size", sample_n);
      layer.apply("--seed", "sample_seed", sample_seed);

      json snapshot = {{"sample_size", sample_n},
                       {"seed", sample_seed},
                       {"problems", sample_problems},
                       {"out", sample_out}};
      pipeline::SampleValidationOptions options{sample_problems, sample_out, sample_n, sample_seed,
                                                snapshot.dump()};
      const size_t n = pipeline::run_sample_validation(options);
      std::cout << "sampled " << n << " problems\n";
      return 0;
    }

    std::cerr << "no command given\n";
    return kExitUsage;
  } catch (const ExecutorError& e) {
    std::cerr << "executor error: " << e.what() << "\n";
    return kExitExecutor;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}
