#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "stratroute/core.hpp"

namespace stratroute {

struct FeatureConfig {
  uint32_t dimension = 1u << 18;
  uint64_t hash_seed = 0;
  bool lowercase = true;
  bool word_unigrams = true;
  bool word_bigrams = true;
  bool char_trigrams = true;

  bool operator==(const FeatureConfig&) const = default;
  void validate() const;
};

// Sparse hashed feature counts, entries sorted by index.
struct FeatureVector {
  std::vector<std::pair<uint32_t, double>> entries;
};

// Deterministic hashed bag of word uni/bi-grams and character trigrams.
// Throws on empty text.
FeatureVector featurize(std::string_view text, const FeatureConfig& config);

// Linear softmax classifier over hashed text features.
struct AdapterModel {
  static constexpr int kFormatVersion = 1;

  FeatureConfig feature_config;
  std::vector<double> weights;  // kNumStrategies rows of dimension columns
  std::array<double, kNumStrategies> bias{};

  static AdapterModel zeros(const FeatureConfig& config);

  double& weight(StrategyId s, uint32_t feature) {
    return weights[static_cast<size_t>(strategy_index(s)) * feature_config.dimension + feature];
  }
  double weight(StrategyId s, uint32_t feature) const {
    return weights[static_cast<size_t>(strategy_index(s)) * feature_config.dimension + feature];
  }

  std::array<double, kNumStrategies> logits(const FeatureVector& features) const;
  StrategyDistribution predict(const FeatureVector& features) const;
  StrategyDistribution predict(const ProblemInstance& problem) const;
  StrategyDistribution predict_text(std::string_view text) const;
};

// KL(target || predicted) with the convention 0 * ln(0/p) = 0.
double kl_loss(const StrategyDistribution& target, const StrategyDistribution& predicted);

// -ln p(best).
double ordinal_loss(StrategyId best, const StrategyDistribution& predicted);

// mean KL + lambda * mean ordinal loss over the batch.
double total_loss(std::span<const std::pair<SuitabilityRecord, StrategyDistribution>> batch,
                  double lambda);

struct LabeledExample {
  FeatureVector features;
  StrategyDistribution target;
  StrategyId best = StrategyId::NLR;
};

// Sparse parameter gradient: bias plus touched weight columns.
struct AdapterGradient {
  std::array<double, kNumStrategies> bias{};
  std::map<uint32_t, std::array<double, kNumStrategies>> weights;
};

// Batch loss evaluated against the model (same objective as total_loss).
double batch_loss(const AdapterModel& model, std::span<const LabeledExample> batch, double lambda);

// Exact analytic gradient of batch_loss.
AdapterGradient gradient(const AdapterModel& model, std::span<const LabeledExample> batch,
                         double lambda);

struct TrainConfig {
  double lambda = 0.5;
  double learning_rate = 0.01;
  int epochs = 50;
  int batch_size = 32;
  uint64_t seed = 17;
  double l2 = 0.0;           // weight decay on the weight matrix, not the bias
  double val_fraction = 0.1; // held out by problem-id hash

  void validate() const;
};

struct TrainResult {
  AdapterModel model;
  std::vector<double> epoch_loss;  // training-split combined loss after each epoch
  size_t train_count = 0;
  size_t val_count = 0;
  double train_top1_agreement = 0.0;  // argmax(prediction) == argmax(target)
  double val_top1_agreement = 0.0;    // 0 when the validation split is empty
};

// Mini-batch gradient descent with seed-driven shuffling. Deterministic
// given (dataset, texts, config).
TrainResult train(const std::vector<SuitabilityRecord>& records,
                  const std::unordered_map<std::string, std::string>& problem_texts,
                  const FeatureConfig& features, const TrainConfig& config);

// Versioned text container with a checksum over the parameter payload.
// Round-trips parameters exactly.
void save_model(const AdapterModel& model, const std::filesystem::path& path);
AdapterModel load_model(const std::filesystem::path& path);

}  // namespace stratroute
