#include "stratroute/adapter.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "stratroute/util.hpp"

namespace stratroute {

using nlohmann::json;

void FeatureConfig::validate() const {
  if (dimension == 0) throw DataError("feature dimension must be positive");
  if (!word_unigrams && !word_bigrams && !char_trigrams) {
    throw DataError("at least one feature family must be enabled");
  }
}

namespace {

// Family prefixes keep word and character n-grams in separate hash streams.
constexpr uint64_t kWordUnigramSalt = 0x01;
constexpr uint64_t kWordBigramSalt = 0x02;
constexpr uint64_t kCharTrigramSalt = 0x03;

uint32_t bucket(uint64_t h, uint32_t dimension) { return static_cast<uint32_t>(h % dimension); }

}  // namespace

FeatureVector featurize(std::string_view text, const FeatureConfig& config) {
  config.validate();
  if (trim_view(text).empty()) throw DataError("featurize: empty text");

  const std::string normalized =
      config.lowercase ? lowercase_ascii(text) : std::string(text);

  std::map<uint32_t, double> counts;
  auto add = [&](uint64_t salt, std::string_view token) {
    const uint64_t h = fnv1a64(token, hash_combine(config.hash_seed, salt));
    counts[bucket(h, config.dimension)] += 1.0;
  };

  if (config.word_unigrams || config.word_bigrams) {
    std::vector<std::string_view> words;
    size_t start = std::string::npos;
    for (size_t i = 0; i <= normalized.size(); ++i) {
      const bool alnum =
          i < normalized.size() && std::isalnum(static_cast<unsigned char>(normalized[i]));
      if (alnum && start == std::string::npos) start = i;
      if (!alnum && start != std::string::npos) {
        words.emplace_back(normalized.data() + start, i - start);
        start = std::string::npos;
      }
    }
    if (config.word_unigrams) {
      for (std::string_view w : words) add(kWordUnigramSalt, w);
    }
    if (config.word_bigrams) {
      for (size_t i = 0; i + 1 < words.size(); ++i) {
        std::string joined(words[i]);
        joined.push_back('\x1f');
        joined += words[i + 1];
        add(kWordBigramSalt, joined);
      }
    }
  }
  if (config.char_trigrams) {
    for (size_t i = 0; i + 3 <= normalized.size(); ++i) {
      add(kCharTrigramSalt, std::string_view(normalized.data() + i, 3));
    }
  }

  FeatureVector fv;
  fv.entries.assign(counts.begin(), counts.end());
  return fv;
}

AdapterModel AdapterModel::zeros(const FeatureConfig& config) {
  config.validate();
  AdapterModel model;
  model.feature_config = config;
  model.weights.assign(static_cast<size_t>(kNumStrategies) * config.dimension, 0.0);
  model.bias.fill(0.0);
  return model;
}

std::array<double, kNumStrategies> AdapterModel::logits(const FeatureVector& features) const {
  std::array<double, kNumStrategies> z = bias;
  for (const auto& [index, value] : features.entries) {
    if (index >= feature_config.dimension) {
      throw DataError("feature index out of range: " + std::to_string(index));
    }
    for (int s = 0; s < kNumStrategies; ++s) {
      z[static_cast<size_t>(s)] +=
          weights[static_cast<size_t>(s) * feature_config.dimension + index] * value;
    }
  }
  return z;
}

StrategyDistribution AdapterModel::predict(const FeatureVector& features) const {
  return StrategyDistribution::softmax(logits(features));
}

StrategyDistribution AdapterModel::predict(const ProblemInstance& problem) const {
  return predict_text(problem.text);
}

StrategyDistribution AdapterModel::predict_text(std::string_view text) const {
  return predict(featurize(text, feature_config));
}

double kl_loss(const StrategyDistribution& target, const StrategyDistribution& predicted) {
  double sum = 0.0;
  for (int i = 0; i < kNumStrategies; ++i) {
    const double y = target.at(i);
    if (y == 0.0) continue;
    const double p = predicted.at(i);
    if (p <= 0.0) throw DataError("kl_loss: predicted probability must be positive where target is");
    sum += y * std::log(y / p);
  }
  return sum;
}

double ordinal_loss(StrategyId best, const StrategyDistribution& predicted) {
  const double p = predicted[best];
  if (p <= 0.0) throw DataError("ordinal_loss: predicted probability of best strategy must be positive");
  return -std::log(p);
}

double total_loss(std::span<const std::pair<SuitabilityRecord, StrategyDistribution>> batch,
                  double lambda) {
  if (batch.empty()) throw DataError("total_loss: empty batch");
  double kl = 0.0;
  double ord = 0.0;
  for (const auto& [record, predicted] : batch) {
    kl += kl_loss(record.target, predicted);
    ord += ordinal_loss(record.best_strategy, predicted);
  }
  const double n = static_cast<double>(batch.size());
  return kl / n + lambda * (ord / n);
}

double batch_loss(const AdapterModel& model, std::span<const LabeledExample> batch, double lambda) {
  if (batch.empty()) throw DataError("batch_loss: empty batch");
  double kl = 0.0;
  double ord = 0.0;
  for (const LabeledExample& ex : batch) {
    const StrategyDistribution p = model.predict(ex.features);
    kl += kl_loss(ex.target, p);
    ord += ordinal_loss(ex.best, p);
  }
  const double n = static_cast<double>(batch.size());
  return kl / n + lambda * (ord / n);
}

AdapterGradient gradient(const AdapterModel& model, std::span<const LabeledExample> batch,
                         double lambda) {
  if (batch.empty()) throw DataError("gradient: empty batch");
  AdapterGradient grad;
  grad.bias.fill(0.0);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (const LabeledExample& ex : batch) {
    const StrategyDistribution p = model.predict(ex.features);
    // d/dz of both terms is (p - y) + lambda * (p - e_best).
    std::array<double, kNumStrategies> dz{};
    for (int s = 0; s < kNumStrategies; ++s) {
      const auto i = static_cast<size_t>(s);
      dz[i] = (p.at(s) - ex.target.at(s)) +
              lambda * (p.at(s) - (s == strategy_index(ex.best) ? 1.0 : 0.0));
      dz[i] *= inv_n;
      grad.bias[i] += dz[i];
    }
    for (const auto& [index, value] : ex.features.entries) {
      auto& column = grad.weights[index];
      for (int s = 0; s < kNumStrategies; ++s) {
        column[static_cast<size_t>(s)] += dz[static_cast<size_t>(s)] * value;
      }
    }
  }
  return grad;
}

void TrainConfig::validate() const {
  if (!std::isfinite(lambda) || lambda < 0.0) throw DataError("lambda must be >= 0");
  if (!std::isfinite(learning_rate) || learning_rate <= 0.0) {
    throw DataError("learning_rate must be > 0");
  }
  if (epochs <= 0) throw DataError("epochs must be positive");
  if (batch_size <= 0) throw DataError("batch_size must be positive");
  if (!std::isfinite(l2) || l2 < 0.0) throw DataError("l2 must be >= 0");
  if (!std::isfinite(val_fraction) || val_fraction < 0.0 || val_fraction >= 1.0) {
    throw DataError("val_fraction must be in [0, 1)");
  }
}

namespace {

// In-place Fisher-Yates with an explicit splitmix stream; std::shuffle's
// draw sequence is implementation-defined, this one is not.
void deterministic_shuffle(std::vector<size_t>& items, uint64_t seed) {
  uint64_t state = seed;
  for (size_t i = items.size(); i > 1; --i) {
    state = splitmix64(state);
    const size_t j = static_cast<size_t>(state % i);
    std::swap(items[i - 1], items[j]);
  }
}

double top1_agreement(const AdapterModel& model, std::span<const LabeledExample> examples) {
  if (examples.empty()) return 0.0;
  size_t hits = 0;
  for (const LabeledExample& ex : examples) {
    if (model.predict(ex.features).argmax() == ex.target.argmax()) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(examples.size());
}

}  // namespace

TrainResult train(const std::vector<SuitabilityRecord>& records,
                  const std::unordered_map<std::string, std::string>& problem_texts,
                  const FeatureConfig& features, const TrainConfig& config) {
  config.validate();
  if (records.empty()) throw DataError("train: empty dataset");

  std::vector<LabeledExample> train_set;
  std::vector<LabeledExample> val_set;
  const auto threshold = static_cast<uint64_t>(config.val_fraction * 10000.0);
  for (const SuitabilityRecord& rec : records) {
    const auto it = problem_texts.find(rec.problem_id);
    if (it == problem_texts.end()) {
      throw DataError("train: missing problem text for \"" + rec.problem_id + "\"");
    }
    LabeledExample ex;
    ex.features = featurize(it->second, features);
    ex.target = rec.target;
    ex.best = rec.best_strategy;
    const bool held_out = fnv1a64(rec.problem_id) % 10000 < threshold;
    (held_out ? val_set : train_set).push_back(std::move(ex));
  }
  if (train_set.empty()) throw DataError("train: training split is empty");

  AdapterModel model = AdapterModel::zeros(features);
  TrainResult result;
  result.train_count = train_set.size();
  result.val_count = val_set.size();

  std::vector<size_t> order(train_set.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<LabeledExample> batch;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    deterministic_shuffle(order, hash_combine(config.seed, static_cast<uint64_t>(epoch)));
    for (size_t begin = 0; begin < order.size(); begin += static_cast<size_t>(config.batch_size)) {
      const size_t end = std::min(order.size(), begin + static_cast<size_t>(config.batch_size));
      batch.clear();
      for (size_t i = begin; i < end; ++i) batch.push_back(train_set[order[i]]);

      const AdapterGradient grad = gradient(model, batch, config.lambda);
      if (config.l2 > 0.0) {
        const double decay = 1.0 - config.learning_rate * config.l2;
        for (double& w : model.weights) w *= decay;
      }
      for (int s = 0; s < kNumStrategies; ++s) {
        model.bias[static_cast<size_t>(s)] -=
            config.learning_rate * grad.bias[static_cast<size_t>(s)];
      }
      for (const auto& [index, column] : grad.weights) {
        for (int s = 0; s < kNumStrategies; ++s) {
          model.weights[static_cast<size_t>(s) * features.dimension + index] -=
              config.learning_rate * column[static_cast<size_t>(s)];
        }
      }
    }
    result.epoch_loss.push_back(batch_loss(model, train_set, config.lambda));
  }

  result.train_top1_agreement = top1_agreement(model, train_set);
  result.val_top1_agreement = top1_agreement(model, val_set);
  result.model = std::move(model);
  return result;
}

namespace {

constexpr const char* kModelFormat = "strategy-adapter";

std::string payload_line_w(int row, uint32_t index, double value) {
  std::string line = "w ";
  line += std::to_string(row);
  line += ' ';
  line += std::to_string(index);
  line += ' ';
  line += format_double(value);
  line += '\n';
  return line;
}

}  // namespace

void save_model(const AdapterModel& model, const std::filesystem::path& path) {
  std::string payload;
  payload.reserve(1024);
  for (int s = 0; s < kNumStrategies; ++s) {
    payload += "b ";
    payload += std::to_string(s);
    payload += ' ';
    payload += format_double(model.bias[static_cast<size_t>(s)]);
    payload += '\n';
  }
  for (int s = 0; s < kNumStrategies; ++s) {
    const size_t row_offset = static_cast<size_t>(s) * model.feature_config.dimension;
    for (uint32_t i = 0; i < model.feature_config.dimension; ++i) {
      const double w = model.weights[row_offset + i];
      if (w != 0.0) payload += payload_line_w(s, i, w);
    }
  }

  json header;
  header["format"] = kModelFormat;
  header["version"] = AdapterModel::kFormatVersion;
  header["feature_config"] = {{"dimension", model.feature_config.dimension},
                              {"hash_seed", model.feature_config.hash_seed},
                              {"lowercase", model.feature_config.lowercase},
                              {"word_unigrams", model.feature_config.word_unigrams},
                              {"word_bigrams", model.feature_config.word_bigrams},
                              {"char_trigrams", model.feature_config.char_trigrams}};
  json order = json::array();
  for (StrategyId s : canonical_strategy_order()) order.push_back(to_string(s));
  header["strategy_order"] = order;
  header["payload_fnv64"] = fnv1a64(payload);

  std::string out = header.dump();
  out += '\n';
  out += payload;
  write_text_file_atomic(path, out);
}

AdapterModel load_model(const std::filesystem::path& path) {
  const std::string content = read_text_file(path);
  const size_t header_end = content.find('\n');
  if (header_end == std::string::npos) throw DataError("model file: missing header line");
  json header = json::parse(content.substr(0, header_end), nullptr, false);
  if (header.is_discarded() || !header.is_object()) {
    throw DataError("model file: corrupt header");
  }
  if (!header.contains("format") || header["format"] != kModelFormat) {
    throw DataError("model file: unrecognized format");
  }
  const int version = header.value("version", -1);
  if (version != AdapterModel::kFormatVersion) {
    throw DataError("model file: version mismatch (file version " + std::to_string(version) +
                    ", supported version " + std::to_string(AdapterModel::kFormatVersion) + ")");
  }

  const std::string payload = content.substr(header_end + 1);
  const uint64_t expected = header.value("payload_fnv64", uint64_t{0});
  if (fnv1a64(payload) != expected) {
    throw DataError("model file: corrupt payload (checksum mismatch)");
  }

  FeatureConfig fc;
  const json& jc = header.at("feature_config");
  fc.dimension = jc.at("dimension").get<uint32_t>();
  fc.hash_seed = jc.at("hash_seed").get<uint64_t>();
  fc.lowercase = jc.at("lowercase").get<bool>();
  fc.word_unigrams = jc.at("word_unigrams").get<bool>();
  fc.word_bigrams = jc.at("word_bigrams").get<bool>();
  fc.char_trigrams = jc.at("char_trigrams").get<bool>();

  json order = json::array();
  for (StrategyId s : canonical_strategy_order()) order.push_back(to_string(s));
  if (header.at("strategy_order") != order) {
    throw DataError("model file: strategy order does not match canonical order");
  }

  AdapterModel model = AdapterModel::zeros(fc);
  std::istringstream in(payload);
  std::string line;
  size_t line_no = 1;  // header was line 1
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string tag;
    fields >> tag;
    if (tag == "b") {
      int row = -1;
      std::string value;
      fields >> row >> value;
      if (fields.fail() || row < 0 || row >= kNumStrategies) {
        throw DataError("model file line " + std::to_string(line_no) + ": bad bias record");
      }
      double v = 0.0;
      if (std::from_chars(value.data(), value.data() + value.size(), v).ec != std::errc{}) {
        throw DataError("model file line " + std::to_string(line_no) + ": bad number");
      }
      model.bias[static_cast<size_t>(row)] = v;
    } else if (tag == "w") {
      int row = -1;
      uint32_t index = 0;
      std::string value;
      fields >> row >> index >> value;
      if (fields.fail() || row < 0 || row >= kNumStrategies || index >= fc.dimension) {
        throw DataError("model file line " + std::to_string(line_no) + ": bad weight record");
      }
      double v = 0.0;
      if (std::from_chars(value.data(), value.data() + value.size(), v).ec != std::errc{}) {
        throw DataError("model file line " + std::to_string(line_no) + ": bad number");
      }
      model.weights[static_cast<size_t>(row) * fc.dimension + index] = v;
    } else {
      throw DataError("model file line " + std::to_string(line_no) + ": unknown record tag \"" +
                      tag + "\"");
    }
  }
  return model;
}

}  // namespace stratroute
