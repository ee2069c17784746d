#include <doctest.h>

#include <cmath>
#include <fstream>

#include "stratroute/adapter.hpp"
#include "stratroute/util.hpp"
#include "support/corpus.hpp"
#include "support/oracles.hpp"
#include "support/tmpdir.hpp"

using namespace stratroute;
using testsupport::TmpDir;

namespace {

FeatureConfig small_features() {
  FeatureConfig fc;
  fc.dimension = 1u << 14;
  return fc;
}

StrategyDistribution random_distribution(uint64_t seed) {
  std::array<double, 4> e{};
  double sum = 0.0;
  for (int i = 0; i < 4; ++i) {
    e[static_cast<size_t>(i)] = -std::log(1.0 - unit_double(hash_combine(seed, i)) + 1e-12);
    sum += e[static_cast<size_t>(i)];
  }
  for (double& v : e) v /= sum;
  return StrategyDistribution(e);
}

LabeledExample random_example(uint64_t seed, uint32_t dimension) {
  LabeledExample ex;
  const int nnz = 3 + static_cast<int>(unit_double(hash_combine(seed, 0)) * 6);
  std::map<uint32_t, double> entries;
  for (int i = 0; i < nnz; ++i) {
    const auto index = static_cast<uint32_t>(hash_combine(seed, 100 + i) % dimension);
    entries[index] += 1.0 + std::floor(unit_double(hash_combine(seed, 200 + i)) * 3.0);
  }
  ex.features.entries.assign(entries.begin(), entries.end());
  ex.target = random_distribution(hash_combine(seed, 7));
  ex.best = ex.target.argmax();
  return ex;
}

AdapterModel random_model(uint64_t seed, uint32_t dimension) {
  FeatureConfig fc;
  fc.dimension = dimension;
  AdapterModel model = AdapterModel::zeros(fc);
  for (int s = 0; s < 4; ++s) {
    model.bias[static_cast<size_t>(s)] = unit_double(hash_combine(seed, s)) - 0.5;
  }
  for (uint32_t i = 0; i < dimension; ++i) {
    for (int s = 0; s < 4; ++s) {
      model.weight(static_cast<StrategyId>(s), i) =
          0.4 * (unit_double(hash_combine(seed, 1000 + i * 4 + s)) - 0.5);
    }
  }
  return model;
}

}  // namespace

TEST_CASE("featurize is deterministic") {
  const FeatureConfig fc;
  const auto a = featurize("solve for x in 2x + 3 = 7", fc);
  const auto b = featurize("solve for x in 2x + 3 = 7", fc);
  CHECK(a.entries == b.entries);
  CHECK(!a.entries.empty());
}

TEST_CASE("featurize rejects empty text") {
  CHECK_THROWS_AS(featurize("", FeatureConfig{}), DataError);
  CHECK_THROWS_AS(featurize("   ", FeatureConfig{}), DataError);
}

TEST_CASE("distinct texts almost always produce distinct vectors") {
  const FeatureConfig fc;
  size_t collisions = 0;
  const int trials = 300;
  for (int i = 0; i < trials; ++i) {
    std::string a = "problem alpha " + std::to_string(i) + " compute the sum of digits";
    std::string b = "problem beta " + std::to_string(i * 31 + 7) + " integrate the polynomial";
    if (featurize(a, fc).entries == featurize(b, fc).entries) ++collisions;
  }
  CHECK(static_cast<double>(collisions) / trials < 0.01);
}

TEST_CASE("duplicated text doubles shared n-gram counts") {
  FeatureConfig uni;
  uni.word_bigrams = false;
  uni.char_trigrams = false;
  const std::string text = "alpha beta gamma";
  const auto u_once = featurize(text, uni);
  const auto u_twice = featurize(text + " " + text, uni);
  REQUIRE(u_once.entries.size() == u_twice.entries.size());
  for (size_t i = 0; i < u_once.entries.size(); ++i) {
    CHECK(u_twice.entries[i].first == u_once.entries[i].first);
    CHECK(u_twice.entries[i].second == 2.0 * u_once.entries[i].second);
  }
}

TEST_CASE("lowercase flag folds case") {
  FeatureConfig fc;
  CHECK(featurize("Solve THIS", fc).entries == featurize("solve this", fc).entries);
  fc.lowercase = false;
  CHECK(featurize("Solve THIS", fc).entries != featurize("solve this", fc).entries);
}

TEST_CASE("zero model predicts uniform") {
  const auto model = AdapterModel::zeros(small_features());
  const auto p = model.predict_text("anything at all");
  for (int i = 0; i < 4; ++i) CHECK(p.at(i) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("bias-only model concentrates mass") {
  auto model = AdapterModel::zeros(small_features());
  model.bias = {10.0, 0.0, 0.0, 0.0};
  const auto p = model.predict_text("anything");
  // exp(10) / (exp(10) + 3)
  CHECK(p.at(0) == doctest::Approx(0.9998638187585689).epsilon(1e-10));
  CHECK(p.at(0) > 0.999);
  CHECK(p.argmax() == StrategyId::NLR);
}

TEST_CASE("prediction is invariant to constant logit shifts") {
  auto model = random_model(5, 1u << 10);
  const auto fv = featurize("check logit shift invariance", model.feature_config);
  const auto before = model.predict(fv);
  for (double& b : model.bias) b += 12.25;
  const auto after = model.predict(fv);
  for (int i = 0; i < 4; ++i) CHECK(after.at(i) == doctest::Approx(before.at(i)).epsilon(1e-12));
}

TEST_CASE("kl_loss hand values") {
  const StrategyDistribution uniform;
  CHECK(kl_loss(uniform, uniform) == 0.0);

  const StrategyDistribution onehot({1.0, 0.0, 0.0, 0.0});
  CHECK(kl_loss(onehot, uniform) == doctest::Approx(1.3862943611198906).epsilon(1e-12));

  const StrategyDistribution peaked(
      {0.7112345942275938, 0.09625513525746872, 0.09625513525746872, 0.09625513525746876});
  const double expected = oracle::kl(uniform.probs(), peaked.probs());
  CHECK(kl_loss(uniform, peaked) == doctest::Approx(expected).epsilon(1e-10));
  CHECK(std::abs(kl_loss(uniform, peaked) - 0.4544585927932406) < 1e-10);
}

TEST_CASE("kl_loss nonnegativity on random pairs") {
  for (uint64_t seed = 1; seed <= 500; ++seed) {
    const auto y = random_distribution(splitmix64(seed));
    const auto p = random_distribution(splitmix64(seed + 9999));
    const double kl = kl_loss(y, p);
    CHECK(kl >= 0.0);
    CHECK(kl_loss(y, y) <= 1e-12);
  }
}

TEST_CASE("ordinal_loss hand values") {
  const StrategyDistribution uniform;
  CHECK(ordinal_loss(StrategyId::TIR, uniform) ==
        doctest::Approx(1.3862943611198906).epsilon(1e-12));

  const StrategyDistribution half({0.5, 0.3, 0.1, 0.1});
  CHECK(ordinal_loss(StrategyId::NLR, half) ==
        doctest::Approx(0.6931471805599453).epsilon(1e-12));

  const StrategyDistribution nearly({1.0 - 1e-12, 4e-13, 3e-13, 3e-13});
  CHECK(std::abs(ordinal_loss(StrategyId::NLR, nearly)) < 1e-9);
}

TEST_CASE("total_loss composition") {
  SuitabilityRecord rec;
  rec.target = StrategyDistribution({0.7, 0.1, 0.1, 0.1});
  rec.best_strategy = StrategyId::NLR;
  const StrategyDistribution predicted({0.6, 0.2, 0.1, 0.1});

  const std::vector<std::pair<SuitabilityRecord, StrategyDistribution>> batch1 = {
      {rec, predicted}};
  CHECK(total_loss(batch1, 0.0) == doctest::Approx(kl_loss(rec.target, predicted)).epsilon(1e-12));

  // Perfect distribution match: only the ordinal term remains.
  const std::vector<std::pair<SuitabilityRecord, StrategyDistribution>> batch2 = {
      {rec, rec.target}};
  CHECK(total_loss(batch2, 0.5) ==
        doctest::Approx(0.5 * ordinal_loss(StrategyId::NLR, rec.target)).epsilon(1e-12));

  // Batch of two equals the mean of per-record values.
  SuitabilityRecord rec2;
  rec2.target = StrategyDistribution({0.1, 0.2, 0.3, 0.4});
  rec2.best_strategy = StrategyId::EBR;
  const StrategyDistribution predicted2({0.25, 0.25, 0.3, 0.2});
  const std::vector<std::pair<SuitabilityRecord, StrategyDistribution>> batch3 = {
      {rec, predicted}, {rec2, predicted2}};
  const double lambda = 0.7;
  const double expected =
      0.5 * (kl_loss(rec.target, predicted) + lambda * ordinal_loss(rec.best_strategy, predicted) +
             kl_loss(rec2.target, predicted2) +
             lambda * ordinal_loss(rec2.best_strategy, predicted2));
  CHECK(total_loss(batch3, lambda) == doctest::Approx(expected).epsilon(1e-12));

  CHECK_THROWS_AS(total_loss({}, 0.5), DataError);
}

TEST_CASE("gradient of a symmetric batch is zero on the bias") {
  FeatureConfig fc;
  fc.dimension = 256;
  auto model = AdapterModel::zeros(fc);
  LabeledExample ex;
  ex.features.entries = {{3, 1.0}, {10, 2.0}};
  ex.target = StrategyDistribution();  // uniform
  ex.best = StrategyId::NLR;
  const std::vector<LabeledExample> batch = {ex};
  // Zero model predicts uniform, so the KL part of the bias gradient vanishes.
  const auto grad = gradient(model, batch, 0.0);
  for (int s = 0; s < 4; ++s) CHECK(std::abs(grad.bias[static_cast<size_t>(s)]) < 1e-15);
}

TEST_CASE("gradient matches central finite differences") {
  const uint32_t dim = 64;
  const double step = 1e-5;
  for (uint64_t trial = 1; trial <= 30; ++trial) {
    const uint64_t seed = splitmix64(trial * 31);
    const auto model = random_model(seed, dim);
    std::vector<LabeledExample> batch;
    const int batch_size = 1 + static_cast<int>(unit_double(hash_combine(seed, 1)) * 5);
    for (int i = 0; i < batch_size; ++i) {
      batch.push_back(random_example(hash_combine(seed, 50 + i), dim));
    }
    const double lambda = unit_double(hash_combine(seed, 2)) * 1.5;

    const auto grad = gradient(model, batch, lambda);
    for (int s = 0; s < 4; ++s) {
      const double analytic = grad.bias[static_cast<size_t>(s)];
      const double fd = oracle::fd_bias(model, batch, lambda, s, step);
      const double denom = std::max(std::abs(analytic), std::abs(fd));
      if (denom > 1e-8) {
        CHECK(std::abs(analytic - fd) / denom < 1e-4);
      }
    }
    // Touched weight coordinates.
    int checked = 0;
    for (const auto& [index, column] : grad.weights) {
      for (int s = 0; s < 4 && checked < 12; ++s, ++checked) {
        const double analytic = column[static_cast<size_t>(s)];
        const double fd = oracle::fd_weight(model, batch, lambda, s, index, step);
        const double denom = std::max(std::abs(analytic), std::abs(fd));
        if (denom > 1e-8) {
          CHECK(std::abs(analytic - fd) / denom < 1e-4);
        }
      }
    }
    // An untouched coordinate has exactly zero gradient.
    uint32_t untouched = dim - 1;
    while (grad.weights.count(untouched) != 0) --untouched;
    CHECK(oracle::fd_weight(model, batch, lambda, 0, untouched, step) ==
          doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("duplicating the batch leaves the gradient unchanged") {
  const uint32_t dim = 64;
  const auto model = random_model(11, dim);
  std::vector<LabeledExample> batch;
  for (int i = 0; i < 3; ++i) batch.push_back(random_example(hash_combine(77, i), dim));
  std::vector<LabeledExample> doubled = batch;
  doubled.insert(doubled.end(), batch.begin(), batch.end());

  const auto g1 = gradient(model, batch, 0.5);
  const auto g2 = gradient(model, doubled, 0.5);
  for (int s = 0; s < 4; ++s) {
    CHECK(g1.bias[static_cast<size_t>(s)] ==
          doctest::Approx(g2.bias[static_cast<size_t>(s)]).epsilon(1e-12));
  }
  REQUIRE(g1.weights.size() == g2.weights.size());
  for (const auto& [index, column] : g1.weights) {
    for (int s = 0; s < 4; ++s) {
      CHECK(column[static_cast<size_t>(s)] ==
            doctest::Approx(g2.weights.at(index)[static_cast<size_t>(s)]).epsilon(1e-12));
    }
  }
}

TEST_CASE("one small full-batch step never increases the loss") {
  const uint32_t dim = 128;
  for (uint64_t seed = 1; seed <= 100; ++seed) {
    auto model = random_model(splitmix64(seed), dim);
    std::vector<LabeledExample> batch;
    for (int i = 0; i < 4; ++i) batch.push_back(random_example(hash_combine(seed, i), dim));
    const double lambda = 0.5;
    const double lr = 1e-3;

    const double before = batch_loss(model, batch, lambda);
    const auto grad = gradient(model, batch, lambda);
    for (int s = 0; s < 4; ++s) {
      model.bias[static_cast<size_t>(s)] -= lr * grad.bias[static_cast<size_t>(s)];
    }
    for (const auto& [index, column] : grad.weights) {
      for (int s = 0; s < 4; ++s) {
        model.weight(static_cast<StrategyId>(s), index) -= lr * column[static_cast<size_t>(s)];
      }
    }
    const double after = batch_loss(model, batch, lambda);
    CHECK(after <= before + 1e-12);
  }
}

namespace {

struct SeparableData {
  std::vector<SuitabilityRecord> records;
  std::unordered_map<std::string, std::string> texts;
};

SeparableData separable_dataset(size_t count, uint64_t seed) {
  const corpus::Corpus c = corpus::make_corpus(count, seed);
  SeparableData data;
  for (const ProblemInstance& p : c.problems) {
    const int family = corpus::family_of(p);
    SuitabilityRecord rec;
    rec.problem_id = p.id;
    rec.target = corpus::oracle_distribution(family);
    rec.best_strategy = static_cast<StrategyId>(family);
    for (int s = 0; s < 4; ++s) {
      rec.per_strategy[static_cast<size_t>(s)].score = rec.target.at(s);
    }
    data.records.push_back(std::move(rec));
    data.texts.emplace(p.id, p.text);
  }
  return data;
}

}  // namespace

TEST_CASE("training on a separable dataset reaches high top-1 agreement") {
  const SeparableData data = separable_dataset(400, 2024);
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.learning_rate = 0.01;
  const auto result = train(data.records, data.texts, small_features(), cfg);
  CHECK(result.train_count + result.val_count == 400);
  CHECK(result.train_top1_agreement >= 0.95);
  CHECK(result.epoch_loss.size() == 50);
}

TEST_CASE("lambda changes the trained parameters") {
  const SeparableData data = separable_dataset(120, 7);
  TrainConfig a;
  a.epochs = 5;
  TrainConfig b = a;
  a.lambda = 0.0;
  b.lambda = 0.5;
  const auto ra = train(data.records, data.texts, small_features(), a);
  const auto rb = train(data.records, data.texts, small_features(), b);
  CHECK(ra.model.bias != rb.model.bias);
}

TEST_CASE("training is deterministic given the seed") {
  const SeparableData data = separable_dataset(120, 8);
  TrainConfig cfg;
  cfg.epochs = 6;
  const auto r1 = train(data.records, data.texts, small_features(), cfg);
  const auto r2 = train(data.records, data.texts, small_features(), cfg);
  CHECK(r1.epoch_loss == r2.epoch_loss);  // bit-identical
  CHECK(r1.model.bias == r2.model.bias);
  CHECK(r1.model.weights == r2.model.weights);

  TrainConfig other = cfg;
  other.seed = cfg.seed + 1;
  const auto r3 = train(data.records, data.texts, small_features(), other);
  CHECK(r1.epoch_loss != r3.epoch_loss);
}

TEST_CASE("empty dataset is rejected") {
  CHECK_THROWS_AS(train({}, {}, small_features(), TrainConfig{}), DataError);
}

TEST_CASE("model save/load round trip is exact") {
  TmpDir dir("model");
  const auto model = random_model(21, 1u << 10);
  const auto path = dir.file("adapter.model");
  save_model(model, path);
  const auto loaded = load_model(path);
  CHECK(loaded.bias == model.bias);
  CHECK(loaded.weights == model.weights);
  CHECK(loaded.feature_config == model.feature_config);

  for (int i = 0; i < 100; ++i) {
    const std::string text = "probe text " + std::to_string(i * 37);
    const auto a = model.predict_text(text);
    const auto b = loaded.predict_text(text);
    CHECK(a.probs() == b.probs());  // exact
  }
}

TEST_CASE("truncated model file is a checksum error") {
  TmpDir dir("model");
  const auto model = random_model(22, 1u << 10);
  const auto path = dir.file("adapter.model");
  save_model(model, path);
  const std::string content = read_text_file(path);
  write_text_file_atomic(path, content.substr(0, content.size() - 40));
  CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("corrupt"), DataError);
}

TEST_CASE("version mismatch names both versions") {
  TmpDir dir("model");
  const auto model = AdapterModel::zeros(small_features());
  const auto path = dir.file("adapter.model");
  save_model(model, path);
  std::string content = read_text_file(path);
  const auto pos = content.find("\"version\":1");
  REQUIRE(pos != std::string::npos);
  content.replace(pos, 11, "\"version\":2");
  write_text_file_atomic(path, content);
  try {
    load_model(path);
    FAIL("expected version mismatch");
  } catch (const DataError& e) {
    const std::string what = e.what();
    CHECK(what.find("2") != std::string::npos);
    CHECK(what.find("1") != std::string::npos);
  }
}
