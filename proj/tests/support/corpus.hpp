// Synthetic corpus construction for end-to-end tests: four problem
// families, each solvable by exactly one strategy with high probability,
// with family-specific vocabulary so the mapping is learnable from text.
#pragma once

#include <array>
#include <string>
#include <vector>

#include "stratroute/aggregation.hpp"
#include "stratroute/core.hpp"
#include "stratroute/executors.hpp"
#include "stratroute/profiler.hpp"
#include "stratroute/trace_store.hpp"
#include "stratroute/util.hpp"

namespace corpus {

using namespace stratroute;

inline const std::array<std::vector<std::string>, 4>& family_vocab() {
  static const std::array<std::vector<std::string>, 4> vocab = {{
      {"prove", "reasoning", "explain", "deduce", "argument", "narrative", "logic", "essay",
       "justify", "describe", "statement", "paragraph"},
      {"compute", "program", "code", "loop", "variable", "algorithm", "function", "execute",
       "script", "array", "integer", "compile"},
      {"tool", "solver", "calculator", "integrate", "equation", "symbolic", "derivative", "matrix",
       "lookup", "api", "query", "numeric"},
      {"ensemble", "sample", "aggregate", "consensus", "multiple", "paths", "combine", "diverse",
       "candidates", "majority", "pool", "blend"},
  }};
  return vocab;
}

inline const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> words = {"find", "the", "value", "of", "number", "result"};
  return words;
}

inline std::string family_tag(int family) { return "fam" + std::to_string(family); }

struct Corpus {
  std::vector<ProblemInstance> problems;  // tagged famN, numeric gold answers
  std::vector<SyntheticRule> rules;       // one rule per family
};

// p_hit: probability the family strategy answers correctly; p_other for the
// remaining strategies.
inline Corpus make_corpus(size_t count, uint64_t seed, double p_hit = 0.95,
                          double p_other = 0.2) {
  Corpus c;
  c.problems.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    const int family = static_cast<int>(i % 4);
    const auto& vocab = family_vocab()[static_cast<size_t>(family)];
    ProblemInstance p;
    p.id = "syn-" + std::to_string(i);
    p.tags = {family_tag(family)};
    p.gold_answer = std::to_string(100 + (i * 7) % 900);
    std::string text = "problem " + std::to_string(i);
    uint64_t state = hash_combine(seed, i);
    for (int w = 0; w < 6; ++w) {
      state = splitmix64(state);
      text += ' ';
      text += vocab[state % vocab.size()];
    }
    for (int w = 0; w < 2; ++w) {
      state = splitmix64(state);
      text += ' ';
      text += filler_words()[state % filler_words().size()];
    }
    p.text = std::move(text);
    c.problems.push_back(std::move(p));
  }
  for (int family = 0; family < 4; ++family) {
    SyntheticRule rule;
    rule.tag = family_tag(family);
    for (int s = 0; s < 4; ++s) {
      rule.p_correct[static_cast<size_t>(s)] = (s == family) ? p_hit : p_other;
      rule.time_ms[static_cast<size_t>(s)] = {50.0 + 20.0 * s, 150.0 + 20.0 * s};
      rule.length[static_cast<size_t>(s)] = {20 + 10 * s, 100 + 10 * s};
    }
    c.rules.push_back(std::move(rule));
  }
  return c;
}

// Executes all four strategies once per problem and packages the outcomes
// as a trace store. Correctness is judged through the shared canonicalizer;
// quality scores are uninformative draws in [0, 1].
inline TraceStore make_trace_store(const Corpus& c, uint64_t executor_seed) {
  SyntheticExecutor executor(executor_seed, c.rules);
  std::vector<StrategyTrace> traces;
  traces.reserve(c.problems.size() * 4);
  for (const ProblemInstance& p : c.problems) {
    const std::string gold = standardize(*p.gold_answer).canonical;
    for (StrategyId s : canonical_strategy_order()) {
      const ExecutorResult r = executor.execute(s, p, 0);
      StrategyTrace t;
      t.problem_id = p.id;
      t.strategy = s;
      t.raw_answer = r.raw_answer;
      t.correct = standardize(r.raw_answer).canonical == gold ? 1 : 0;
      t.quality = unit_double(hash_combine(fnv1a64(p.id), static_cast<uint64_t>(strategy_index(s))));
      t.time_ms = r.time_ms;
      t.output_length = r.output_length;
      traces.push_back(std::move(t));
    }
  }
  TraceMetadata meta;
  meta.length_unit = "tokens";
  meta.source_model = "synthetic";
  return TraceStore::build(std::move(meta), c.problems, std::move(traces));
}

// The distribution implied by the family's expected signals under default
// profiler settings: corr = p_correct, qual = 0.5, eff = 1 for everyone.
inline StrategyDistribution oracle_distribution(int family, double p_hit = 0.95,
                                                double p_other = 0.2) {
  const ScoreWeights weights;
  StrategyValues scores{};
  for (int s = 0; s < 4; ++s) {
    const double corr = (s == family) ? p_hit : p_other;
    scores[static_cast<size_t>(s)] =
        weights.w_correct * corr + weights.w_quality * 0.5 + weights.w_efficiency * 1.0;
  }
  return target_distribution(scores, 0.5);
}

inline int family_of(const ProblemInstance& p) {
  for (int f = 0; f < 4; ++f) {
    if (!p.tags.empty() && p.tags.front() == family_tag(f)) return f;
  }
  return -1;
}

}  // namespace corpus
