#include <doctest.h>

#include <cmath>

#include "stratroute/core.hpp"

using namespace stratroute;

TEST_CASE("canonical strategy order is fixed") {
  const auto& order = canonical_strategy_order();
  REQUIRE(order.size() == 4);
  CHECK(order[0] == StrategyId::NLR);
  CHECK(order[1] == StrategyId::CAR);
  CHECK(order[2] == StrategyId::TIR);
  CHECK(order[3] == StrategyId::EBR);
  CHECK(strategy_index(StrategyId::CAR) == 1);
}

TEST_CASE("strategy name round trip") {
  for (StrategyId s : canonical_strategy_order()) {
    CHECK(strategy_from_string(to_string(s)) == s);
  }
  CHECK(!strategy_from_string("ZZZ").has_value());
  CHECK(!strategy_from_string("").has_value());
}

TEST_CASE("distribution constructor enforces invariants") {
  CHECK_NOTHROW(StrategyDistribution({0.25, 0.25, 0.25, 0.25}));
  CHECK_NOTHROW(StrategyDistribution({1.0, 0.0, 0.0, 0.0}));
  CHECK_THROWS_AS(StrategyDistribution({0.5, 0.5, 0.5, 0.5}), DataError);
  CHECK_THROWS_AS(StrategyDistribution({-0.1, 0.5, 0.3, 0.3}), DataError);
  CHECK_THROWS_AS(StrategyDistribution({0.25, 0.25, 0.25, 0.2501}), DataError);
  // Within the 1e-9 tolerance.
  CHECK_NOTHROW(StrategyDistribution({0.25, 0.25, 0.25, 0.25 + 4e-10}));
}

TEST_CASE("softmax is shift invariant and sums to one") {
  const auto a = StrategyDistribution::softmax({1.0, 2.0, 3.0, 4.0});
  const auto b = StrategyDistribution::softmax({101.0, 102.0, 103.0, 104.0});
  for (int i = 0; i < kNumStrategies; ++i) {
    CHECK(a.at(i) == doctest::Approx(b.at(i)).epsilon(1e-12));
  }
  double sum = 0.0;
  for (int i = 0; i < kNumStrategies; ++i) sum += a.at(i);
  CHECK(std::abs(sum - 1.0) <= 1e-9);
}

TEST_CASE("softmax handles extreme logits without overflow") {
  const auto p = StrategyDistribution::softmax({1000.0, 0.0, 0.0, 0.0});
  CHECK(p.at(0) == doctest::Approx(1.0));
  CHECK(p.argmax() == StrategyId::NLR);
}

TEST_CASE("argmax and top_two break ties by canonical order") {
  const StrategyDistribution uniform;
  CHECK(uniform.argmax() == StrategyId::NLR);
  const auto [t1, t2] = uniform.top_two();
  CHECK(t1 == StrategyId::NLR);
  CHECK(t2 == StrategyId::CAR);

  const StrategyDistribution p({0.1, 0.4, 0.4, 0.1});
  const auto [u1, u2] = p.top_two();
  CHECK(u1 == StrategyId::CAR);
  CHECK(u2 == StrategyId::TIR);
}

TEST_CASE("trace validation catches out-of-range fields") {
  StrategyTrace t;
  t.problem_id = "p1";
  t.strategy = StrategyId::TIR;
  t.quality = 0.5;
  CHECK_NOTHROW(validate_trace(t));
  t.quality = 1.2;
  CHECK_THROWS_AS(validate_trace(t), DataError);
  t.quality = 0.5;
  t.correct = 2;
  CHECK_THROWS_AS(validate_trace(t), DataError);
  t.correct = 1;
  t.time_ms = -1.0;
  CHECK_THROWS_AS(validate_trace(t), DataError);
  t.time_ms = 0.0;
  t.output_length = -5;
  CHECK_THROWS_AS(validate_trace(t), DataError);
}
