#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "stratroute/core.hpp"

namespace stratroute {

// Bumped whenever a standardization rule changes; stamped into every
// evaluation report so results cite the canonicalizer they were scored with.
inline constexpr const char* kCanonicalizerVersion = "cv1";

enum class AnswerKind { Integer, Decimal, FractionAsDecimal, Text };

const std::string& to_string(AnswerKind k);

struct CanonicalAnswer {
  std::string canonical;
  AnswerKind kind = AnswerKind::Text;
  std::optional<StrategyId> source_strategy;
};

// Normalizes an answer string to a canonical form. Never fails: anything
// that does not parse as a number comes back lowercase-trimmed as Text.
//
// Rules: trims whitespace; strips one surrounding marker pair (\boxed{...}
// or $...$); strips thousands separators, a leading '+', and trailing
// fractional zeros; "a/b" with b != 0 becomes the exact decimal when it
// terminates, else 12 significant digits.
//
// The result is a fixed point: standardize(x.canonical).canonical == x.canonical.
CanonicalAnswer standardize(std::string_view raw);

// Majority vote over standardized answers. The plurality group wins; group
// ties go to the group holding the strategy with the highest predicted
// probability, then to canonical strategy order. Returns the winning
// group's canonical answer.
std::string vote(const std::map<StrategyId, std::string>& answers,
                 const StrategyDistribution& distribution);

}  // namespace stratroute
