#include "stratroute/aggregation.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <numeric>
#include <vector>

#include "stratroute/util.hpp"

namespace stratroute {

const std::string& to_string(AnswerKind k) {
  static const std::array<std::string, 4> names = {"integer", "decimal", "fraction-as-decimal",
                                                   "text"};
  return names[static_cast<size_t>(k)];
}

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Strips one surrounding \boxed{...} or $...$ pair, if present.
std::string_view strip_answer_marker(std::string_view s) {
  constexpr std::string_view boxed = "\\boxed{";
  if (s.size() >= boxed.size() + 1 && s.substr(0, boxed.size()) == boxed && s.back() == '}') {
    return s.substr(boxed.size(), s.size() - boxed.size() - 1);
  }
  if (s.size() >= 2 && s.front() == '$' && s.back() == '$') {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

// "1234" or "1,234,567" (groups of exactly three). Returns digits only.
std::optional<std::string> parse_integer_digits(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.find(',') == std::string_view::npos) {
    for (char c : s) {
      if (!is_digit(c)) return std::nullopt;
    }
    return std::string(s);
  }
  std::string digits;
  size_t group = 0;
  bool first_group = true;
  for (size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == ',') {
      const bool ok = first_group ? (group >= 1 && group <= 3) : (group == 3);
      if (!ok || (i == s.size() && first_group)) return std::nullopt;
      first_group = false;
      group = 0;
      continue;
    }
    if (!is_digit(s[i])) return std::nullopt;
    digits.push_back(s[i]);
    ++group;
  }
  return digits;
}

std::string strip_leading_zeros(std::string digits) {
  size_t i = 0;
  while (i + 1 < digits.size() && digits[i] == '0') ++i;
  return digits.substr(i);
}

std::string strip_trailing_zeros(std::string digits) {
  size_t e = digits.size();
  while (e > 0 && digits[e - 1] == '0') --e;
  return digits.substr(0, e);
}

struct NumericParts {
  bool negative = false;
  std::string int_digits;   // leading zeros stripped, at least "0"
  std::string frac_digits;  // trailing zeros stripped, may be empty
};

std::string render_numeric(const NumericParts& p) {
  const bool is_zero = p.int_digits == "0" && p.frac_digits.empty();
  std::string out;
  if (p.negative && !is_zero) out.push_back('-');
  out += p.int_digits;
  if (!p.frac_digits.empty()) {
    out.push_back('.');
    out += p.frac_digits;
  }
  return out;
}

// "+1,234.50" -> integer/decimal parts; nullopt when not a plain number.
std::optional<NumericParts> parse_plain_number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  NumericParts parts;
  if (s.front() == '+' || s.front() == '-') {
    parts.negative = s.front() == '-';
    s.remove_prefix(1);
  }
  if (s.empty()) return std::nullopt;
  const size_t dot = s.find('.');
  std::string_view int_part = dot == std::string_view::npos ? s : s.substr(0, dot);
  std::string_view frac_part = dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);
  if (dot != std::string_view::npos && frac_part.find('.') != std::string_view::npos) {
    return std::nullopt;
  }
  std::string int_digits;
  if (int_part.empty()) {
    if (frac_part.empty()) return std::nullopt;  // "." or "-."
    int_digits = "0";
  } else {
    auto parsed = parse_integer_digits(int_part);
    if (!parsed) return std::nullopt;
    int_digits = strip_leading_zeros(*parsed);
  }
  for (char c : frac_part) {
    if (!is_digit(c)) return std::nullopt;
  }
  parts.int_digits = int_digits;
  parts.frac_digits = strip_trailing_zeros(std::string(frac_part));
  return parts;
}

// "a/b" with integer a (optional sign) and positive integer b. Exact decimal
// expansion when the reduced denominator is 2^i * 5^j, else 12 significant
// digits of the double quotient.
std::optional<CanonicalAnswer> parse_fraction(std::string_view s) {
  const size_t slash = s.find('/');
  if (slash == std::string_view::npos || slash == 0 || slash + 1 >= s.size()) {
    return std::nullopt;
  }
  std::string_view num = s.substr(0, slash);
  std::string_view den = s.substr(slash + 1);
  bool negative = false;
  if (num.front() == '+' || num.front() == '-') {
    negative = num.front() == '-';
    num.remove_prefix(1);
  }
  if (num.empty() || den.empty()) return std::nullopt;
  for (char c : num) {
    if (!is_digit(c)) return std::nullopt;
  }
  for (char c : den) {
    if (!is_digit(c)) return std::nullopt;
  }
  long long a = 0;
  long long b = 0;
  if (std::from_chars(num.data(), num.data() + num.size(), a).ec != std::errc{}) {
    return std::nullopt;
  }
  if (std::from_chars(den.data(), den.data() + den.size(), b).ec != std::errc{}) {
    return std::nullopt;
  }
  if (b == 0) return std::nullopt;

  const long long g = std::gcd(a, b);
  if (g > 1) {
    a /= g;
    b /= g;
  }
  long long q = a / b;
  long long r = a % b;

  CanonicalAnswer out;
  out.kind = AnswerKind::FractionAsDecimal;
  if (r == 0) {
    NumericParts parts{negative, std::to_string(q), ""};
    out.canonical = render_numeric(parts);
    return out;
  }

  long long reduced = b;
  while (reduced % 2 == 0) reduced /= 2;
  while (reduced % 5 == 0) reduced /= 5;
  if (reduced == 1) {
    // Terminating: long division yields the exact shortest expansion.
    std::string frac;
    unsigned __int128 rem = static_cast<unsigned __int128>(r);
    while (rem != 0) {
      rem *= 10;
      frac.push_back(static_cast<char>('0' + static_cast<long long>(rem / static_cast<unsigned __int128>(b))));
      rem %= static_cast<unsigned __int128>(b);
    }
    NumericParts parts{negative, std::to_string(q), frac};
    out.canonical = render_numeric(parts);
    return out;
  }

  const double value = (negative ? -1.0 : 1.0) * static_cast<double>(a) / static_cast<double>(b);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", value);
  out.canonical = buf;
  return out;
}

}  // namespace

CanonicalAnswer standardize(std::string_view raw) {
  std::string_view s = trim_view(raw);
  s = trim_view(strip_answer_marker(s));

  if (auto parts = parse_plain_number(s)) {
    CanonicalAnswer out;
    out.canonical = render_numeric(*parts);
    out.kind = parts->frac_digits.empty() ? AnswerKind::Integer : AnswerKind::Decimal;
    return out;
  }
  if (auto frac = parse_fraction(s)) {
    return *frac;
  }
  CanonicalAnswer out;
  out.kind = AnswerKind::Text;
  out.canonical = lowercase_ascii(s);
  return out;
}

std::string vote(const std::map<StrategyId, std::string>& answers,
                 const StrategyDistribution& distribution) {
  if (answers.empty()) {
    throw DataError("vote: empty answer set");
  }

  struct Group {
    std::string canonical;
    size_t size = 0;
    double best_prob = -1.0;
    int best_index = kNumStrategies;  // canonical index of the highest-probability member
  };
  std::map<std::string, Group> groups;
  for (const auto& [strategy, raw] : answers) {
    const std::string canonical = standardize(raw).canonical;
    Group& g = groups[canonical];
    g.canonical = canonical;
    g.size += 1;
    const double p = distribution[strategy];
    const int idx = strategy_index(strategy);
    if (p > g.best_prob || (p == g.best_prob && idx < g.best_index)) {
      g.best_prob = p;
      g.best_index = idx;
    }
  }

  const Group* winner = nullptr;
  for (const auto& [_, g] : groups) {
    if (winner == nullptr || g.size > winner->size ||
        (g.size == winner->size &&
         (g.best_prob > winner->best_prob ||
          (g.best_prob == winner->best_prob && g.best_index < winner->best_index)))) {
      winner = &g;
    }
  }
  return winner->canonical;
}

}  // namespace stratroute
