#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "mthinker/response_parser.hpp"

namespace mthinker {

using Rational = boost::multiprecision::cpp_rational;

enum class AnswerKind { rational, decimal, integer, tuple, interval, string };

std::string_view to_string(AnswerKind kind);

/// Normalized form of a final answer. Numeric kinds carry an exact rational;
/// tuples and intervals carry their elements; strings carry folded text.
struct CanonicalAnswer {
  AnswerKind kind = AnswerKind::string;
  Rational value;
  std::vector<CanonicalAnswer> elements;
  bool left_closed = false;
  bool right_closed = false;
  std::string text;
  std::string raw;

  bool is_numeric() const {
    return kind == AnswerKind::rational || kind == AnswerKind::decimal || kind == AnswerKind::integer;
  }

  /// Text that normalizes back to a structurally equal answer.
  std::string canonical() const;

  /// Kind, value, elements, closedness and text all equal (raw ignored).
  bool structurally_equal(const CanonicalAnswer& other) const;
};

CanonicalAnswer normalize_answer(std::string_view answer);

/// Compatible kinds and equal canonical values; numeric kinds compare as
/// rationals, tuples elementwise, strings exactly.
bool equivalent(const CanonicalAnswer& a, const CanonicalAnswer& b);
bool equivalent(std::string_view a, std::string_view b);

/// 1 iff the last boxed payload of the answer is equivalent to `gold`.
int accuracy_reward(const ParsedResponse& parsed, std::string_view gold);

}  // namespace mthinker
