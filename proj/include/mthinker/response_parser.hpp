#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "mthinker/error.hpp"

namespace mthinker {

/// A response split around its single `<think>…</think>` pair.
struct ParsedResponse {
  std::string prefix;  // leading whitespace before `<think>`
  std::string think;
  std::string answer;

  /// prefix + "<think>" + think + "</think>" + answer
  std::string reconstruct() const;
};

enum class FormatIssue { missing_open, missing_close, duplicate_tags, out_of_order, empty_segment };

std::string_view to_string(FormatIssue issue);

class BadFormat : public Error {
 public:
  explicit BadFormat(FormatIssue issue);
  FormatIssue issue() const noexcept { return issue_; }

 private:
  FormatIssue issue_;
};

std::variant<ParsedResponse, FormatIssue> try_parse_response(std::string_view raw);

/// Throws BadFormat.
ParsedResponse parse_response(std::string_view raw);

/// 0 when the response parses, -1 otherwise.
int format_reward(std::string_view raw);

/// Payload of the last `\boxed{…}`; nullopt when absent or unbalanced.
std::optional<std::string> extract_boxed(std::string_view answer);

}  // namespace mthinker
