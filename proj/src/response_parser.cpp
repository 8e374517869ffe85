#include "mthinker/response_parser.hpp"

#include <algorithm>

namespace mthinker {

namespace {

constexpr std::string_view kOpen = "<think>";
constexpr std::string_view kClose = "</think>";

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t count = 0;
  for (std::size_t pos = text.find(needle); pos != std::string_view::npos; pos = text.find(needle, pos + 1)) {
    ++count;
  }
  return count;
}

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return c == ' ' || (c >= '\t' && c <= '\r'); });
}

}  // namespace

std::string ParsedResponse::reconstruct() const {
  std::string out;
  out.reserve(prefix.size() + think.size() + answer.size() + kOpen.size() + kClose.size());
  out.append(prefix).append(kOpen).append(think).append(kClose).append(answer);
  return out;
}

std::string_view to_string(FormatIssue issue) {
  switch (issue) {
    case FormatIssue::missing_open: return "missing_open";
    case FormatIssue::missing_close: return "missing_close";
    case FormatIssue::duplicate_tags: return "duplicate_tags";
    case FormatIssue::out_of_order: return "out_of_order";
    case FormatIssue::empty_segment: return "empty_segment";
  }
  return "unknown";
}

BadFormat::BadFormat(FormatIssue issue)
    : Error(Errc::bad_format, "BAD_FORMAT(" + std::string(to_string(issue)) + ")"), issue_(issue) {}

std::variant<ParsedResponse, FormatIssue> try_parse_response(std::string_view raw) {
  const std::size_t opens = count_occurrences(raw, kOpen);
  const std::size_t closes = count_occurrences(raw, kClose);
  if (opens == 0) return FormatIssue::missing_open;
  if (closes == 0) return FormatIssue::missing_close;
  if (opens > 1 || closes > 1) return FormatIssue::duplicate_tags;

  const std::size_t open = raw.find(kOpen);
  const std::size_t close = raw.find(kClose);
  if (close < open) return FormatIssue::out_of_order;
  if (!is_blank(raw.substr(0, open))) return FormatIssue::missing_open;

  ParsedResponse parsed;
  parsed.prefix = std::string(raw.substr(0, open));
  parsed.think = std::string(raw.substr(open + kOpen.size(), close - open - kOpen.size()));
  parsed.answer = std::string(raw.substr(close + kClose.size()));
  if (is_blank(parsed.think) || is_blank(parsed.answer)) return FormatIssue::empty_segment;
  return parsed;
}

ParsedResponse parse_response(std::string_view raw) {
  auto result = try_parse_response(raw);
  if (auto* issue = std::get_if<FormatIssue>(&result)) throw BadFormat(*issue);
  return std::get<ParsedResponse>(std::move(result));
}

int format_reward(std::string_view raw) {
  return std::holds_alternative<ParsedResponse>(try_parse_response(raw)) ? 0 : -1;
}

std::optional<std::string> extract_boxed(std::string_view answer) {
  constexpr std::string_view kBoxed = "\\boxed";
  const std::size_t at = answer.rfind(kBoxed);
  if (at == std::string_view::npos) return std::nullopt;
  std::size_t open = at + kBoxed.size();
  while (open < answer.size() && answer[open] == ' ') ++open;
  if (open >= answer.size() || answer[open] != '{') return std::nullopt;

  int depth = 0;
  for (std::size_t i = open; i < answer.size(); ++i) {
    const char c = answer[i];
    if (c == '\\' && i + 1 < answer.size() && (answer[i + 1] == '{' || answer[i + 1] == '}')) {
      ++i;
      continue;
    }
    if (c == '{') ++depth;
    if (c == '}' && --depth == 0) return std::string(answer.substr(open + 1, i - open - 1));
  }
  return std::nullopt;
}

}  // namespace mthinker
