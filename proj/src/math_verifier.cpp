#include "mthinker/math_verifier.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>
#include <utility>

#include "mthinker/unicode.hpp"

namespace mthinker {

namespace {

using boost::multiprecision::cpp_int;

struct Number {
  AnswerKind kind;
  Rational value;
};

bool is_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

// Removes `\left` / `\right` but not `\leftarrow` and friends.
void remove_sizing(std::string& s, std::string_view cmd) {
  std::size_t pos = 0;
  while ((pos = s.find(cmd, pos)) != std::string::npos) {
    const std::size_t end = pos + cmd.size();
    const bool letter_follows = end < s.size() && std::isalpha(static_cast<unsigned char>(s[end]));
    if (letter_follows) {
      pos = end;
    } else {
      s.erase(pos, cmd.size());
    }
  }
}

std::string_view trim(std::string_view s) {
  const auto is_ws = [](unsigned char c) { return c == ' ' || (c >= '\t' && c <= '\r'); };
  while (!s.empty() && is_ws(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && is_ws(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Index of the brace closing the one at `open`, or npos.
std::size_t closing_brace(std::string_view s, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    if (s[i] == '{') ++depth;
    if (s[i] == '}' && --depth == 0) return i;
  }
  return std::string_view::npos;
}

std::string unwrap_text(std::string s) {
  constexpr std::array<std::string_view, 4> wrappers = {"\\text{", "\\textbf{", "\\mathrm{", "\\mbox{"};
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::string_view w : wrappers) {
      if (s.rfind(w, 0) == 0 && closing_brace(s, w.size() - 1) == s.size() - 1) {
        s = std::string(trim(std::string_view(s).substr(w.size(), s.size() - w.size() - 1)));
        changed = true;
      }
    }
  }
  return s;
}

std::string clean(std::string_view answer) {
  std::string s(trim(answer));
  while (s.size() >= 2 && s.front() == '$' && s.back() == '$') s = std::string(trim(std::string_view(s).substr(1, s.size() - 2)));
  remove_sizing(s, "\\left");
  remove_sizing(s, "\\right");
  for (std::string_view spacing : {"\\!", "\\,", "\\;", "\\:", "\\ ", "\\displaystyle"}) replace_all(s, spacing, "");
  replace_all(s, "\\dfrac", "\\frac");
  replace_all(s, "\\tfrac", "\\frac");
  replace_all(s, "\xE2\x88\x92", "-");  // U+2212 minus sign
  replace_all(s, "^{\\circ}", "");
  replace_all(s, "^\\circ", "");
  replace_all(s, "\xC2\xB0", "");  // degree sign
  s = unwrap_text(std::string(trim(s)));
  while (!s.empty() && s.back() == '.') s.pop_back();

  const std::u32string chars = unicode::decode(s);
  std::u32string compact;
  compact.reserve(chars.size());
  for (char32_t c : chars) {
    if (!unicode::is_space(c)) compact.push_back(c);
  }
  return unicode::encode(compact);
}

// Base-10 digits to an integer; leading zeros would select octal in cpp_int's
// string constructor.
cpp_int decimal_integer(std::string_view digits) {
  const auto first = digits.find_first_not_of('0');
  if (first == std::string_view::npos) return 0;
  return cpp_int(std::string(digits.substr(first)));
}

std::optional<Rational> parse_decimal_body(std::string_view s, AnswerKind& kind) {
  if (is_digits(s)) {
    kind = AnswerKind::integer;
    return Rational(decimal_integer(s));
  }
  const std::size_t dot = s.find('.');
  if (dot == std::string_view::npos || s.find('.', dot + 1) != std::string_view::npos) return std::nullopt;
  const std::string_view whole = s.substr(0, dot);
  const std::string_view frac = s.substr(dot + 1);
  if ((whole.empty() && frac.empty()) || (!whole.empty() && !is_digits(whole)) || (!frac.empty() && !is_digits(frac))) {
    return std::nullopt;
  }
  kind = AnswerKind::decimal;
  const cpp_int scale = boost::multiprecision::pow(cpp_int(10), static_cast<unsigned>(frac.size()));
  const cpp_int digits = decimal_integer(std::string(whole) + std::string(frac));
  return Rational(digits, scale);
}

std::optional<Number> parse_number(std::string_view s);

// `\frac{A}{B}` or the `\frac12` shorthand.
std::optional<Rational> parse_frac(std::string_view s) {
  constexpr std::string_view kFrac = "\\frac";
  if (s.substr(0, kFrac.size()) != kFrac) return std::nullopt;
  s.remove_prefix(kFrac.size());
  if (s.size() == 2 && is_digits(s)) {
    if (s[1] == '0') return std::nullopt;
    return Rational(s[0] - '0', s[1] - '0');
  }
  if (s.empty() || s.front() != '{') return std::nullopt;
  const std::size_t num_end = closing_brace(s, 0);
  if (num_end == std::string_view::npos || num_end + 1 >= s.size() || s[num_end + 1] != '{') return std::nullopt;
  const std::size_t den_end = closing_brace(s, num_end + 1);
  if (den_end != s.size() - 1) return std::nullopt;
  const auto num = parse_number(s.substr(1, num_end - 1));
  const auto den = parse_number(s.substr(num_end + 2, den_end - num_end - 2));
  if (!num || !den || den->value == 0) return std::nullopt;
  return num->value / den->value;
}

std::optional<Number> parse_number(std::string_view s) {
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  if (s.empty()) return std::nullopt;

  std::optional<Number> result;
  AnswerKind kind = AnswerKind::integer;
  if (auto value = parse_decimal_body(s, kind)) {
    result = Number{kind, *value};
  } else if (auto frac = parse_frac(s)) {
    result = Number{AnswerKind::rational, *frac};
  } else if (const std::size_t slash = s.find('/'); slash != std::string_view::npos) {
    AnswerKind num_kind = AnswerKind::integer;
    AnswerKind den_kind = AnswerKind::integer;
    const auto num = parse_decimal_body(s.substr(0, slash), num_kind);
    const auto den = parse_decimal_body(s.substr(slash + 1), den_kind);
    if (num && den && *den != 0) result = Number{AnswerKind::rational, *num / *den};
  }
  if (result && negative) result->value = -result->value;
  return result;
}

// Splits on ',' / ';' at bracket depth zero.
std::vector<std::string_view> split_top_level(std::string_view s) {
  std::vector<std::string_view> parts;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '(' || c == '[' || c == '{') ++depth;
    if (c == ')' || c == ']' || c == '}') --depth;
    if (depth == 0 && (c == ',' || c == ';')) {
      parts.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  parts.push_back(s.substr(start));
  return parts;
}

// The bracket at 0 closes exactly at the last character.
bool enclosed(std::string_view s) {
  if (s.size() < 2 || (s.front() != '(' && s.front() != '[') || (s.back() != ')' && s.back() != ']')) return false;
  int depth = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '(' || c == '[' || c == '{') ++depth;
    if (c == ')' || c == ']' || c == '}') {
      if (--depth == 0 && i != s.size() - 1) return false;
    }
  }
  return depth == 0;
}

bool thousands_grouped(const std::vector<std::string_view>& parts) {
  if (parts.size() < 2) return false;
  std::string_view head = parts.front();
  if (!head.empty() && head.front() == '-') head.remove_prefix(1);
  if (!is_digits(head) || head.size() > 3) return false;
  return std::all_of(parts.begin() + 1, parts.end(), [](std::string_view p) { return p.size() == 3 && is_digits(p); });
}

CanonicalAnswer parse_clean(std::string_view s);

CanonicalAnswer make_string(std::string_view s) {
  CanonicalAnswer out;
  out.kind = AnswerKind::string;
  out.text = unicode::fold(s);
  return out;
}

CanonicalAnswer make_sequence(const std::vector<std::string_view>& parts) {
  CanonicalAnswer out;
  out.kind = AnswerKind::tuple;
  for (std::string_view p : parts) out.elements.push_back(parse_clean(p));
  return out;
}

CanonicalAnswer parse_clean(std::string_view s) {
  if (s.empty()) return make_string(s);

  for (std::string_view pct : {std::string_view("\\%"), std::string_view("%")}) {
    if (s.size() > pct.size() && s.substr(s.size() - pct.size()) == pct) {
      if (auto n = parse_number(s.substr(0, s.size() - pct.size()))) {
        CanonicalAnswer out;
        out.kind = AnswerKind::rational;
        out.value = n->value / 100;
        return out;
      }
      return make_string(s);
    }
  }

  if (enclosed(s)) {
    const std::string_view inner = s.substr(1, s.size() - 2);
    const auto parts = split_top_level(inner);
    if (parts.size() == 1) {
      if (s.front() == '(' && s.back() == ')') return parse_clean(inner);
      return make_string(s);
    }
    const bool square = s.front() == '[' || s.back() == ']';
    if (square && parts.size() == 2) {
      CanonicalAnswer out;
      out.kind = AnswerKind::interval;
      out.elements = {parse_clean(parts[0]), parse_clean(parts[1])};
      out.left_closed = s.front() == '[';
      out.right_closed = s.back() == ']';
      return out;
    }
    if ((s.front() == '(') == (s.back() == ')')) return make_sequence(parts);
    return make_string(s);
  }

  const auto parts = split_top_level(s);
  if (parts.size() > 1) {
    if (thousands_grouped(parts)) {
      std::string digits;
      for (std::string_view p : parts) digits.append(p);
      if (auto n = parse_number(digits)) return parse_clean(digits);
    }
    return make_sequence(parts);
  }

  if (auto n = parse_number(s)) {
    CanonicalAnswer out;
    out.kind = n->kind;
    out.value = n->value;
    return out;
  }
  return make_string(s);
}

std::string render_decimal(const Rational& value) {
  const cpp_int num = boost::multiprecision::numerator(value);
  cpp_int den = boost::multiprecision::denominator(value);
  unsigned twos = 0;
  unsigned fives = 0;
  while (den % 2 == 0) {
    den /= 2;
    ++twos;
  }
  while (den % 5 == 0) {
    den /= 5;
    ++fives;
  }
  const unsigned places = std::max(1U, std::max(twos, fives));
  const cpp_int scaled = num * boost::multiprecision::pow(cpp_int(10), places) / boost::multiprecision::denominator(value);
  const bool negative = scaled < 0;
  std::string digits = (negative ? cpp_int(-scaled) : scaled).str();
  if (digits.size() <= places) digits.insert(0, places - digits.size() + 1, '0');
  digits.insert(digits.size() - places, ".");
  return (negative ? "-" : "") + digits;
}

}  // namespace

std::string_view to_string(AnswerKind kind) {
  switch (kind) {
    case AnswerKind::rational: return "rational";
    case AnswerKind::decimal: return "decimal";
    case AnswerKind::integer: return "integer";
    case AnswerKind::tuple: return "tuple";
    case AnswerKind::interval: return "interval";
    case AnswerKind::string: return "string";
  }
  return "string";
}

std::string CanonicalAnswer::canonical() const {
  switch (kind) {
    case AnswerKind::integer:
      return boost::multiprecision::numerator(value).str();
    case AnswerKind::rational:
      return boost::multiprecision::numerator(value).str() + "/" + boost::multiprecision::denominator(value).str();
    case AnswerKind::decimal:
      return render_decimal(value);
    case AnswerKind::tuple:
    case AnswerKind::interval: {
      std::string out(1, kind == AnswerKind::tuple || !left_closed ? '(' : '[');
      for (std::size_t i = 0; i < elements.size(); ++i) {
        if (i > 0) out.push_back(',');
        out += elements[i].canonical();
      }
      out.push_back(kind == AnswerKind::tuple || !right_closed ? ')' : ']');
      return out;
    }
    case AnswerKind::string:
      return text;
  }
  return text;
}

bool CanonicalAnswer::structurally_equal(const CanonicalAnswer& other) const {
  if (kind != other.kind || value != other.value || text != other.text || left_closed != other.left_closed ||
      right_closed != other.right_closed || elements.size() != other.elements.size()) {
    return false;
  }
  for (std::size_t i = 0; i < elements.size(); ++i) {
    if (!elements[i].structurally_equal(other.elements[i])) return false;
  }
  return true;
}

CanonicalAnswer normalize_answer(std::string_view answer) {
  CanonicalAnswer out = parse_clean(clean(answer));
  out.raw = std::string(answer);
  return out;
}

bool equivalent(const CanonicalAnswer& a, const CanonicalAnswer& b) {
  if (a.is_numeric() && b.is_numeric()) return a.value == b.value;
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case AnswerKind::interval:
      if (a.left_closed != b.left_closed || a.right_closed != b.right_closed) return false;
      [[fallthrough]];
    case AnswerKind::tuple:
      if (a.elements.size() != b.elements.size()) return false;
      for (std::size_t i = 0; i < a.elements.size(); ++i) {
        if (!equivalent(a.elements[i], b.elements[i])) return false;
      }
      return true;
    case AnswerKind::string:
      return a.text == b.text;
    default:
      return false;
  }
}

bool equivalent(std::string_view a, std::string_view b) { return equivalent(normalize_answer(a), normalize_answer(b)); }

int accuracy_reward(const ParsedResponse& parsed, std::string_view gold) {
  const auto payload = extract_boxed(parsed.answer);
  if (!payload) return 0;
  return equivalent(*payload, gold) ? 1 : 0;
}

}  // namespace mthinker
