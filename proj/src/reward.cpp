#include "mthinker/reward.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "mthinker/math_verifier.hpp"

namespace mthinker {

// Defined in the generated judge_template.cpp.
extern const char kJudgeTemplate[];

namespace {

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return c == ' ' || (c >= '\t' && c <= '\r'); });
}

}  // namespace

void to_json(nlohmann::json& j, const RewardBreakdown& b) {
  j = nlohmann::json{{"format", b.format}, {"lc", b.lc}, {"acc", b.acc},
                     {"cta", b.cta ? nlohmann::json(*b.cta) : nlohmann::json(nullptr)},
                     {"overall", b.overall}, {"judge_calls", b.judge_calls}};
  if (!b.diagnostic.empty()) j["diagnostic"] = b.diagnostic;
}

double compose_overall(int format, int lc, int acc, std::optional<double> cta) {
  if (format == -1 || lc == -1) return -1.0;
  return static_cast<double>(acc) * (1.0 + cta.value_or(0.0));
}

int lc_reward(const ParsedResponse& parsed, Language lang, const LanguageDetector& detector) {
  try {
    return detector.is_consistent(parsed.think, lang) && detector.is_consistent(parsed.answer, lang) ? 0 : -1;
  } catch (const Error& e) {
    if (e.code() == Errc::empty_text) return -1;
    throw;
  }
}

std::string_view judge_template() { return kJudgeTemplate; }

std::string build_judge_prompt(Language target, std::string_view en_question, std::string_view en_think,
                               std::string_view x_think) {
  if (target == Language::en || target == Language::unknown) {
    throw Error(Errc::empty_input, "judge target must be a non-English language");
  }
  if (is_blank(en_question) || is_blank(en_think) || is_blank(x_think)) {
    throw Error(Errc::empty_input, "judge prompt inputs must be non-empty");
  }
  struct Placeholder {
    std::string_view token;
    std::string_view value;
  };
  const Placeholder placeholders[] = {{"[target]", display_name(target)},
                                      {"[en-question]", en_question},
                                      {"[en-think]", en_think},
                                      {"[x-think]", x_think}};
  // Single pass over the template so payload text is never rescanned.
  const std::string_view tmpl = judge_template();
  std::string out;
  out.reserve(tmpl.size() + en_question.size() + en_think.size() + x_think.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    bool replaced = false;
    if (tmpl[i] == '[') {
      for (const auto& p : placeholders) {
        if (tmpl.substr(i, p.token.size()) == p.token) {
          out.append(p.value);
          i += p.token.size();
          replaced = true;
          break;
        }
      }
    }
    if (!replaced) out.push_back(tmpl[i++]);
  }
  return out;
}

std::optional<double> parse_judge_score(std::string_view reply) {
  constexpr std::string_view kOpen = "<score>";
  constexpr std::string_view kClose = "</score>";
  const std::size_t close = reply.rfind(kClose);
  if (close == std::string_view::npos) return std::nullopt;
  const std::size_t open = reply.substr(0, close).rfind(kOpen);
  if (open == std::string_view::npos) return std::nullopt;
  std::string_view payload = reply.substr(open + kOpen.size(), close - open - kOpen.size());
  while (!payload.empty() && std::isspace(static_cast<unsigned char>(payload.front()))) payload.remove_prefix(1);
  while (!payload.empty() && std::isspace(static_cast<unsigned char>(payload.back()))) payload.remove_suffix(1);
  if (payload.empty()) return std::nullopt;

  const bool plus = payload.front() == '+';
  if (plus) payload.remove_prefix(1);
  const std::string_view body = !payload.empty() && payload.front() == '-' ? payload.substr(1) : payload;
  if (body.empty() || !std::all_of(body.begin(), body.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)) || c == '.'; }) ||
      std::count(body.begin(), body.end(), '.') > 1 || body == ".") {
    return std::nullopt;
  }
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(payload.data(), payload.data() + payload.size(), value);
  if (ec != std::errc() || ptr != payload.data() + payload.size() || !std::isfinite(value)) return std::nullopt;
  return std::clamp(value, 0.0, 1.0);
}

CtaOutcome cta_reward(std::string_view x_think, std::string_view en_think, std::string_view en_question,
                      Language lang, JudgeBackend& judge) {
  const std::string prompt = build_judge_prompt(lang, en_question, en_think, x_think);
  CtaOutcome outcome;
  for (int attempt = 1; attempt <= 2; ++attempt) {
    std::string reply;
    try {
      reply = judge.judge(prompt);
    } catch (const BackendError& e) {
      throw Error(Errc::judge_unreachable, fmt::format("judge unreachable: {}", e.what()));
    }
    outcome.attempts = attempt;
    if (const auto score = parse_judge_score(reply)) {
      outcome.score = *score;
      return outcome;
    }
  }
  outcome.score = 0.0;
  outcome.diagnostic = "judge reply unparseable after retry; cta scored 0";
  spdlog::warn("{}", outcome.diagnostic);
  return outcome;
}

RewardBreakdown RewardEngine::score(const RolloutInput& input) const {
  RewardBreakdown b;
  auto parsed = try_parse_response(input.response);
  if (auto* issue = std::get_if<FormatIssue>(&parsed)) {
    b.format = -1;
    b.overall = compose_overall(b.format, b.lc, b.acc, std::nullopt);
    b.diagnostic = fmt::format("format: {}", to_string(*issue));
    return b;
  }
  const auto& response = std::get<ParsedResponse>(parsed);
  b.format = 0;
  b.lc = lc_reward(response, input.lang, *detector_);
  b.acc = accuracy_reward(response, input.gold);
  if (b.lc == 0 && b.acc == 1 && input.en_reference_think && judge_ != nullptr && input.lang != Language::en) {
    const CtaOutcome cta = cta_reward(response.think, *input.en_reference_think, input.en_question, input.lang, *judge_);
    b.cta = cta.score;
    b.judge_calls = cta.attempts;
    b.diagnostic = cta.diagnostic;
  }
  b.overall = compose_overall(b.format, b.lc, b.acc, b.cta);
  return b;
}

}  // namespace mthinker
