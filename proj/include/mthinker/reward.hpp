#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "mthinker/backend.hpp"
#include "mthinker/langid.hpp"
#include "mthinker/language.hpp"
#include "mthinker/response_parser.hpp"

namespace mthinker {

/// Component rewards for one rollout plus the gated overall reward.
///
/// When the format check fails the segments cannot be split, so `lc` is
/// reported as -1 and `acc` as 0 without being evaluated. `cta` is only
/// present when the judge was consulted.
struct RewardBreakdown {
  int format = -1;
  int lc = -1;
  int acc = 0;
  std::optional<double> cta;
  double overall = -1.0;
  int judge_calls = 0;
  std::string diagnostic;
};

void to_json(nlohmann::json& j, const RewardBreakdown& b);

/// -1 when either gate fails, otherwise acc * (1 + cta) with an absent cta
/// counting as 0.
double compose_overall(int format, int lc, int acc, std::optional<double> cta);

/// 0 iff both thinking and answer are consistent with `lang`; detector
/// errors (EMPTY_TEXT) count as inconsistent.
int lc_reward(const ParsedResponse& parsed, Language lang, const LanguageDetector& detector);

/// The stored judge instruction with its `[target]`, `[en-question]`,
/// `[en-think]` and `[x-think]` placeholders.
std::string_view judge_template();

/// Fills the judge template. Throws Error(empty_input) on empty inputs or an
/// English target.
std::string build_judge_prompt(Language target, std::string_view en_question, std::string_view en_think,
                               std::string_view x_think);

/// Decimal inside the last `<score>…</score>` pair, clamped to [0, 1];
/// nullopt when there is no well-formed numeric score.
std::optional<double> parse_judge_score(std::string_view reply);

struct CtaOutcome {
  double score = 0.0;
  int attempts = 0;
  std::string diagnostic;
};

/// Asks the judge for the thinking-alignment score. An unparseable reply is
/// retried once and then scored 0 with a diagnostic; backend failures raise
/// Error(judge_unreachable).
CtaOutcome cta_reward(std::string_view x_think, std::string_view en_think, std::string_view en_question,
                      Language lang, JudgeBackend& judge);

struct RolloutInput {
  std::string_view response;
  Language lang = Language::unknown;
  std::string_view gold;
  std::optional<std::string_view> en_reference_think;
  std::string_view en_question;
};

/// Stateless scorer; safe to share across threads as long as the judge is.
class RewardEngine {
 public:
  /// `judge` may be null, in which case CTA is never computed.
  explicit RewardEngine(const LanguageDetector& detector, JudgeBackend* judge = nullptr)
      : detector_(&detector), judge_(judge) {}

  /// format, then lc and acc, then (only for a clean, correct rollout with a
  /// reference) cta. Judge unreachability propagates.
  RewardBreakdown score(const RolloutInput& input) const;

  const LanguageDetector& detector() const { return *detector_; }
  bool has_judge() const { return judge_ != nullptr; }

 private:
  const LanguageDetector* detector_;
  JudgeBackend* judge_;
};

}  // namespace mthinker
