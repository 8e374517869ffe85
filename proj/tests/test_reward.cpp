#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "mthinker/reward.hpp"
#include "support/check.hpp"
#include "support/synth.hpp"

using namespace mthinker;
using mthinker::testing::error_code;
using Rules = std::vector<MockJudgeBackend::Rule>;

namespace {

const synth::SentencePools& pools() {
  static const auto p = synth::load_sentence_pools();
  return p;
}

std::string text(Language lang, std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  return synth::sentences(pools(), lang, n, rng);
}

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  for (auto p = s.find(from); p != std::string::npos; p = s.find(from, p + to.size())) s.replace(p, from.size(), to);
  return s;
}

class ThrowingJudge : public JudgeBackend {
 public:
  std::string judge(const std::string&) override { throw BackendError(Errc::backend_failure, "connection refused"); }
};

}  // namespace

TEST_CASE("compose_overall follows the gate and the acc x (1 + cta) product") {
  CHECK(compose_overall(-1, 0, 1, 1.0) == -1.0);
  CHECK(compose_overall(0, -1, 1, 1.0) == -1.0);
  CHECK(compose_overall(0, 0, 0, 1.0) == 0.0);
  CHECK(compose_overall(0, 0, 1, std::nullopt) == 1.0);
  CHECK(compose_overall(0, 0, 1, 0.925) == doctest::Approx(1.925));
}

TEST_CASE("lc_reward examples") {
  const auto& d = default_detector();
  const std::string fr_think = text(Language::fr, 3, 1);
  const std::string fr_answer = text(Language::fr, 2, 2);
  CHECK(lc_reward({"", fr_think, fr_answer}, Language::fr, d) == 0);
  CHECK(lc_reward({"", text(Language::en, 3, 3), fr_answer}, Language::fr, d) == -1);
  const std::string mixed = text(Language::fr, 2, 4) + " " + text(Language::en, 3, 5) + " " + text(Language::fr, 1, 6);
  CHECK(lc_reward({"", mixed, fr_answer}, Language::fr, d) == -1);
  CHECK(lc_reward({"", fr_think, "\\boxed{4}"}, Language::fr, d) == -1);  // EMPTY_TEXT folds to -1
}

TEST_CASE("judge template is the stored asset with four placeholders") {
  std::ifstream in(std::string(MTHINKER_FIXTURE_DIR) + "/../../data/judge_template.txt", std::ios::binary);
  REQUIRE(in);
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK(judge_template() == buf.str());
  for (const char* ph : {"[target]", "[en-question]", "[en-think]", "[x-think]"}) {
    CHECK(judge_template().find(ph) != std::string_view::npos);
  }
  CHECK(judge_template().find("<score>0.925</score>") != std::string_view::npos);
}

TEST_CASE("build_judge_prompt substitutes every placeholder") {
  const auto prompt = build_judge_prompt(Language::fr, "Q-PAYLOAD", "T_en-PAYLOAD", "T_fr-PAYLOAD");
  CHECK(prompt.find("French Thought Process") != std::string::npos);
  CHECK(prompt.find("Q-PAYLOAD") != std::string::npos);
  CHECK(prompt.find("T_en-PAYLOAD") != std::string::npos);
  CHECK(prompt.find("T_fr-PAYLOAD") != std::string::npos);
  for (const char* ph : {"[target]", "[en-question]", "[en-think]", "[x-think]"}) {
    CHECK(prompt.find(ph) == std::string::npos);
  }
  // Removing the payloads again gives back the stored template byte for byte.
  std::string restored = replace_all(prompt, "T_fr-PAYLOAD", "[x-think]");
  restored = replace_all(restored, "T_en-PAYLOAD", "[en-think]");
  restored = replace_all(restored, "Q-PAYLOAD", "[en-question]");
  restored = replace_all(restored, "French", "[target]");
  CHECK(restored == judge_template());

  CHECK(build_judge_prompt(Language::th, "q", "a", "b").find("[Thai Thought Process]") != std::string::npos);
  // Payloads that look like placeholders are not substituted again.
  const auto tricky = build_judge_prompt(Language::es, "[x-think]", "e", "x");
  CHECK(tricky.find("[English Math Problem]: [x-think]") != std::string::npos);

  CHECK(error_code([] { (void)build_judge_prompt(Language::en, "q", "a", "b"); }) == Errc::empty_input);
  CHECK(error_code([] { (void)build_judge_prompt(Language::fr, "", "a", "b"); }) == Errc::empty_input);
  CHECK(error_code([] { (void)build_judge_prompt(Language::fr, "q", "a", "  "); }) == Errc::empty_input);
}

TEST_CASE("parse_judge_score") {
  CHECK(parse_judge_score("<score>0.925</score>") == doctest::Approx(0.925));
  CHECK(parse_judge_score("analysis...<score>1.2</score>") == 1.0);
  CHECK(parse_judge_score("<score>-0.3</score>") == 0.0);
  CHECK_FALSE(parse_judge_score("I think the score is high.").has_value());
  CHECK_FALSE(parse_judge_score("<score>high</score>").has_value());
  CHECK_FALSE(parse_judge_score("<score></score>").has_value());
  CHECK_FALSE(parse_judge_score("").has_value());
  CHECK(parse_judge_score("<score>0.1</score> then <score> 0.7 </score>") == doctest::Approx(0.7));
}

TEST_CASE("cta_reward uses the judge, retries once on garbage, and raises when unreachable") {
  MockJudgeBackend one(Rules{{"", "<score>1.0</score>"}});
  CHECK(cta_reward("x", "e", "q", Language::fr, one).score == 1.0);
  MockJudgeBackend zero(Rules{{"", "<score>0.0</score>"}});
  CHECK(cta_reward("x", "e", "q", Language::fr, zero).score == 0.0);

  MockJudgeBackend garbage(Rules{{"", "no idea"}});
  const auto g = cta_reward("x", "e", "q", Language::fr, garbage);
  CHECK(g.score == 0.0);
  CHECK(g.attempts == 2);
  CHECK_FALSE(g.diagnostic.empty());
  CHECK(garbage.calls() == 2);

  MockJudgeBackend recovers(MockJudgeBackend::Responder(
      [](const std::string&, std::size_t call) { return call == 0 ? std::string("??") : std::string("<score>0.4</score>"); }));
  const auto r = cta_reward("x", "e", "q", Language::fr, recovers);
  CHECK(r.score == doctest::Approx(0.4));
  CHECK(r.attempts == 2);

  ThrowingJudge down;
  CHECK(error_code([&] { (void)cta_reward("x", "e", "q", Language::fr, down); }) == Errc::judge_unreachable);
}

TEST_CASE("score examples and the lazy judge") {
  MockJudgeBackend judge(Rules{{"", "<score>0.925</score>"}});
  const RewardEngine engine(default_detector(), &judge);
  const std::string think = text(Language::fr, 3, 10);
  const std::string answer = text(Language::fr, 2, 11);
  const std::string ref = text(Language::en, 3, 12);

  const auto bad = engine.score({.response = "no tags", .lang = Language::fr, .gold = "4", .en_reference_think = ref,
                                 .en_question = "q"});
  CHECK(bad.format == -1);
  CHECK(bad.overall == -1.0);
  CHECK_FALSE(bad.cta.has_value());

  const auto wrong = engine.score({.response = "<think>" + think + "</think>" + answer + " \\boxed{3}",
                                   .lang = Language::fr, .gold = "4", .en_reference_think = ref, .en_question = "q"});
  CHECK(wrong.format == 0);
  CHECK(wrong.lc == 0);
  CHECK(wrong.acc == 0);
  CHECK(wrong.overall == 0.0);
  CHECK_FALSE(wrong.cta.has_value());
  CHECK(judge.calls() == 0);

  const auto right = engine.score({.response = "<think>" + think + "</think>" + answer + " \\boxed{4}",
                                   .lang = Language::fr, .gold = "4", .en_reference_think = ref, .en_question = "q"});
  CHECK(right.acc == 1);
  REQUIRE(right.cta.has_value());
  CHECK(*right.cta == doctest::Approx(0.925));
  CHECK(right.overall == doctest::Approx(1.925));
  CHECK(judge.calls() == 1);

  // No reference, an English rollout or an inconsistent rollout never reach the judge.
  const auto no_ref = engine.score({.response = "<think>" + think + "</think>" + answer + " \\boxed{4}",
                                    .lang = Language::fr, .gold = "4", .en_reference_think = std::nullopt, .en_question = "q"});
  CHECK(no_ref.overall == 1.0);
  const auto en = engine.score({.response = "<think>" + ref + "</think>" + text(Language::en, 2, 13) + " \\boxed{4}",
                                .lang = Language::en, .gold = "4", .en_reference_think = ref, .en_question = "q"});
  CHECK(en.overall == 1.0);
  const auto mixed = engine.score({.response = "<think>" + ref + "</think>" + answer + " \\boxed{4}", .lang = Language::fr,
                                   .gold = "4", .en_reference_think = ref, .en_question = "q"});
  CHECK(mixed.lc == -1);
  CHECK(mixed.overall == -1.0);
  CHECK(judge.calls() == 1);

  ThrowingJudge down;
  const RewardEngine failing(default_detector(), &down);
  CHECK(error_code([&] {
          (void)failing.score({.response = "<think>" + think + "</think>" + answer + " \\boxed{4}", .lang = Language::fr,
                               .gold = "4", .en_reference_think = ref, .en_question = "q"});
        }) == Errc::judge_unreachable);
}

TEST_CASE("property: overall is -1, 0 or within [1, 2]") {
  MockJudgeBackend judge(MockJudgeBackend::Responder(
      [](const std::string&, std::size_t call) { return "<score>" + std::to_string((call % 11) / 10.0) + "</score>"; }));
  const RewardEngine engine(default_detector(), &judge);
  SplitMix64 rng(77);
  const auto& bank = synth::answer_bank();
  const std::string ref = text(Language::en, 3, 14);
  for (int i = 0; i < 300; ++i) {
    const Language lang = kSupportedLanguages[rng.uniform_index(kSupportedLanguages.size())];
    const auto& answer = bank[rng.uniform_index(bank.size())];
    const auto kind = static_cast<synth::CandidateKind>(rng.uniform_index(4));
    const auto response = synth::make_response(pools(), lang, answer, kind, rng);
    const auto b = engine.score({.response = response, .lang = lang, .gold = answer.gold, .en_reference_think = ref,
                                 .en_question = "q"});
    const bool in_range = b.overall == -1.0 || b.overall == 0.0 || (b.overall >= 1.0 && b.overall <= 2.0);
    CHECK(in_range);
    CHECK((b.overall == -1.0) == (b.format == -1 || b.lc == -1));
    if (b.acc == 0 || b.overall == -1.0) CHECK_FALSE(b.cta.has_value());
    CHECK((kind == synth::CandidateKind::correct) == (b.format == 0 && b.lc == 0 && b.acc == 1));
  }
}

TEST_CASE("breakdown JSON shape") {
  RewardBreakdown b;
  b.format = 0;
  b.lc = 0;
  b.acc = 1;
  b.cta = 0.5;
  b.overall = 1.5;
  const nlohmann::json j = b;
  CHECK(j.at("overall") == 1.5);
  CHECK(j.at("cta") == 0.5);
  CHECK_FALSE(j.contains("diagnostic"));
  RewardBreakdown none;
  CHECK(nlohmann::json(none).at("cta").is_null());
}
