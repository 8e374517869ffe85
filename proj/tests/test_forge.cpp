#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <set>

#include "mthinker/forge.hpp"
#include "support/check.hpp"
#include "support/oracle.hpp"
#include "support/synth.hpp"

using namespace mthinker;
using mthinker::testing::error_code;
namespace fs = std::filesystem;

namespace {

const synth::SentencePools& pools() {
  static const auto p = synth::load_sentence_pools();
  return p;
}

ScoredCandidate candidate(int format, int lc, int acc, std::string think = "t") {
  ScoredCandidate c;
  c.breakdown.format = format;
  c.breakdown.lc = lc;
  c.breakdown.acc = acc;
  if (format == 0) c.parsed = ParsedResponse{"", std::move(think), "a"};
  return c;
}

std::vector<ScoredCandidate> with_correct(std::size_t n, std::vector<std::size_t> correct) {
  std::vector<ScoredCandidate> out(n, candidate(0, 0, 0));
  for (auto i : correct) out[i] = candidate(0, 0, 1, "think-" + std::to_string(i));
  return out;
}

QuestionPair pair_for(Language lang = Language::fr) {
  return {.id = "q1", .lang = lang, .question = "Combien font 2+2 ?", .question_en = "What is 2+2?", .gold = "4"};
}

/// One question whose candidates follow `x` and `en` kinds.
synth::Scenario single(std::vector<synth::CandidateKind> x, std::vector<synth::CandidateKind> en, Language lang,
                       const std::string& id, std::uint64_t seed) {
  synth::Scenario s;
  SplitMix64 rng(seed);
  const auto& answer = synth::answer_bank()[0];
  synth::ScriptedQuestion q;
  q.pair = {.id = id, .lang = lang, .question = "q", .question_en = "q en", .gold = answer.gold};
  for (std::size_t k = 0; k < x.size(); ++k) {
    s.script.add("model-0", id, k, synth::make_response(pools(), lang, answer, x[k], rng));
    s.script.add("model-0", id + ":en", k, synth::make_response(pools(), Language::en, answer, en[k], rng));
  }
  q.x_kinds["model-0"] = std::move(x);
  q.en_kinds["model-0"] = std::move(en);
  s.questions.push_back(std::move(q));
  return s;
}

std::vector<std::string> lines_of(const ForgeResult& r) {
  std::vector<std::string> out;
  for (const auto& e : r.entries) out.push_back(dataset_line(e));
  return out;
}

const std::vector<Language> kTargets = {Language::ja, Language::ko, Language::fr, Language::pt, Language::th,
                                        Language::es, Language::ar, Language::vi, Language::zh};

const RewardEngine& judgeless() {
  static const RewardEngine engine(default_detector(), nullptr);
  return engine;
}

}  // namespace

TEST_CASE("correct_indices") {
  const std::vector<RewardBreakdown> b = [] {
    std::vector<RewardBreakdown> v(4);
    for (auto& x : v) x.format = x.lc = 0;
    v[0].acc = 1;
    v[1].acc = 0;
    v[2].acc = 1;
    v[2].lc = -1;
    v[3].acc = 1;
    v[3].format = -1;
    return v;
  }();
  CHECK(correct_indices(std::span<const RewardBreakdown>(b)) == std::vector<std::size_t>{0});
  const auto s = with_correct(8, {1, 5});
  CHECK(correct_indices(std::span<const ScoredCandidate>(s)) == std::vector<std::size_t>{1, 5});
}

TEST_CASE("select_pair examples") {
  SplitMix64 rng(1);
  const auto pair = pair_for();
  const auto all = with_correct(8, {0, 1, 2, 3, 4, 5, 6, 7});
  const auto none = with_correct(8, {});
  const auto some = with_correct(8, {2, 6});

  CHECK(std::get<SkipReason>(select_pair(pair, all, all, rng)) == SkipReason::too_easy);
  CHECK(std::get<SkipReason>(select_pair(pair, none, all, rng)) == SkipReason::too_hard);
  CHECK(std::get<SkipReason>(select_pair(pair, some, none, rng)) == SkipReason::no_english_reference);

  const auto en = with_correct(8, {3});
  const auto kept = std::get<RlDatasetEntry>(select_pair(pair, some, en, rng));
  CHECK(kept.en_reference_think == "think-3");
  CHECK(kept.provenance.n_correct_x == 2);
  CHECK(kept.provenance.n_correct_en == 1);
  CHECK(kept.provenance.n == 8);
  CHECK(kept.question_en == pair.question_en);

  // One of eight correct is kept.
  CHECK(std::holds_alternative<RlDatasetEntry>(select_pair(pair, with_correct(8, {7}), en, rng)));

  // The reference is drawn uniformly among correct English candidates.
  const auto many = with_correct(8, {0, 3, 4});
  std::map<std::string, int> seen;
  for (int i = 0; i < 3000; ++i) ++seen[std::get<RlDatasetEntry>(select_pair(pair, some, many, rng)).en_reference_think];
  REQUIRE(seen.size() == 3);
  for (const auto& [think, count] : seen) CHECK(std::abs(count - 1000) < 120);

  CHECK(error_code([&] { (void)select_pair(pair, some, with_correct(4, {1}), rng); }) == Errc::invalid_argument);
  CHECK(error_code([&] { (void)select_pair(pair, {}, {}, rng); }) == Errc::invalid_argument);
}

TEST_CASE("score_candidate never consults a judge and keeps the split") {
  SplitMix64 rng(2);
  const auto& answer = synth::answer_bank()[1];
  const auto good = synth::make_response(pools(), Language::pt, answer, synth::CandidateKind::correct, rng);
  const auto s = score_candidate(judgeless(), good, Language::pt, answer.gold);
  CHECK(s.breakdown.overall == 1.0);
  REQUIRE(s.parsed.has_value());
  CHECK(s.parsed->reconstruct() == good);
  const auto bad = synth::make_response(pools(), Language::pt, answer, synth::CandidateKind::malformed, rng);
  CHECK_FALSE(score_candidate(judgeless(), bad, Language::pt, answer.gold).parsed.has_value());
}

TEST_CASE("forge boundaries") {
  using K = synth::CandidateKind;
  const ForgeConfig config;
  const ForgeContext ctx{.seed = 5};

  SUBCASE("every question too easy gives an empty dataset") {
    synth::Scenario s = single(std::vector<K>(8, K::correct), std::vector<K>(8, K::correct), Language::fr, "fr-0000", 1);
    MockGenerationBackend gen(s.script);
    const auto r = forge_dataset(s.pairs(), gen, judgeless(), config, ctx);
    CHECK(r.entries.empty());
    CHECK(r.report.skipped.at(SkipReason::too_easy) == 1);
  }

  SUBCASE("one of eight correct on ten questions keeps ten entries") {
    synth::Scenario all;
    for (int i = 0; i < 10; ++i) {
      std::vector<K> x(8, K::wrong_answer);
      x[static_cast<std::size_t>(i) % 8] = K::correct;
      std::vector<K> en(8, K::malformed);
      en[3] = K::correct;
      auto s = single(x, en, Language::es, "es-" + std::to_string(i), 10 + i);
      all.questions.push_back(s.questions[0]);
      for (std::size_t k = 0; k < 8; ++k) {
        all.script.add("model-0", all.questions.back().pair.id, k,
                       s.script.lookup("model-0", all.questions.back().pair.id, k));
        all.script.add("model-0", all.questions.back().pair.id + ":en", k,
                       s.script.lookup("model-0", all.questions.back().pair.id + ":en", k));
      }
    }
    MockGenerationBackend gen(all.script);
    const auto r = forge_dataset(all.pairs(), gen, judgeless(), config, ctx);
    CHECK(r.entries.size() == 10);
    for (const auto& e : r.entries) CHECK(e.provenance.n_correct_x == 1);
  }

  SUBCASE("the per-language cap keeps a seeded subset") {
    auto scenario = synth::make_scenario(pools(), {.languages = {Language::fr, Language::ja}, .per_language = 40});
    ForgeConfig capped = config;
    capped.per_language_cap = 5;
    MockGenerationBackend gen(scenario.script);
    const auto r = forge_dataset(scenario.pairs(), gen, judgeless(), capped, ctx);
    std::map<Language, std::size_t> count;
    for (const auto& e : r.entries) ++count[e.lang];
    CHECK(count[Language::fr] == 5);
    CHECK(count[Language::ja] == 5);
    CHECK(r.report.skipped.at(SkipReason::over_cap) > 0);
    const auto expected = synth::oracle_forge(scenario, "model-0", ctx.seed, ctx.iteration, 5);
    CHECK(lines_of(r) == expected.lines);
  }
}

TEST_CASE("forge matches the brute-force oracle and partitions its inputs") {
  const auto scenario = synth::make_scenario(
      pools(), {.languages = kTargets, .per_language = 12, .seed = 9});
  const ForgeContext ctx{.seed = 9, .iteration = 2};
  MockGenerationBackend gen(scenario.script);
  const auto r = forge_dataset(scenario.pairs(), gen, judgeless(), ForgeConfig{}, ctx);
  const auto expected = synth::oracle_forge(scenario, "model-0", 9, 2, 3000);
  CHECK(lines_of(r) == expected.lines);
  CHECK(r.report.skipped == expected.skipped);
  REQUIRE(r.report.outcomes.size() == scenario.questions.size());
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < r.report.outcomes.size(); ++i) {
    CHECK(r.report.outcomes[i].id == scenario.questions[i].pair.id);
    CHECK(r.report.outcomes[i].skip == expected.outcomes[i]);
    skipped += r.report.outcomes[i].skip.has_value();
  }
  CHECK(skipped + r.entries.size() == scenario.questions.size());
  CHECK(r.report.entries == r.entries.size());
  CHECK(r.report.inputs == scenario.questions.size());

  // Every kept entry satisfies the selection rule when its candidates are re-scored.
  for (const auto& e : r.entries) {
    std::size_t cx = 0;
    std::set<std::string> correct_thinks;
    for (std::size_t k = 0; k < 8; ++k) {
      cx += score_candidate(judgeless(), scenario.script.lookup("model-0", e.id, k), e.lang, e.gold).breakdown.acc == 1 &&
            score_candidate(judgeless(), scenario.script.lookup("model-0", e.id, k), e.lang, e.gold).breakdown.overall == 1;
      const auto en = score_candidate(judgeless(), scenario.script.lookup("model-0", e.id + ":en", k), Language::en, e.gold);
      if (en.breakdown.overall == 1.0) correct_thinks.insert(en.parsed->think);
    }
    CHECK(cx > 0);
    CHECK(cx < 8);
    CHECK(correct_thinks.count(e.en_reference_think) == 1);
  }
}

TEST_CASE("forge output is identical across runs and worker counts") {
  const auto scenario = synth::make_scenario(pools(), {.languages = {Language::th, Language::vi, Language::zh}, .per_language = 20});
  std::vector<std::string> first;
  for (std::size_t in_flight : {1, 3, 16}) {
    ForgeConfig config;
    config.max_in_flight = in_flight;
    MockGenerationBackend gen(scenario.script);
    gen.set_latency(std::chrono::milliseconds(1));
    const auto r = forge_dataset(scenario.pairs(), gen, judgeless(), config, {.seed = 3});
    const auto lines = lines_of(r);
    if (first.empty()) first = lines;
    CHECK(lines == first);
    CHECK(gen.peak_in_flight() <= in_flight);
  }
  CHECK_FALSE(first.empty());
}

TEST_CASE("backend failures skip the question and other errors propagate") {
  auto scenario = synth::make_scenario(pools(), {.languages = {Language::fr}, .per_language = 6});
  auto script = scenario.script;
  script.fail_first("fr-0002", 0, 10);
  script.fail_first("fr-0004", 0, 2);  // recovers on the third attempt
  BackendConfig bc;
  bc.retry.base_backoff = std::chrono::milliseconds(0);
  MockGenerationBackend gen(script, bc);
  const auto r = forge_dataset(scenario.pairs(), gen, judgeless(), ForgeConfig{}, {});
  CHECK(r.report.outcomes[2].skip == SkipReason::backend_failure);
  CHECK_FALSE(r.report.outcomes[2].error.empty());
  CHECK(r.report.outcomes[4].skip != SkipReason::backend_failure);
  CHECK(r.report.skipped.at(SkipReason::backend_failure) == 1);
  for (const auto& e : r.entries) CHECK(e.id != "fr-0002");

  const nlohmann::json j = r.report;
  CHECK(j.at("skipped").at("backend_failure") == 1);
  CHECK(j.at("outcomes").at(2).at("outcome") == "backend_failure");

  // An unscripted lookup is a programming error, not a skip.
  MockGenerationBackend empty{MockScript{}};
  CHECK(error_code([&] { (void)forge_dataset(scenario.pairs(), empty, judgeless(), ForgeConfig{}, {}); }).has_value());

  MockJudgeBackend judge(std::vector<MockJudgeBackend::Rule>{{"", "<score>1</score>"}});
  const RewardEngine with_judge(default_detector(), &judge);
  CHECK(error_code([&] { (void)forge_dataset(scenario.pairs(), gen, with_judge, ForgeConfig{}, {}); }) ==
        Errc::invalid_argument);
}

TEST_CASE("english cache reuses candidates across iterations") {
  const auto scenario = synth::make_scenario(pools(), {.languages = {Language::fr}, .per_language = 4});
  EnglishCache cache;
  MockGenerationBackend gen(scenario.script);
  const ForgeContext ctx{.english_cache = &cache};
  (void)forge_dataset(scenario.pairs(), gen, judgeless(), ForgeConfig{}, ctx);
  const auto first = gen.attempts();
  (void)forge_dataset(scenario.pairs(), gen, judgeless(), ForgeConfig{}, ctx);
  CHECK(gen.attempts() - first == first / 2);
  CHECK(cache.get("fr-0001").has_value());
}

TEST_CASE("dataset files round-trip") {
  const auto dir = fs::temp_directory_path() / "mthinker_test_forge";
  fs::create_directories(dir);
  RlDatasetEntry e;
  e.id = "ko-0001";
  e.lang = Language::ko;
  e.question = "질문";
  e.question_en = "question";
  e.gold = "1/2";
  e.en_reference_think = "line one\nline \"two\"";
  e.provenance = {3, 2, 8};
  const std::vector<RlDatasetEntry> entries{e, e};
  write_dataset(dir / "d.jsonl", entries);
  const auto back = read_dataset(dir / "d.jsonl");
  REQUIRE(back.size() == 2);
  CHECK(dataset_line(back[0]) == dataset_line(e));
  CHECK(dataset_line(e).find('\n') == std::string::npos);

  const auto j = nlohmann::json::parse(dataset_line(e));
  CHECK(j.at("provenance").at("n_correct_x") == 3);
  CHECK(j.at("lang") == "ko");

  QuestionPair bad = pair_for();
  bad.gold = "";
  CHECK(error_code([&] { bad.validate(); }).has_value());
  CHECK(error_code([] { (void)read_questions("/nonexistent/q.jsonl"); }) == Errc::io_error);
  fs::remove_all(dir);
}
