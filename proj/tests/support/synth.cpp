#include "support/synth.hpp"

#include <fstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace mthinker::synth {

std::filesystem::path fixture_dir() {
#ifdef MTHINKER_FIXTURE_DIR
  return MTHINKER_FIXTURE_DIR;
#else
  return std::filesystem::path("tests") / "fixtures";
#endif
}

SentencePools load_sentence_pools(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const auto j = nlohmann::json::parse(in);
  SentencePools pools;
  for (const auto& [code_text, list] : j.items()) {
    pools[*parse_language(code_text)] = list.get<std::vector<std::string>>();
  }
  return pools;
}

std::string sentences(const SentencePools& pools, Language lang, std::size_t count, SplitMix64& rng) {
  const auto& pool = pools.at(lang);
  const bool spaced = lang != Language::ja && lang != Language::zh;
  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::string out;
  for (std::size_t k = 0; k < count && k < order.size(); ++k) {
    std::swap(order[k], order[k + rng.uniform_index(order.size() - k)]);
    if (k > 0 && spaced) out += ' ';
    out += pool[order[k]];
  }
  return out;
}

const std::vector<AnswerForms>& answer_bank() {
  static const std::vector<AnswerForms> bank = {
      {"12", "12.0", "13"},
      {"3/4", "\\frac{3}{4}", "5/4"},
      {"0.5", "\\frac{1}{2}", "0.6"},
      {"-7", "-7", "7"},
      {"2.25", "\\dfrac{9}{4}", "2.5"},
      {"100", "100", "101"},
      {"(1, 2)", "(1,2)", "(2, 1)"},
      {"\\frac{2}{3}", "2/3", "3/2"},
  };
  return bank;
}

std::string make_response(const SentencePools& pools, Language lang, const AnswerForms& answer, CandidateKind kind,
                          SplitMix64& rng) {
  const Language text_lang =
      kind == CandidateKind::wrong_language ? (lang == Language::en ? Language::fr : Language::en) : lang;
  const std::string think = sentences(pools, text_lang, 3, rng) + " $x + 1 = 2$";
  const std::string boxed = kind == CandidateKind::wrong_answer ? answer.wrong : answer.equivalent;
  const std::string body = sentences(pools, text_lang, 2, rng) + " \\boxed{" + boxed + "}";
  if (kind == CandidateKind::malformed) return "<think>" + think + "\n" + body;
  return "<think>\n" + think + "\n</think>\n\n" + body;
}

std::vector<QuestionPair> Scenario::pairs() const {
  std::vector<QuestionPair> out;
  out.reserve(questions.size());
  for (const auto& q : questions) out.push_back(q.pair);
  return out;
}

namespace {

CandidateKind incorrect_kind(SplitMix64& rng) {
  switch (rng.uniform_index(3)) {
    case 0: return CandidateKind::wrong_answer;
    case 1: return CandidateKind::wrong_language;
    default: return CandidateKind::malformed;
  }
}

/// Kinds for one candidate set with exactly `correct` correct entries at
/// random positions.
std::vector<CandidateKind> kinds_with(std::size_t n, std::size_t correct, SplitMix64& rng) {
  std::vector<CandidateKind> kinds(n);
  for (auto& k : kinds) k = incorrect_kind(rng);
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t k = 0; k < correct; ++k) {
    std::swap(idx[k], idx[k + rng.uniform_index(n - k)]);
    kinds[idx[k]] = CandidateKind::correct;
  }
  return kinds;
}

}  // namespace

Scenario make_scenario(const SentencePools& pools, const ScenarioOptions& options) {
  Scenario scenario;
  const auto& bank = answer_bank();
  const std::size_t n = options.candidates;
  for (Language lang : options.languages) {
    for (std::size_t i = 0; i < options.per_language; ++i) {
      const std::string id = fmt::format("{}-{:04d}", code(lang), i);
      SplitMix64 rng(derive_seed(options.seed, 0, id));
      const AnswerForms& answer = bank[rng.uniform_index(bank.size())];
      ScriptedQuestion q;
      q.pair = {.id = id,
                .lang = lang,
                .question = sentences(pools, lang, 2, rng),
                .question_en = sentences(pools, Language::en, 2, rng),
                .gold = answer.gold};
      for (const auto& model : options.model_tags) {
        SplitMix64 mrng(derive_seed(options.seed, 0, id + "|" + model));
        const auto profile = mrng.uniform_index(20);
        std::size_t cx = 0;
        std::size_t ce = 0;
        if (profile < 3) {  // too easy
          cx = n;
          ce = 1 + mrng.uniform_index(n);
        } else if (profile < 6) {  // too hard
          cx = 0;
          ce = mrng.uniform_index(n + 1);
        } else if (profile < 8) {  // no English reference
          cx = 1 + mrng.uniform_index(n - 1);
          ce = 0;
        } else {
          cx = 1 + mrng.uniform_index(n - 1);
          ce = 1 + mrng.uniform_index(n);
        }
        auto xk = kinds_with(n, cx, mrng);
        auto ek = kinds_with(n, ce, mrng);
        for (std::size_t k = 0; k < n; ++k) {
          scenario.script.add(model, id, k, make_response(pools, lang, answer, xk[k], mrng));
          scenario.script.add(model, id + ":en", k, make_response(pools, Language::en, answer, ek[k], mrng));
        }
        q.x_kinds[model] = std::move(xk);
        q.en_kinds[model] = std::move(ek);
      }
      scenario.questions.push_back(std::move(q));
    }
  }
  return scenario;
}

RolloutBatch make_rollout_batch(const SentencePools& pools, std::size_t count, std::uint64_t seed) {
  RolloutBatch b;
  SplitMix64 rng(seed);
  const auto& bank = answer_bank();
  b.reference = sentences(pools, Language::en, 3, rng);
  b.responses.reserve(count);
  b.golds.reserve(count);
  std::vector<Language> langs;
  for (std::size_t i = 0; i < count; ++i) {
    const Language lang = kSupportedLanguages[rng.uniform_index(kSupportedLanguages.size())];
    const auto& answer = bank[rng.uniform_index(bank.size())];
    const auto kind = static_cast<CandidateKind>(rng.uniform_index(4));
    b.responses.push_back(make_response(pools, lang, answer, kind, rng));
    b.golds.push_back(answer.gold);
    langs.push_back(lang);
  }
  for (std::size_t i = 0; i < count; ++i) {
    RolloutInput in;
    in.response = b.responses[i];
    in.lang = langs[i];
    in.gold = b.golds[i];
    in.en_reference_think = std::string_view(b.reference);
    in.en_question = "question";
    b.inputs.push_back(in);
    b.items.push_back({.id = fmt::format("item-{}", i), .lang = langs[i], .subset = i % 2 == 0 ? "A" : "B",
                       .level = static_cast<int>(1 + i % 4), .run = 0, .gold = b.golds[i], .response = b.responses[i]});
  }
  return b;
}

std::vector<std::vector<double>> make_reward_groups(std::size_t count, std::size_t group_size, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<std::vector<double>> groups(count, std::vector<double>(group_size));
  for (auto& g : groups) {
    for (double& r : g) {
      switch (rng.uniform_index(4)) {
        case 0: r = -1.0; break;
        case 1: r = 0.0; break;
        case 2: r = 1.0; break;
        default: r = 1.0 + rng.uniform_real();
      }
    }
  }
  return groups;
}

std::vector<MockJudgeBackend::Rule> judge_rules() {
  std::vector<MockJudgeBackend::Rule> rules;
  double score = 0.55;
  for (Language lang : kSupportedLanguages) {
    if (lang == Language::en) continue;
    rules.push_back({fmt::format("[{} Thought Process]", display_name(lang)), fmt::format("<score>{:.2f}</score>", score)});
    score += 0.05;
  }
  return rules;
}

void write_workspace(const Scenario& scenario, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "mock");
  std::ofstream questions(dir / "questions.jsonl", std::ios::binary);
  for (const auto& q : scenario.questions) questions << nlohmann::json(q.pair).dump() << '\n';
  scenario.script.save_jsonl(dir / "mock" / "generation.jsonl");
  std::ofstream judge(dir / "mock" / "judge.jsonl", std::ios::binary);
  for (const auto& r : judge_rules()) judge << nlohmann::json{{"contains", r.contains}, {"reply", r.reply}}.dump() << '\n';
}

}  // namespace mthinker::synth
