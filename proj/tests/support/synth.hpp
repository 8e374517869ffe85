#pragma once

// Synthetic questions, responses and mock scripts built from the fixture
// sentence pools.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mthinker/backend.hpp"
#include "mthinker/forge.hpp"
#include "mthinker/kernels.hpp"
#include "mthinker/language.hpp"
#include "mthinker/random.hpp"

namespace mthinker::synth {

using SentencePools = std::map<Language, std::vector<std::string>>;

std::filesystem::path fixture_dir();
SentencePools load_sentence_pools(const std::filesystem::path& path = fixture_dir() / "langid" / "sentences.json");

/// `count` pool sentences of `lang`, joined the way the language is written.
std::string sentences(const SentencePools& pools, Language lang, std::size_t count, SplitMix64& rng);

enum class CandidateKind { correct, wrong_answer, wrong_language, malformed };

/// A gold answer with one equivalent surface form and one wrong value.
struct AnswerForms {
  std::string gold;
  std::string equivalent;
  std::string wrong;
};

const std::vector<AnswerForms>& answer_bank();

/// A full `<think>…</think>answer` response of the given kind.
/// wrong_language writes in English (or French when `lang` is English).
std::string make_response(const SentencePools& pools, Language lang, const AnswerForms& answer, CandidateKind kind,
                          SplitMix64& rng);

struct ScriptedQuestion {
  QuestionPair pair;
  /// model tag -> candidate kinds, index order
  std::map<std::string, std::vector<CandidateKind>> x_kinds;
  std::map<std::string, std::vector<CandidateKind>> en_kinds;
};

struct Scenario {
  std::vector<ScriptedQuestion> questions;
  MockScript script;

  std::vector<QuestionPair> pairs() const;
};

struct ScenarioOptions {
  std::vector<Language> languages;
  std::size_t per_language = 10;
  std::size_t candidates = 8;
  std::uint64_t seed = 1;
  std::vector<std::string> model_tags{"model-0"};
};

/// Questions with a mix of too-easy, too-hard, no-English-reference and
/// learnable profiles, scripted for every model tag.
Scenario make_scenario(const SentencePools& pools, const ScenarioOptions& options);

/// Random rollouts over every kind and language, kept alive for the views
/// in `inputs`.
struct RolloutBatch {
  std::vector<std::string> responses;
  std::vector<std::string> golds;
  std::string reference;
  std::vector<RolloutInput> inputs;
  std::vector<EvalItem> items;  // the same rollouts as eval items, two subsets
};

RolloutBatch make_rollout_batch(const SentencePools& pools, std::size_t count, std::uint64_t seed);

/// Reward groups with values drawn from {-1, 0, 1, 1 + u}.
std::vector<std::vector<double>> make_reward_groups(std::size_t count, std::size_t group_size, std::uint64_t seed);

/// Judge rules replying a fixed score per target language.
std::vector<MockJudgeBackend::Rule> judge_rules();

/// Writes `questions.jsonl` and `mock/{generation,judge}.jsonl` under `dir`
/// for driving the CLI with `--mock dir/mock`.
void write_workspace(const Scenario& scenario, const std::filesystem::path& dir);

}  // namespace mthinker::synth
