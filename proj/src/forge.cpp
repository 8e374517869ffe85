#include "mthinker/forge.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <exception>
#include <fstream>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "mthinker/error.hpp"

namespace mthinker {

using nlohmann::json;

namespace {

Language language_field(const json& j, const char* key) {
  const auto text = j.at(key).get<std::string>();
  const auto lang = parse_language(text);
  if (!lang) throw Error(Errc::invalid_argument, fmt::format("unknown language code '{}'", text));
  return *lang;
}

}  // namespace

void QuestionPair::validate() const {
  if (lang == Language::en || lang == Language::unknown) {
    throw Error(Errc::invalid_argument, fmt::format("question {}: language must be non-English", id));
  }
  if (question.empty() || question_en.empty()) {
    throw Error(Errc::invalid_argument, fmt::format("question {}: question text must be non-empty", id));
  }
  if (id.empty() || gold.empty()) throw Error(Errc::invalid_argument, fmt::format("question '{}': id and gold are required", id));
}

void to_json(json& j, const QuestionPair& q) {
  j = json{{"id", q.id}, {"lang", code(q.lang)}, {"question", q.question}, {"question_en", q.question_en}, {"gold", q.gold}};
}

void from_json(const json& j, QuestionPair& q) {
  q.id = j.at("id").get<std::string>();
  q.lang = language_field(j, "lang");
  q.question = j.at("question").get<std::string>();
  q.question_en = j.at("question_en").get<std::string>();
  q.gold = j.at("gold").get<std::string>();
  q.validate();
}

void to_json(json& j, const RlDatasetEntry& e) {
  j = json{{"id", e.id},
           {"lang", code(e.lang)},
           {"question", e.question},
           {"question_en", e.question_en},
           {"gold", e.gold},
           {"en_reference_think", e.en_reference_think},
           {"provenance",
            {{"n_correct_x", e.provenance.n_correct_x},
             {"n_correct_en", e.provenance.n_correct_en},
             {"n", e.provenance.n}}}};
}

void from_json(const json& j, RlDatasetEntry& e) {
  e.id = j.at("id").get<std::string>();
  e.lang = language_field(j, "lang");
  e.question = j.at("question").get<std::string>();
  e.question_en = j.value("question_en", std::string());
  e.gold = j.at("gold").get<std::string>();
  e.en_reference_think = j.at("en_reference_think").get<std::string>();
  const auto& p = j.at("provenance");
  e.provenance = {p.at("n_correct_x").get<std::size_t>(), p.at("n_correct_en").get<std::size_t>(),
                  p.at("n").get<std::size_t>()};
}

std::string_view to_string(SkipReason reason) {
  switch (reason) {
    case SkipReason::too_easy: return "too_easy";
    case SkipReason::too_hard: return "too_hard";
    case SkipReason::no_english_reference: return "no_english_reference";
    case SkipReason::backend_failure: return "backend_failure";
    case SkipReason::over_cap: return "over_cap";
  }
  return "unknown";
}

ScoredCandidate score_candidate(const RewardEngine& engine, std::string_view response, Language lang,
                                std::string_view gold) {
  ScoredCandidate out;
  RolloutInput input;
  input.response = response;
  input.lang = lang;
  input.gold = gold;
  out.breakdown = engine.score(input);
  if (auto parsed = try_parse_response(response); std::holds_alternative<ParsedResponse>(parsed)) {
    out.parsed = std::get<ParsedResponse>(std::move(parsed));
  }
  return out;
}

std::vector<std::size_t> correct_indices(std::span<const RewardBreakdown> scored) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    if (scored[i].format == 0 && scored[i].lc == 0 && scored[i].acc == 1) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> correct_indices(std::span<const ScoredCandidate> scored) {
  std::vector<RewardBreakdown> breakdowns;
  breakdowns.reserve(scored.size());
  for (const auto& s : scored) breakdowns.push_back(s.breakdown);
  return correct_indices(std::span<const RewardBreakdown>(breakdowns));
}

Selection select_pair(const QuestionPair& pair, std::span<const ScoredCandidate> scored_x,
                      std::span<const ScoredCandidate> scored_en, SplitMix64& rng) {
  if (scored_x.size() != scored_en.size() || scored_x.empty()) {
    throw Error(Errc::invalid_argument,
                fmt::format("question {}: candidate sets must both have N elements ({} vs {})", pair.id,
                            scored_x.size(), scored_en.size()));
  }
  const std::size_t n = scored_x.size();
  const auto correct_x = correct_indices(scored_x);
  const auto correct_en = correct_indices(scored_en);
  if (correct_x.empty()) return SkipReason::too_hard;
  if (correct_x.size() == n) return SkipReason::too_easy;
  if (correct_en.empty()) return SkipReason::no_english_reference;

  const std::size_t pick = correct_en[rng.uniform_index(correct_en.size())];
  RlDatasetEntry entry;
  entry.id = pair.id;
  entry.lang = pair.lang;
  entry.question = pair.question;
  entry.question_en = pair.question_en;
  entry.gold = pair.gold;
  entry.en_reference_think = scored_en[pick].parsed.value().think;
  entry.provenance = {correct_x.size(), correct_en.size(), n};
  return entry;
}

void to_json(json& j, const ForgeConfig& c) {
  j = json{{"candidates", c.candidates},
           {"per_language_cap", c.per_language_cap},
           {"cache_english", c.cache_english},
           {"max_in_flight", c.max_in_flight},
           {"sampling",
            {{"temperature", c.sampling.temperature},
             {"top_p", c.sampling.top_p},
             {"max_tokens", c.sampling.max_tokens}}}};
}

void from_json(const json& j, ForgeConfig& c) {
  c.candidates = j.value("candidates", c.candidates);
  c.per_language_cap = j.value("per_language_cap", c.per_language_cap);
  c.cache_english = j.value("cache_english", c.cache_english);
  c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
  if (j.contains("sampling")) {
    const auto& s = j.at("sampling");
    c.sampling.temperature = s.value("temperature", c.sampling.temperature);
    c.sampling.top_p = s.value("top_p", c.sampling.top_p);
    c.sampling.max_tokens = s.value("max_tokens", c.sampling.max_tokens);
  }
  if (c.candidates < 2) throw Error(Errc::invalid_argument, "forge.candidates must be >= 2");
  if (c.max_in_flight < 1) throw Error(Errc::invalid_argument, "forge.max_in_flight must be >= 1");
}

std::optional<std::vector<std::string>> EnglishCache::get(const std::string& id) const {
  std::lock_guard lock(mutex_);
  const auto it = texts_.find(id);
  if (it == texts_.end()) return std::nullopt;
  return it->second;
}

void EnglishCache::put(const std::string& id, std::vector<std::string> texts) {
  std::lock_guard lock(mutex_);
  texts_[id] = std::move(texts);
}

void to_json(json& j, const ForgeReport& r) {
  json skipped = json::object();
  for (SkipReason reason : {SkipReason::too_easy, SkipReason::too_hard, SkipReason::no_english_reference,
                            SkipReason::backend_failure, SkipReason::over_cap}) {
    const auto it = r.skipped.find(reason);
    skipped[std::string(to_string(reason))] = it == r.skipped.end() ? 0 : it->second;
  }
  json per_language = json::object();
  json outcomes = json::array();
  for (const auto& o : r.outcomes) {
    auto& lang = per_language[std::string(code(o.lang))];
    if (lang.is_null()) lang = json::object();
    const std::string key = o.skip ? std::string(to_string(*o.skip)) : "entries";
    lang[key] = lang.value(key, 0) + 1;
    json rec{{"id", o.id}, {"lang", code(o.lang)}, {"outcome", key == "entries" ? "entry" : key}};
    if (!o.error.empty()) rec["error"] = o.error;
    outcomes.push_back(std::move(rec));
  }
  j = json{{"iteration", r.iteration}, {"seed", r.seed},         {"config_hash", r.config_hash},
           {"model_tag", r.model_tag}, {"inputs", r.inputs},     {"entries", r.entries},
           {"skipped", skipped},       {"per_language", per_language}, {"outcomes", outcomes}};
}

namespace {

struct PairResult {
  std::optional<RlDatasetEntry> entry;
  ForgeOutcome outcome;
};

PairResult forge_one(const QuestionPair& pair, GenerationBackend& generation, const RewardEngine& engine,
                     const ForgeConfig& config, const ForgeContext& context) {
  PairResult result;
  result.outcome.id = pair.id;
  result.outcome.lang = pair.lang;
  std::vector<std::string> texts_x;
  std::vector<std::string> texts_en;
  try {
    texts_x = generation.generate_n(
        {.key = pair.id, .prompt = pair.question, .n = config.candidates, .model_tag = context.model_tag,
         .sampling = config.sampling});
    std::optional<std::vector<std::string>> cached;
    if (context.english_cache != nullptr) cached = context.english_cache->get(pair.id);
    if (cached) {
      texts_en = std::move(*cached);
    } else {
      texts_en = generation.generate_n({.key = pair.id + ":en", .prompt = pair.question_en, .n = config.candidates,
                                        .model_tag = context.model_tag, .sampling = config.sampling});
      if (context.english_cache != nullptr) context.english_cache->put(pair.id, texts_en);
    }
  } catch (const BackendError& e) {
    spdlog::warn("question {}: generation failed: {}", pair.id, e.what());
    result.outcome.skip = SkipReason::backend_failure;
    result.outcome.error = e.what();
    return result;
  }
  if (texts_x.size() != config.candidates || texts_en.size() != config.candidates) {
    throw Error(Errc::backend_failure, fmt::format("question {}: backend returned the wrong number of candidates", pair.id));
  }

  std::vector<ScoredCandidate> scored_x;
  std::vector<ScoredCandidate> scored_en;
  for (const auto& t : texts_x) scored_x.push_back(score_candidate(engine, t, pair.lang, pair.gold));
  for (const auto& t : texts_en) scored_en.push_back(score_candidate(engine, t, Language::en, pair.gold));

  SplitMix64 rng(derive_seed(context.seed, context.iteration, pair.id));
  auto selection = select_pair(pair, scored_x, scored_en, rng);
  if (auto* entry = std::get_if<RlDatasetEntry>(&selection)) {
    result.entry = std::move(*entry);
  } else {
    result.outcome.skip = std::get<SkipReason>(selection);
  }
  return result;
}

}  // namespace

ForgeResult forge_dataset(std::span<const QuestionPair> pairs, GenerationBackend& generation,
                          const RewardEngine& judgeless, const ForgeConfig& config, const ForgeContext& context) {
  if (judgeless.has_judge()) throw Error(Errc::invalid_argument, "forge_dataset requires a judgeless reward engine");
  for (const auto& p : pairs) p.validate();

  std::vector<std::optional<PairResult>> slots(pairs.size());
  std::atomic<std::size_t> next{0};
  std::mutex mutex;
  std::exception_ptr failure;
  auto worker = [&]() {
    for (std::size_t i = next++; i < pairs.size(); i = next++) {
      try {
        PairResult r = forge_one(pairs[i], generation, judgeless, config, context);
        std::lock_guard lock(mutex);
        slots[i] = std::move(r);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!failure) failure = std::current_exception();
        next = pairs.size();
      }
    }
  };
  const std::size_t workers = std::min(config.max_in_flight, std::max<std::size_t>(1, pairs.size()));
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  ForgeResult result;
  auto& report = result.report;
  report.iteration = context.iteration;
  report.seed = context.seed;
  report.config_hash = context.config_hash;
  report.model_tag = context.model_tag;
  report.inputs = pairs.size();

  std::map<Language, std::vector<std::size_t>> by_language;
  std::vector<std::optional<RlDatasetEntry>> kept(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto& r = *slots[i];
    report.outcomes.push_back(r.outcome);
    if (r.entry) {
      by_language[r.entry->lang].push_back(i);
      kept[i] = std::move(r.entry);
    }
  }

  for (auto& [lang, indices] : by_language) {
    if (indices.size() <= config.per_language_cap) continue;
    SplitMix64 rng(derive_seed(context.seed, context.iteration, fmt::format("cap:{}", code(lang))));
    for (std::size_t k = indices.size() - 1; k > 0; --k) {
      std::swap(indices[k], indices[rng.uniform_index(k + 1)]);
    }
    for (std::size_t k = config.per_language_cap; k < indices.size(); ++k) {
      kept[indices[k]].reset();
      report.outcomes[indices[k]].skip = SkipReason::over_cap;
    }
  }

  for (auto& e : kept) {
    if (e) result.entries.push_back(std::move(*e));
  }
  report.entries = result.entries.size();
  for (const auto& o : report.outcomes) {
    if (o.skip) ++report.skipped[*o.skip];
  }
  return result;
}

std::vector<QuestionPair> read_questions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, fmt::format("cannot open questions file {}", path.string()));
  std::vector<QuestionPair> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line).get<QuestionPair>());
    } catch (const json::exception& e) {
      throw Error(Errc::invalid_argument, fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
  }
  return out;
}

std::vector<RlDatasetEntry> read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, fmt::format("cannot open dataset {}", path.string()));
  std::vector<RlDatasetEntry> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(json::parse(line).get<RlDatasetEntry>());
  }
  return out;
}

std::string dataset_line(const RlDatasetEntry& entry) { return json(entry).dump(); }

void write_dataset(const std::filesystem::path& path, std::span<const RlDatasetEntry> entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, fmt::format("cannot write dataset {}", path.string()));
  for (const auto& e : entries) out << dataset_line(e) << '\n';
}

}  // namespace mthinker
