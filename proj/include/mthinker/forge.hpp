#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "mthinker/backend.hpp"
#include "mthinker/language.hpp"
#include "mthinker/random.hpp"
#include "mthinker/response_parser.hpp"
#include "mthinker/reward.hpp"

namespace mthinker {

/// A non-English question with its parallel English question and gold answer.
struct QuestionPair {
  std::string id;
  Language lang = Language::unknown;
  std::string question;
  std::string question_en;
  std::string gold;

  void validate() const;
};

void to_json(nlohmann::json& j, const QuestionPair& q);
void from_json(const nlohmann::json& j, QuestionPair& q);

struct Provenance {
  std::size_t n_correct_x = 0;
  std::size_t n_correct_en = 0;
  std::size_t n = 0;
};

struct RlDatasetEntry {
  std::string id;
  Language lang = Language::unknown;
  std::string question;
  std::string question_en;
  std::string gold;
  std::string en_reference_think;
  Provenance provenance;
};

void to_json(nlohmann::json& j, const RlDatasetEntry& e);
void from_json(const nlohmann::json& j, RlDatasetEntry& e);

enum class SkipReason { too_easy, too_hard, no_english_reference, backend_failure, over_cap };

std::string_view to_string(SkipReason reason);

/// A rollout's breakdown together with its split, when it parsed.
struct ScoredCandidate {
  RewardBreakdown breakdown;
  std::optional<ParsedResponse> parsed;
};

ScoredCandidate score_candidate(const RewardEngine& engine, std::string_view response, Language lang,
                                std::string_view gold);

/// Indices whose breakdown has format = 0, lc = 0 and acc = 1.
std::vector<std::size_t> correct_indices(std::span<const RewardBreakdown> scored);
std::vector<std::size_t> correct_indices(std::span<const ScoredCandidate> scored);

using Selection = std::variant<RlDatasetEntry, SkipReason>;

/// Keeps the question when 0 < |correct_x| < N and draws the English
/// reference thinking uniformly from the correct English candidates.
Selection select_pair(const QuestionPair& pair, std::span<const ScoredCandidate> scored_x,
                      std::span<const ScoredCandidate> scored_en, SplitMix64& rng);

struct ForgeConfig {
  std::size_t candidates = 8;
  std::size_t per_language_cap = 3000;
  bool cache_english = false;
  std::size_t max_in_flight = 8;
  SamplingParams sampling;  // rollout temperature 0.9
};

void to_json(nlohmann::json& j, const ForgeConfig& c);
void from_json(const nlohmann::json& j, ForgeConfig& c);

/// English candidates kept across iterations when `cache_english` is set.
class EnglishCache {
 public:
  std::optional<std::vector<std::string>> get(const std::string& id) const;
  void put(const std::string& id, std::vector<std::string> texts);

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::vector<std::string>> texts_;
};

struct ForgeContext {
  std::uint64_t seed = 0;
  std::size_t iteration = 1;
  std::string model_tag = "model-0";
  std::string config_hash;
  EnglishCache* english_cache = nullptr;
};

struct ForgeOutcome {
  std::string id;
  Language lang = Language::unknown;
  std::optional<SkipReason> skip;  // nullopt: emitted as an entry
  std::string error;
};

struct ForgeReport {
  std::size_t iteration = 1;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string model_tag;
  std::size_t inputs = 0;
  std::size_t entries = 0;
  std::map<SkipReason, std::size_t> skipped;
  std::vector<ForgeOutcome> outcomes;  // input order
};

void to_json(nlohmann::json& j, const ForgeReport& r);

struct ForgeResult {
  std::vector<RlDatasetEntry> entries;  // input order
  ForgeReport report;
};

/// Rejection-sampling data construction for one iteration. Candidates are
/// scored without the judge. Questions run with bounded parallelism and
/// results are assembled in input order; per-question backend failures are
/// recorded and skipped. The per-language cap keeps a seeded random subset.
ForgeResult forge_dataset(std::span<const QuestionPair> pairs, GenerationBackend& generation,
                          const RewardEngine& judgeless, const ForgeConfig& config, const ForgeContext& context);

std::vector<QuestionPair> read_questions(const std::filesystem::path& path);
std::vector<RlDatasetEntry> read_dataset(const std::filesystem::path& path);
void write_dataset(const std::filesystem::path& path, std::span<const RlDatasetEntry> entries);

/// The exact JSON line written for an entry (no trailing newline).
std::string dataset_line(const RlDatasetEntry& entry);

}  // namespace mthinker
