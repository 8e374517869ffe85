#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mthinker/language.hpp"

namespace mthinker {

/// Removes math spans, `\boxed{}` payloads, LaTeX commands, digits,
/// standalone operators and the `<think>`/`</think>` markers. Natural-language
/// text (including punctuation and spacing) is left untouched.
std::string strip_non_linguistic(std::string_view text);

struct LanguageShare {
  Language language = Language::unknown;
  double share = 0.0;
};

struct DetectionResult {
  std::vector<LanguageShare> languages;  // sorted by share, descending
  /// Letters after stripping; the denominator of every share.
  std::size_t total_linguistic_chars = 0;
  /// Non-whitespace characters after stripping (letters and punctuation);
  /// compared against the minimum-length threshold.
  std::size_t visible_chars = 0;

  bool contains(Language lang) const;
  std::size_t size() const { return languages.size(); }
};

struct DetectorOptions {
  double min_share = 0.05;
  std::size_t min_linguistic_chars = 20;
  /// Latin runs shorter than this are merged into a neighbouring segment
  /// before n-gram classification.
  std::size_t min_segment_letters = 8;
  /// Log-score bonus per Vietnamese-only letter (ơ, ư, đ, ă, tone-stacked vowels).
  double vi_letter_bonus = 4.0;
};

/// Character 1..3-gram tables for the Latin-script languages.
class NgramProfiles {
 public:
  static constexpr std::array<Language, 5> kLatinLanguages = {
      Language::en, Language::fr, Language::es, Language::pt, Language::vi};
  static constexpr std::size_t kMaxOrder = 3;

  using Scores = std::array<double, kLatinLanguages.size()>;

  /// Reads `<dir>/<code>.tsv` for every Latin language; lines are
  /// `ngram<TAB>frequency`.
  static NgramProfiles load_directory(const std::filesystem::path& dir);

  /// Adds one language's table from an in-memory TSV payload.
  void add_profile(Language lang, std::string_view tsv);

  /// Finalizes smoothed log-probabilities; must run after the last add_profile.
  void build();

  /// Per-language log-probability of `gram` (UTF-8), or nullptr when no
  /// profile contains it.
  const Scores* lookup(std::string_view gram) const;

 private:
  std::array<std::unordered_map<std::string, double>, kLatinLanguages.size()> counts_;
  std::unordered_map<std::string, Scores> log_probs_;
};

class LanguageDetector {
 public:
  explicit LanguageDetector(NgramProfiles profiles, DetectorOptions options = {});

  /// Throws Error(empty_text) when fewer than `min_linguistic_chars`
  /// non-whitespace characters remain after stripping, or no letters do.
  DetectionResult detect(std::string_view text) const;

  /// Exactly one language detected and it is `lang`.
  bool is_consistent(std::string_view text, Language lang) const;

  /// Best Latin language for a lowercased run of letters and spaces.
  Language classify_latin(std::u32string_view text) const;

  const DetectorOptions& options() const { return options_; }

 private:
  NgramProfiles profiles_;
  DetectorOptions options_;
};

/// Profile directory: $MTHINKER_PROFILE_DIR if set, else the bundled data dir.
std::filesystem::path default_profile_dir();

/// Process-wide detector over the bundled profiles and default options.
const LanguageDetector& default_detector();

}  // namespace mthinker
