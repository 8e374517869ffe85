#include "mthinker/langid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>

#include <fmt/format.h>

#include "mthinker/error.hpp"
#include "mthinker/unicode.hpp"

#ifndef MTHINKER_DATA_DIR
#define MTHINKER_DATA_DIR "data"
#endif

namespace mthinker {

namespace {

constexpr double kSmoothing = 0.5;

bool starts_with(std::u32string_view s, std::size_t i, std::u32string_view prefix) {
  return s.substr(i, prefix.size()) == prefix;
}

bool is_ascii_letter(char32_t c) { return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z'); }

bool is_digit(char32_t c) {
  return (c >= U'0' && c <= U'9') || (c >= 0xFF10 && c <= 0xFF19) || (c >= 0x0660 && c <= 0x0669) ||
         (c >= 0x06F0 && c <= 0x06F9) || (c >= 0x0E50 && c <= 0x0E59);
}

bool is_operator(char32_t c) {
  switch (c) {
    case U'+': case U'*': case U'/': case U'=': case U'<': case U'>': case U'^':
    case U'_': case U'|': case U'~': case U'{': case U'}': case U'×': case U'÷':
    case U'±': case U'²': case U'³': case U'¹': case U'−':
      return true;
    default:
      break;
  }
  return (c >= 0x2200 && c <= 0x22FF) || (c >= 0x2190 && c <= 0x21FF) || (c >= 0x2070 && c <= 0x209F);
}

// Index just past the brace that closes the one at `open`, or npos.
std::size_t match_brace(std::u32string_view s, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    if (s[i] == U'\\' && i + 1 < s.size() && (s[i + 1] == U'{' || s[i + 1] == U'}')) {
      ++i;
      continue;
    }
    if (s[i] == U'{') ++depth;
    if (s[i] == U'}' && --depth == 0) return i + 1;
  }
  return std::u32string_view::npos;
}

enum class Script { latin, thai, hangul, arabic, kana, han, other };

Script script_of(char32_t c) {
  if (c < 0x0250 || (c >= 0x1E00 && c <= 0x1EFF) || (c >= 0x0300 && c <= 0x036F)) return Script::latin;
  if (c >= 0x0E00 && c <= 0x0E7F) return Script::thai;
  if ((c >= 0x1100 && c <= 0x11FF) || (c >= 0x3130 && c <= 0x318F) || (c >= 0xA960 && c <= 0xA97F) ||
      (c >= 0xAC00 && c <= 0xD7FF))
    return Script::hangul;
  if ((c >= 0x0600 && c <= 0x06FF) || (c >= 0x0750 && c <= 0x077F) || (c >= 0x08A0 && c <= 0x08FF) ||
      (c >= 0xFB50 && c <= 0xFDFF) || (c >= 0xFE70 && c <= 0xFEFF))
    return Script::arabic;
  if ((c >= 0x3040 && c <= 0x30FF) || (c >= 0x31F0 && c <= 0x31FF) || (c >= 0xFF66 && c <= 0xFF9F))
    return Script::kana;
  if ((c >= 0x3400 && c <= 0x4DBF) || (c >= 0x4E00 && c <= 0x9FFF) || (c >= 0xF900 && c <= 0xFAFF) ||
      (c >= 0x20000 && c <= 0x2FFFF) || c == 0x3005)
    return Script::han;
  return Script::other;
}

bool is_sentence_end(char32_t c) {
  switch (c) {
    case U'.': case U'!': case U'?': case U';': case U'\n': case U'。': case U'！':
    case U'？': case U'؟': case U'．': case U'۔':
      return true;
    default:
      return false;
  }
}

bool is_vietnamese_letter(char32_t c) {
  switch (c) {
    case U'ă': case U'đ': case U'ơ': case U'ư':
      return true;
    default:
      return c >= 0x1EA0 && c <= 0x1EF9;
  }
}

std::size_t latin_index(Language lang) {
  const auto& langs = NgramProfiles::kLatinLanguages;
  return static_cast<std::size_t>(std::find(langs.begin(), langs.end(), lang) - langs.begin());
}

struct LatinRun {
  std::u32string text;
  std::size_t letters = 0;
};

}  // namespace

std::string strip_non_linguistic(std::string_view text) {
  const std::u32string s = unicode::decode(text);
  const std::u32string_view v = s;
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < v.size()) {
    if (starts_with(v, i, U"<think>")) {
      i += 7;
      continue;
    }
    if (starts_with(v, i, U"</think>")) {
      i += 8;
      continue;
    }
    const char32_t c = v[i];
    if (c == U'$') {
      const bool display = i + 1 < v.size() && v[i + 1] == U'$';
      const std::size_t body = i + (display ? 2 : 1);
      const std::size_t close = v.find(display ? U"$$" : U"$", body);
      i = close == std::u32string_view::npos ? body : close + (display ? 2 : 1);
      continue;
    }
    if (c == U'\\') {
      if (i + 1 >= v.size()) {
        ++i;
        continue;
      }
      const char32_t next = v[i + 1];
      if (next == U'[' || next == U'(') {
        const std::size_t close = v.find(next == U'[' ? U"\\]" : U"\\)", i + 2);
        i = close == std::u32string_view::npos ? i + 2 : close + 2;
        continue;
      }
      if (starts_with(v, i, U"\\boxed")) {
        std::size_t j = i + 6;
        while (j < v.size() && v[j] == U' ') ++j;
        if (j < v.size() && v[j] == U'{') {
          const std::size_t end = match_brace(v, j);
          i = end == std::u32string_view::npos ? v.size() : end;
          continue;
        }
      }
      std::size_t j = i + 1;
      while (j < v.size() && is_ascii_letter(v[j])) ++j;
      i = j == i + 1 ? i + 2 : j;
      continue;
    }
    if (is_digit(c) || is_operator(c)) {
      ++i;
      continue;
    }
    if (c == U'-') {
      const bool joins_words = i > 0 && i + 1 < v.size() && unicode::is_letter(v[i - 1]) &&
                               unicode::is_letter(v[i + 1]);
      if (!joins_words) {
        ++i;
        continue;
      }
    }
    out.push_back(c);
    ++i;
  }
  return unicode::encode(out);
}

bool DetectionResult::contains(Language lang) const {
  return std::any_of(languages.begin(), languages.end(),
                     [lang](const LanguageShare& s) { return s.language == lang; });
}

NgramProfiles NgramProfiles::load_directory(const std::filesystem::path& dir) {
  NgramProfiles profiles;
  for (Language lang : kLatinLanguages) {
    const auto path = dir / fmt::format("{}.tsv", code(lang));
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io_error, fmt::format("cannot open n-gram profile {}", path.string()));
    std::ostringstream buf;
    buf << in.rdbuf();
    profiles.add_profile(lang, buf.str());
  }
  profiles.build();
  return profiles;
}

void NgramProfiles::add_profile(Language lang, std::string_view tsv) {
  const std::size_t idx = latin_index(lang);
  if (idx >= kLatinLanguages.size()) {
    throw Error(Errc::invalid_argument, fmt::format("{} is not a Latin-script language", code(lang)));
  }
  auto& table = counts_[idx];
  std::size_t pos = 0;
  while (pos < tsv.size()) {
    std::size_t eol = tsv.find('\n', pos);
    if (eol == std::string_view::npos) eol = tsv.size();
    std::string_view line = tsv.substr(pos, eol - pos);
    pos = eol + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const std::size_t tab = line.rfind('\t');
    if (tab == std::string_view::npos || tab == 0) continue;
    const std::string gram = unicode::nfc(line.substr(0, tab));
    const double freq = std::strtod(std::string(line.substr(tab + 1)).c_str(), nullptr);
    if (freq > 0.0) table[gram] += freq;
  }
}

void NgramProfiles::build() {
  std::array<std::array<double, kMaxOrder + 1>, kLatinLanguages.size()> totals{};
  std::array<std::size_t, kMaxOrder + 1> vocab{};
  std::unordered_map<std::string, std::size_t> order_of;
  for (std::size_t l = 0; l < counts_.size(); ++l) {
    for (const auto& [gram, count] : counts_[l]) {
      const std::size_t order = unicode::decode(gram).size();
      if (order == 0 || order > kMaxOrder) continue;
      totals[l][order] += count;
      if (order_of.emplace(gram, order).second) ++vocab[order];
    }
  }
  log_probs_.clear();
  log_probs_.reserve(order_of.size());
  for (const auto& [gram, order] : order_of) {
    Scores scores{};
    for (std::size_t l = 0; l < counts_.size(); ++l) {
      const auto it = counts_[l].find(gram);
      const double count = it == counts_[l].end() ? 0.0 : it->second;
      scores[l] = std::log((count + kSmoothing) /
                           (totals[l][order] + kSmoothing * static_cast<double>(vocab[order])));
    }
    log_probs_.emplace(gram, scores);
  }
}

const NgramProfiles::Scores* NgramProfiles::lookup(std::string_view gram) const {
  const auto it = log_probs_.find(std::string(gram));
  return it == log_probs_.end() ? nullptr : &it->second;
}

LanguageDetector::LanguageDetector(NgramProfiles profiles, DetectorOptions options)
    : profiles_(std::move(profiles)), options_(options) {}

Language LanguageDetector::classify_latin(std::u32string_view text) const {
  NgramProfiles::Scores total{};
  std::size_t vi_letters = 0;
  std::size_t start = 0;
  std::string gram;
  while (start < text.size()) {
    while (start < text.size() && text[start] == U' ') ++start;
    std::size_t end = start;
    while (end < text.size() && text[end] != U' ') ++end;
    if (end == start) break;
    std::u32string padded;
    padded.reserve(end - start + 2);
    padded.push_back(U' ');
    padded.append(text.substr(start, end - start));
    padded.push_back(U' ');
    for (std::size_t k = start; k < end; ++k) {
      if (is_vietnamese_letter(text[k])) ++vi_letters;
    }
    for (std::size_t n = 1; n <= NgramProfiles::kMaxOrder; ++n) {
      for (std::size_t p = 0; p + n <= padded.size(); ++p) {
        const std::u32string_view g = std::u32string_view(padded).substr(p, n);
        if (n == 1 && g[0] == U' ') continue;
        if (n > 1 && g.front() == U' ' && g.back() == U' ') continue;
        gram.clear();
        for (char32_t cp : g) unicode::append(gram, cp);
        if (const auto* scores = profiles_.lookup(gram)) {
          for (std::size_t l = 0; l < total.size(); ++l) total[l] += (*scores)[l];
        }
      }
    }
    start = end;
  }
  total[latin_index(Language::vi)] += options_.vi_letter_bonus * static_cast<double>(vi_letters);
  const auto best = std::max_element(total.begin(), total.end());
  return NgramProfiles::kLatinLanguages[static_cast<std::size_t>(best - total.begin())];
}

DetectionResult LanguageDetector::detect(std::string_view text) const {
  const std::u32string chars = unicode::decode(unicode::nfc(strip_non_linguistic(text)));
  const bool has_kana =
      std::any_of(chars.begin(), chars.end(), [](char32_t c) { return script_of(c) == Script::kana && unicode::is_letter(c); });

  std::array<std::size_t, static_cast<std::size_t>(Language::unknown) + 1> counts{};
  auto bump = [&counts](Language lang, std::size_t n = 1) { counts[static_cast<std::size_t>(lang)] += n; };

  std::vector<LatinRun> runs;
  LatinRun current;
  auto close_segment = [&]() {
    if (current.letters > 0) runs.push_back(std::move(current));
    current = LatinRun{};
  };
  for (char32_t c : chars) {
    if (is_sentence_end(c)) {
      close_segment();
      continue;
    }
    if (!unicode::is_letter(c)) {
      if (!current.text.empty() && current.text.back() != U' ') current.text.push_back(U' ');
      continue;
    }
    switch (script_of(c)) {
      case Script::latin:
        current.text.push_back(unicode::to_lower(c));
        ++current.letters;
        break;
      case Script::thai: bump(Language::th); break;
      case Script::hangul: bump(Language::ko); break;
      case Script::arabic: bump(Language::ar); break;
      case Script::kana: bump(Language::ja); break;
      case Script::han: bump(has_kana ? Language::ja : Language::zh); break;
      case Script::other: bump(Language::unknown); break;
    }
  }
  close_segment();

  // Short runs ride along with the following run; a trailing short run joins
  // the language of the run before it.
  LatinRun pending;
  std::optional<Language> last_lang;
  for (auto& run : runs) {
    if (!pending.text.empty()) {
      run.text = pending.text + U" " + run.text;
      run.letters += pending.letters;
      pending = LatinRun{};
    }
    if (run.letters < options_.min_segment_letters) {
      pending = std::move(run);
      continue;
    }
    last_lang = classify_latin(run.text);
    bump(*last_lang, run.letters);
  }
  if (pending.letters > 0) bump(last_lang.value_or(classify_latin(pending.text)), pending.letters);

  DetectionResult result;
  for (std::size_t n : counts) result.total_linguistic_chars += n;
  result.visible_chars = static_cast<std::size_t>(
      std::count_if(chars.begin(), chars.end(), [](char32_t c) { return !unicode::is_space(c); }));
  if (result.visible_chars < options_.min_linguistic_chars || result.total_linguistic_chars == 0) {
    throw Error(Errc::empty_text, fmt::format("only {} linguistic characters (minimum {})", result.visible_chars,
                                              options_.min_linguistic_chars));
  }
  const auto total = static_cast<double>(result.total_linguistic_chars);
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const double share = static_cast<double>(counts[k]) / total;
    if (counts[k] > 0 && share >= options_.min_share) {
      result.languages.push_back({static_cast<Language>(k), share});
    }
  }
  std::stable_sort(result.languages.begin(), result.languages.end(),
                   [](const LanguageShare& a, const LanguageShare& b) { return a.share > b.share; });
  return result;
}

bool LanguageDetector::is_consistent(std::string_view text, Language lang) const {
  if (lang == Language::unknown) throw Error(Errc::invalid_argument, "consistency target must be a known language");
  const DetectionResult result = detect(text);
  return result.size() == 1 && result.contains(lang);
}

std::filesystem::path default_profile_dir() {
  if (const char* env = std::getenv("MTHINKER_PROFILE_DIR"); env != nullptr && *env != '\0') return env;
  return std::filesystem::path(MTHINKER_DATA_DIR) / "langid";
}

const LanguageDetector& default_detector() {
  static const LanguageDetector detector(NgramProfiles::load_directory(default_profile_dir()));
  return detector;
}

}  // namespace mthinker
