#include "mthinker/language.hpp"

namespace mthinker {

std::string_view code(Language lang) {
  switch (lang) {
    case Language::ja: return "ja";
    case Language::ko: return "ko";
    case Language::fr: return "fr";
    case Language::pt: return "pt";
    case Language::th: return "th";
    case Language::en: return "en";
    case Language::es: return "es";
    case Language::ar: return "ar";
    case Language::vi: return "vi";
    case Language::zh: return "zh";
    case Language::unknown: return "unknown";
  }
  return "unknown";
}

std::string_view display_name(Language lang) {
  switch (lang) {
    case Language::ja: return "Japanese";
    case Language::ko: return "Korean";
    case Language::fr: return "French";
    case Language::pt: return "Portuguese";
    case Language::th: return "Thai";
    case Language::en: return "English";
    case Language::es: return "Spanish";
    case Language::ar: return "Arabic";
    case Language::vi: return "Vietnamese";
    case Language::zh: return "Chinese";
    case Language::unknown: return "Unknown";
  }
  return "Unknown";
}

std::optional<Language> parse_language(std::string_view text) {
  for (Language lang : kSupportedLanguages) {
    if (code(lang) == text) return lang;
  }
  return std::nullopt;
}

}  // namespace mthinker
