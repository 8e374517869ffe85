#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace mthinker {

/// The ten supported languages plus `unknown` for letters outside them.
enum class Language : std::uint8_t { ja, ko, fr, pt, th, en, es, ar, vi, zh, unknown };

inline constexpr std::array<Language, 10> kSupportedLanguages = {
    Language::ja, Language::ko, Language::fr, Language::pt, Language::th,
    Language::en, Language::es, Language::ar, Language::vi, Language::zh};

std::string_view code(Language lang);

/// English exonym, e.g. "French".
std::string_view display_name(Language lang);

/// Accepts the two-letter codes above; `unknown` is not parseable.
std::optional<Language> parse_language(std::string_view code);

}  // namespace mthinker
