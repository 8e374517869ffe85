#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mthinker/langid.hpp"
#include "mthinker/language.hpp"

namespace mthinker {

struct EvalRecord {
  std::string id;
  Language lang = Language::unknown;
  std::string subset;
  std::optional<int> level;  // 1..4
  std::size_t run = 0;
  bool lc = false;
  bool acc = false;
  bool lc_and_acc = false;
};

void to_json(nlohmann::json& j, const EvalRecord& r);

/// lc: parses and both segments consistent with `lang`; acc: boxed answer
/// matches gold in any language; lc_and_acc: both.
EvalRecord eval_item(std::string_view response, Language lang, std::string_view gold, const LanguageDetector& detector);

struct LanguageMetrics {
  double lc = 0.0;  // percentages in [0, 100]
  double acc = 0.0;
  double lc_and_acc = 0.0;
  std::optional<std::array<double, 4>> level_acc;         // fractions in [0, 1]
  std::optional<std::array<double, 4>> level_lc_and_acc;  // fractions in [0, 1]
  std::optional<double> dw_acc;                            // percentage
  std::optional<double> lc_dw_acc;                         // percentage
};

struct MetricReport {
  std::map<Language, LanguageMetrics> languages;
  std::size_t runs = 1;
  /// Unweighted mean of the per-language metrics.
  LanguageMetrics average;
};

void to_json(nlohmann::json& j, const MetricReport& r);

/// Per language and run: mean over subsets of each subset's mean; then the
/// arithmetic mean over runs. Every (language, run) must cover every subset
/// that language has (Error(empty_subset) otherwise).
MetricReport macro_metrics(std::span<const EvalRecord> records, std::size_t runs);

/// (a1 + 2 a2 + 4 a3 + 8 a4) / 15; Error(out_of_range) unless each a_i is in [0, 1].
double dw_acc(const std::array<double, 4>& level_accuracies);

}  // namespace mthinker
