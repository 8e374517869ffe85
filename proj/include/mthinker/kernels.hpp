#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mthinker/eval.hpp"
#include "mthinker/grpo.hpp"
#include "mthinker/reward.hpp"

namespace mthinker {

/// One line of an evaluation input file.
struct EvalItem {
  std::string id;
  Language lang = Language::unknown;
  std::string subset;
  std::optional<int> level;
  std::size_t run = 0;
  std::string gold;
  std::string response;
};

void from_json(const nlohmann::json& j, EvalItem& item);

// Batch kernels. `serial` is the reference; `parallel` uses OpenMP and must
// return identical results in identical order.

namespace serial {
std::vector<std::vector<double>> advantages_batch(std::span<const std::vector<double>> groups, const GrpoConfig& config);
std::vector<RewardBreakdown> score_batch(const RewardEngine& engine, std::span<const RolloutInput> inputs);
std::vector<EvalRecord> eval_batch(std::span<const EvalItem> items, const LanguageDetector& detector);
}  // namespace serial

namespace parallel {
std::vector<std::vector<double>> advantages_batch(std::span<const std::vector<double>> groups, const GrpoConfig& config);
std::vector<RewardBreakdown> score_batch(const RewardEngine& engine, std::span<const RolloutInput> inputs);
std::vector<EvalRecord> eval_batch(std::span<const EvalItem> items, const LanguageDetector& detector);
}  // namespace parallel

}  // namespace mthinker
