#include "mthinker/kernels.hpp"

#include <exception>

#include <fmt/format.h>

#include "mthinker/error.hpp"

namespace mthinker {

void from_json(const nlohmann::json& j, EvalItem& item) {
  item.id = j.at("id").get<std::string>();
  const auto code_text = j.at("lang").get<std::string>();
  const auto lang = parse_language(code_text);
  if (!lang) throw Error(Errc::invalid_argument, fmt::format("item {}: unknown language '{}'", item.id, code_text));
  item.lang = *lang;
  item.subset = j.value("subset", std::string());
  if (j.contains("level") && !j.at("level").is_null()) item.level = j.at("level").get<int>();
  item.run = j.value("run", std::size_t{0});
  item.gold = j.at("gold").get<std::string>();
  item.response = j.at("response").get<std::string>();
}

namespace {

EvalRecord eval_one(const EvalItem& item, const LanguageDetector& detector) {
  EvalRecord r = eval_item(item.response, item.lang, item.gold, detector);
  r.id = item.id;
  r.subset = item.subset;
  r.level = item.level;
  r.run = item.run;
  return r;
}

// Runs body(i) for every index; the first exception (lowest index) is rethrown
// after the loop so no exception crosses the OpenMP region.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (long long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

namespace serial {

std::vector<std::vector<double>> advantages_batch(std::span<const std::vector<double>> groups, const GrpoConfig& config) {
  std::vector<std::vector<double>> out;
  out.reserve(groups.size());
  for (const auto& g : groups) out.push_back(group_advantages(g, config));
  return out;
}

std::vector<RewardBreakdown> score_batch(const RewardEngine& engine, std::span<const RolloutInput> inputs) {
  std::vector<RewardBreakdown> out;
  out.reserve(inputs.size());
  for (const auto& in : inputs) out.push_back(engine.score(in));
  return out;
}

std::vector<EvalRecord> eval_batch(std::span<const EvalItem> items, const LanguageDetector& detector) {
  std::vector<EvalRecord> out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back(eval_one(item, detector));
  return out;
}

}  // namespace serial

namespace parallel {

std::vector<std::vector<double>> advantages_batch(std::span<const std::vector<double>> groups, const GrpoConfig& config) {
  std::vector<std::vector<double>> out(groups.size());
  parallel_for(groups.size(), [&](std::size_t i) { out[i] = group_advantages(groups[i], config); });
  return out;
}

std::vector<RewardBreakdown> score_batch(const RewardEngine& engine, std::span<const RolloutInput> inputs) {
  std::vector<RewardBreakdown> out(inputs.size());
  parallel_for(inputs.size(), [&](std::size_t i) { out[i] = engine.score(inputs[i]); });
  return out;
}

std::vector<EvalRecord> eval_batch(std::span<const EvalItem> items, const LanguageDetector& detector) {
  std::vector<EvalRecord> out(items.size());
  parallel_for(items.size(), [&](std::size_t i) { out[i] = eval_one(items[i], detector); });
  return out;
}

}  // namespace parallel

}  // namespace mthinker
