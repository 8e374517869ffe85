#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mthinker/backend.hpp"
#include "mthinker/forge.hpp"
#include "mthinker/grpo.hpp"
#include "mthinker/langid.hpp"
#include "mthinker/reward.hpp"

namespace mthinker {

struct TrainerConfig {
  std::string kind = "toy";  // "toy" or "external"
  /// External trainers only. Placeholders: {dataset} {ref_model} {out_model}
  /// {iteration} {output_dir}; each is substituted shell-quoted.
  std::string command;
  std::size_t steps = 50;
  double learning_rate = 0.1;
};

struct PathsConfig {
  std::filesystem::path questions;
  std::filesystem::path output_dir;
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  std::size_t iterations = 2;
  GrpoConfig grpo;
  BackendConfig generation;
  BackendConfig judge;
  bool judge_enabled = true;
  ForgeConfig forge;
  TrainerConfig trainer;
  PathsConfig paths;
  std::string initial_model_tag = "model-0";
  DetectorOptions langid;
  std::optional<std::filesystem::path> profile_dir;

  /// Defaults with the judge on its own key variable at temperature 0.
  PipelineConfig();

  void validate() const;
};

void to_json(nlohmann::json& j, const PipelineConfig& c);
void from_json(const nlohmann::json& j, PipelineConfig& c);

PipelineConfig load_pipeline_config(const std::filesystem::path& path);

/// FNV-1a (hex) of the configuration without its paths, so the same settings
/// hash identically wherever they write.
std::string config_hash(const PipelineConfig& config);

/// Model tag produced by iteration `i` when starting from `initial`.
std::string model_tag_for(const std::string& initial, std::size_t iteration);

struct TrainRequest {
  std::size_t iteration = 1;
  std::string ref_model_tag;
  std::string out_model_tag;
  std::filesystem::path dataset_path;
  std::filesystem::path output_dir;
  std::span<const RlDatasetEntry> entries;
};

struct TrainResult {
  std::string model_tag;
  nlohmann::json report;
};

/// Phase B handle. Implementations raise any error; the loop wraps it as
/// TRAINER_FAILURE.
class Trainer {
 public:
  virtual ~Trainer() = default;
  virtual TrainResult train(const TrainRequest& request) = 0;
};

/// In-repo GRPO over synthetic vocabularies: each dataset question's N
/// reference-model candidates become a softmax policy's outputs, scored with
/// the full reward (CTA included when a judge is configured).
class ToyGrpoTrainer : public Trainer {
 public:
  ToyGrpoTrainer(GenerationBackend& generation, const RewardEngine& engine, GrpoConfig grpo, std::size_t candidates,
                 SamplingParams sampling, std::size_t steps, double learning_rate);

  TrainResult train(const TrainRequest& request) override;

 private:
  GenerationBackend* generation_;
  const RewardEngine* engine_;
  GrpoConfig grpo_;
  std::size_t candidates_;
  SamplingParams sampling_;
  std::size_t steps_;
  double learning_rate_;
};

/// Runs a user command and treats a zero exit as a trained `out_model`.
class ExternalCommandTrainer : public Trainer {
 public:
  explicit ExternalCommandTrainer(std::string command_template) : template_(std::move(command_template)) {}

  TrainResult train(const TrainRequest& request) override;
  std::string render(const TrainRequest& request) const;

 private:
  std::string template_;
};

struct IterationState {
  std::size_t iteration = 1;
  std::string ref_model_tag;             // policy that generates this iteration's candidates
  std::filesystem::path dataset_path;    // last forged dataset, empty before the first iteration
  std::optional<ForgeReport> forge_report;
};

struct PipelineContext {
  GenerationBackend* generation = nullptr;
  const LanguageDetector* detector = nullptr;
  Trainer* trainer = nullptr;
  std::vector<QuestionPair> questions;
  EnglishCache* english_cache = nullptr;
};

/// Phase A then Phase B for `state.iteration`. Writes iter-<i>/dataset.jsonl,
/// forge_report.json and train_report.json and returns the state for the
/// next iteration. Errors: FORGE_EMPTY, TRAINER_FAILURE.
IterationState run_iteration(const IterationState& state, const PipelineConfig& config, PipelineContext& context);

/// All iterations in order plus summary.json; returns every finished state.
std::vector<IterationState> run_pipeline(const PipelineConfig& config, PipelineContext& context);

}  // namespace mthinker
