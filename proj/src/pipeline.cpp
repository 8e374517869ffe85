#include "mthinker/pipeline.hpp"

#include <cstdlib>
#include <fstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "mthinker/error.hpp"
#include "mthinker/random.hpp"

namespace mthinker {

using nlohmann::json;

PipelineConfig::PipelineConfig() {
  judge.api_key_env = "MTHINKER_JUDGE_KEY";
  judge.sampling.temperature = 0.0;
  judge.sampling.max_tokens = 1024;
}

void PipelineConfig::validate() const {
  if (iterations < 1) throw Error(Errc::invalid_argument, "iterations must be >= 1");
  grpo.validate();
  generation.validate();
  judge.validate();
  if (grpo.group_size != forge.candidates) {
    throw Error(Errc::invalid_argument,
                fmt::format("grpo.group_size ({}) must equal forge.candidates ({})", grpo.group_size, forge.candidates));
  }
  if (paths.questions.empty() || paths.output_dir.empty()) {
    throw Error(Errc::invalid_argument, "paths.questions and paths.output_dir are required");
  }
  if (std::filesystem::weakly_canonical(paths.questions) == std::filesystem::weakly_canonical(paths.output_dir)) {
    throw Error(Errc::invalid_argument, "paths must be distinct");
  }
  if (trainer.kind != "toy" && trainer.kind != "external") {
    throw Error(Errc::invalid_argument, fmt::format("unknown trainer kind '{}'", trainer.kind));
  }
  if (trainer.kind == "external" && trainer.command.empty()) {
    throw Error(Errc::invalid_argument, "external trainer needs a command");
  }
  if (!(trainer.learning_rate >= 0.0)) throw Error(Errc::invalid_argument, "trainer.learning_rate must be >= 0");
}

void to_json(json& j, const PipelineConfig& c) {
  j = json{{"seed", c.seed},
           {"iterations", c.iterations},
           {"grpo", c.grpo},
           {"generation", c.generation},
           {"judge", c.judge},
           {"judge_enabled", c.judge_enabled},
           {"forge", c.forge},
           {"trainer",
            {{"kind", c.trainer.kind},
             {"command", c.trainer.command},
             {"steps", c.trainer.steps},
             {"learning_rate", c.trainer.learning_rate}}},
           {"paths", {{"questions", c.paths.questions.string()}, {"output_dir", c.paths.output_dir.string()}}},
           {"initial_model_tag", c.initial_model_tag},
           {"langid",
            {{"min_share", c.langid.min_share},
             {"min_linguistic_chars", c.langid.min_linguistic_chars},
             {"min_segment_letters", c.langid.min_segment_letters},
             {"vi_letter_bonus", c.langid.vi_letter_bonus}}}};
  if (c.profile_dir) j["langid"]["profile_dir"] = c.profile_dir->string();
}

void from_json(const json& j, PipelineConfig& c) {
  c.seed = j.value("seed", c.seed);
  c.iterations = j.value("iterations", c.iterations);
  if (j.contains("grpo")) c.grpo = j.at("grpo").get<GrpoConfig>();
  if (j.contains("generation")) c.generation = j.at("generation").get<BackendConfig>();
  if (j.contains("judge")) {
    // Judge defaults differ from generation defaults; overlay onto them.
    json merged = c.judge;
    merged.merge_patch(j.at("judge"));
    c.judge = merged.get<BackendConfig>();
  }
  c.judge_enabled = j.value("judge_enabled", c.judge_enabled);
  if (j.contains("forge")) c.forge = j.at("forge").get<ForgeConfig>();
  if (j.contains("trainer")) {
    const auto& t = j.at("trainer");
    c.trainer.kind = t.value("kind", c.trainer.kind);
    c.trainer.command = t.value("command", c.trainer.command);
    c.trainer.steps = t.value("steps", c.trainer.steps);
    c.trainer.learning_rate = t.value("learning_rate", c.trainer.learning_rate);
  }
  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    c.paths.questions = p.value("questions", c.paths.questions.string());
    c.paths.output_dir = p.value("output_dir", c.paths.output_dir.string());
  }
  c.initial_model_tag = j.value("initial_model_tag", c.initial_model_tag);
  if (j.contains("langid")) {
    const auto& l = j.at("langid");
    c.langid.min_share = l.value("min_share", c.langid.min_share);
    c.langid.min_linguistic_chars = l.value("min_linguistic_chars", c.langid.min_linguistic_chars);
    c.langid.min_segment_letters = l.value("min_segment_letters", c.langid.min_segment_letters);
    c.langid.vi_letter_bonus = l.value("vi_letter_bonus", c.langid.vi_letter_bonus);
    if (l.contains("profile_dir")) c.profile_dir = l.at("profile_dir").get<std::string>();
  }
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, fmt::format("cannot open config {}", path.string()));
  PipelineConfig config;
  try {
    config = json::parse(in).get<PipelineConfig>();
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_argument, fmt::format("{}: {}", path.string(), e.what()));
  }
  // Relative paths resolve against the config file's directory.
  const auto base = path.parent_path();
  if (!config.paths.questions.empty() && config.paths.questions.is_relative()) {
    config.paths.questions = base / config.paths.questions;
  }
  if (!config.paths.output_dir.empty() && config.paths.output_dir.is_relative()) {
    config.paths.output_dir = base / config.paths.output_dir;
  }
  if (config.profile_dir && config.profile_dir->is_relative()) config.profile_dir = base / *config.profile_dir;
  return config;
}

std::string config_hash(const PipelineConfig& config) {
  json j = config;
  j.erase("paths");
  if (j["langid"].contains("profile_dir")) j["langid"].erase("profile_dir");
  return fmt::format("{:016x}", fnv1a(j.dump()));
}

std::string model_tag_for(const std::string& initial, std::size_t iteration) {
  if (const auto dash = initial.rfind('-'); dash != std::string::npos) {
    const auto stem = initial.substr(0, dash);
    const auto digits = initial.substr(dash + 1);
    if (!digits.empty() && digits.find_first_not_of("0123456789") == std::string::npos) {
      return fmt::format("{}-{}", stem, std::stoull(digits) + iteration);
    }
  }
  return fmt::format("{}-iter{}", initial, iteration);
}

namespace {

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, fmt::format("cannot write {}", path.string()));
  out << j.dump(2) << '\n';
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  out += '\'';
  return out;
}

}  // namespace

ToyGrpoTrainer::ToyGrpoTrainer(GenerationBackend& generation, const RewardEngine& engine, GrpoConfig grpo,
                               std::size_t candidates, SamplingParams sampling, std::size_t steps,
                               double learning_rate)
    : generation_(&generation),
      engine_(&engine),
      grpo_(grpo),
      candidates_(candidates),
      sampling_(sampling),
      steps_(steps),
      learning_rate_(learning_rate) {}

TrainResult ToyGrpoTrainer::train(const TrainRequest& request) {
  std::vector<std::vector<ToyOutput>> vocabulary;
  vocabulary.reserve(request.entries.size());
  std::size_t judge_calls = 0;
  for (const auto& entry : request.entries) {
    const auto texts = generation_->generate_n({.key = entry.id,
                                                .prompt = entry.question,
                                                .n = candidates_,
                                                .model_tag = request.ref_model_tag,
                                                .sampling = sampling_});
    std::vector<ToyOutput> outputs;
    for (std::size_t k = 0; k < texts.size(); ++k) {
      const auto b = engine_->score({.response = texts[k],
                                     .lang = entry.lang,
                                     .gold = entry.gold,
                                     .en_reference_think = entry.en_reference_think,
                                     .en_question = entry.question_en.empty() ? entry.question : entry.question_en});
      judge_calls += static_cast<std::size_t>(b.judge_calls);
      outputs.push_back({fmt::format("{}#{}", entry.id, k), b.overall});
    }
    vocabulary.push_back(std::move(outputs));
  }

  const ToyPolicy reference = ToyPolicy::uniform(vocabulary);
  ToyPolicy policy = reference;
  auto mean_expected = [&](const ToyPolicy& p) {
    if (p.questions() == 0) return 0.0;
    double total = 0.0;
    for (std::size_t q = 0; q < p.questions(); ++q) total += p.expected_reward(q);
    return total / static_cast<double>(p.questions());
  };

  json steps = json::array();
  const double initial = mean_expected(policy);
  for (std::size_t step = 1; step <= steps_; ++step) {
    std::vector<ToyGroup> groups;
    groups.reserve(policy.questions());
    for (std::size_t q = 0; q < policy.questions(); ++q) {
      std::vector<std::size_t> all(policy.logits[q].size());
      for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
      groups.push_back(make_toy_group(policy, reference, q, std::move(all), grpo_));
    }
    ToyPolicy next = toy_train_step(policy, groups, grpo_, learning_rate_);
    const double objective = toy_objective(next, groups, grpo_);
    policy = std::move(next);
    const double expected = mean_expected(policy);
    spdlog::debug("iteration {} step {}: objective {:.6f} expected reward {:.6f}", request.iteration, step, objective,
                  expected);
    steps.push_back({{"step", step}, {"objective", objective}, {"expected_reward", expected}});
  }

  TrainResult result;
  result.model_tag = request.out_model_tag;
  result.report = json{{"trainer", "toy"},
                       {"iteration", request.iteration},
                       {"ref_model_tag", request.ref_model_tag},
                       {"out_model_tag", request.out_model_tag},
                       {"questions", policy.questions()},
                       {"judge_calls", judge_calls},
                       {"learning_rate", learning_rate_},
                       {"initial_expected_reward", initial},
                       {"final_expected_reward", mean_expected(policy)},
                       {"steps", steps}};
  return result;
}

std::string ExternalCommandTrainer::render(const TrainRequest& request) const {
  const std::pair<std::string, std::string> subs[] = {
      {"{dataset}", shell_quote(request.dataset_path.string())},
      {"{ref_model}", shell_quote(request.ref_model_tag)},
      {"{out_model}", shell_quote(request.out_model_tag)},
      {"{iteration}", std::to_string(request.iteration)},
      {"{output_dir}", shell_quote(request.output_dir.string())},
  };
  std::string out;
  for (std::size_t i = 0; i < template_.size();) {
    bool matched = false;
    for (const auto& [key, value] : subs) {
      if (template_.compare(i, key.size(), key) == 0) {
        out += value;
        i += key.size();
        matched = true;
        break;
      }
    }
    if (!matched) out += template_[i++];
  }
  return out;
}

TrainResult ExternalCommandTrainer::train(const TrainRequest& request) {
  const auto command = render(request);
  spdlog::info("iteration {}: running trainer command", request.iteration);
  const int status = std::system(command.c_str());
  if (status != 0) {
    throw Error(Errc::trainer_failure, fmt::format("trainer command exited with status {}", status));
  }
  TrainResult result;
  result.model_tag = request.out_model_tag;
  result.report = json{{"trainer", "external"},
                       {"iteration", request.iteration},
                       {"ref_model_tag", request.ref_model_tag},
                       {"out_model_tag", request.out_model_tag},
                       {"command", command},
                       {"exit_status", status}};
  return result;
}

IterationState run_iteration(const IterationState& state, const PipelineConfig& config, PipelineContext& context) {
  if (context.generation == nullptr || context.detector == nullptr || context.trainer == nullptr) {
    throw Error(Errc::invalid_argument, "pipeline context is incomplete");
  }
  const auto hash = config_hash(config);
  const auto dir = config.paths.output_dir / fmt::format("iter-{}", state.iteration);
  std::filesystem::create_directories(dir);

  spdlog::info("iteration {}: forging with reference model {}", state.iteration, state.ref_model_tag);
  const RewardEngine judgeless(*context.detector);
  const ForgeContext forge_context{.seed = config.seed,
                                   .iteration = state.iteration,
                                   .model_tag = state.ref_model_tag,
                                   .config_hash = hash,
                                   .english_cache = config.forge.cache_english ? context.english_cache : nullptr};
  auto forged = forge_dataset(context.questions, *context.generation, judgeless, config.forge, forge_context);
  const auto dataset_path = dir / "dataset.jsonl";
  write_dataset(dataset_path, forged.entries);
  write_json(dir / "forge_report.json", forged.report);
  spdlog::info("iteration {}: {} of {} questions kept", state.iteration, forged.report.entries, forged.report.inputs);
  if (forged.entries.empty()) {
    throw Error(Errc::forge_empty, fmt::format("iteration {}: no entries survived rejection sampling", state.iteration));
  }

  const auto out_tag = model_tag_for(config.initial_model_tag, state.iteration);
  TrainResult trained;
  try {
    trained = context.trainer->train({.iteration = state.iteration,
                                      .ref_model_tag = state.ref_model_tag,
                                      .out_model_tag = out_tag,
                                      .dataset_path = dataset_path,
                                      .output_dir = dir,
                                      .entries = forged.entries});
  } catch (const Error& e) {
    if (e.code() == Errc::trainer_failure) throw;
    throw Error(Errc::trainer_failure, fmt::format("iteration {}: {}", state.iteration, e.what()));
  } catch (const std::exception& e) {
    throw Error(Errc::trainer_failure, fmt::format("iteration {}: {}", state.iteration, e.what()));
  }
  trained.report["seed"] = config.seed;
  trained.report["config_hash"] = hash;
  write_json(dir / "train_report.json", trained.report);

  IterationState next;
  next.iteration = state.iteration + 1;
  next.ref_model_tag = trained.model_tag;
  next.dataset_path = dataset_path;
  next.forge_report = std::move(forged.report);
  return next;
}

std::vector<IterationState> run_pipeline(const PipelineConfig& config, PipelineContext& context) {
  config.validate();
  std::filesystem::create_directories(config.paths.output_dir);
  std::vector<IterationState> finished;
  IterationState state{.iteration = 1, .ref_model_tag = config.initial_model_tag, .dataset_path = {}, .forge_report = {}};
  json iterations = json::array();
  for (std::size_t i = 1; i <= config.iterations; ++i) {
    const std::string ref = state.ref_model_tag;
    state = run_iteration(state, config, context);
    iterations.push_back({{"iteration", i},
                          {"ref_model_tag", ref},
                          {"out_model_tag", state.ref_model_tag},
                          {"dataset", fmt::format("iter-{}/dataset.jsonl", i)},
                          {"entries", state.forge_report->entries}});
    finished.push_back(state);
  }
  write_json(config.paths.output_dir / "summary.json", json{{"seed", config.seed},
                                                             {"config_hash", config_hash(config)},
                                                             {"iterations", iterations},
                                                             {"final_model_tag", state.ref_model_tag}});
  return finished;
}

}  // namespace mthinker
