// Command-line entry points for scoring, data construction, training loops
// and evaluation.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "mthinker/backend.hpp"
#include "mthinker/error.hpp"
#include "mthinker/eval.hpp"
#include "mthinker/forge.hpp"
#include "mthinker/kernels.hpp"
#include "mthinker/langid.hpp"
#include "mthinker/pipeline.hpp"
#include "mthinker/service.hpp"

namespace {

using namespace mthinker;
using nlohmann::json;

struct Globals {
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string config_path;
  std::string mock_dir;
  std::string log_level = "warn";
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, fmt::format("cannot read {}", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, fmt::format("cannot write {}", path.string()));
  out << text;
}

Language language_arg(const std::string& text) {
  const auto lang = parse_language(text);
  if (!lang) throw Error(Errc::invalid_argument, fmt::format("unknown language code '{}'", text));
  return *lang;
}

/// Everything a subcommand may need, built lazily from the shared flags.
class Runtime {
 public:
  explicit Runtime(const Globals& g) : globals_(g) {
    if (!g.config_path.empty()) config_ = load_pipeline_config(g.config_path);
    if (g.seed_set) config_.seed = g.seed;
  }

  PipelineConfig& config() { return config_; }

  const LanguageDetector& detector() {
    if (!config_.profile_dir && options_are_default()) return default_detector();
    if (!detector_) {
      const auto dir = config_.profile_dir.value_or(default_profile_dir());
      detector_ = std::make_unique<LanguageDetector>(NgramProfiles::load_directory(dir), config_.langid);
    }
    return *detector_;
  }

  GenerationBackend& generation() {
    if (!generation_) {
      if (!globals_.mock_dir.empty()) {
        generation_ = std::make_unique<MockGenerationBackend>(
            MockScript::load_jsonl(std::filesystem::path(globals_.mock_dir) / "generation.jsonl"), config_.generation);
      } else {
        generation_ = std::make_unique<OpenAiChatClient>(config_.generation);
      }
    }
    return *generation_;
  }

  /// Null when the judge is disabled.
  JudgeBackend* judge(bool disabled) {
    if (disabled || !config_.judge_enabled) return nullptr;
    if (!judge_) {
      if (!globals_.mock_dir.empty()) {
        judge_ = std::make_unique<MockJudgeBackend>(
            MockJudgeBackend::load_rules(std::filesystem::path(globals_.mock_dir) / "judge.jsonl"),
            config_.judge.max_in_flight);
      } else {
        judge_ = std::make_unique<OpenAiChatClient>(config_.judge);
      }
    }
    return judge_.get();
  }

 private:
  bool options_are_default() const {
    const DetectorOptions d;
    const auto& o = config_.langid;
    return o.min_share == d.min_share && o.min_linguistic_chars == d.min_linguistic_chars &&
           o.min_segment_letters == d.min_segment_letters && o.vi_letter_bonus == d.vi_letter_bonus;
  }

  Globals globals_;
  PipelineConfig config_;
  std::unique_ptr<LanguageDetector> detector_;
  std::unique_ptr<GenerationBackend> generation_;
  std::unique_ptr<JudgeBackend> judge_;
};

json detection_json(const DetectionResult& r) {
  json langs = json::array();
  for (const auto& s : r.languages) langs.push_back({{"lang", code(s.language)}, {"share", s.share}});
  return json{{"languages", langs}, {"total_linguistic_chars", r.total_linguistic_chars}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multilingual reasoning RL toolkit: rewards, GRPO, data forging and evaluation"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Random seed (overrides the config)")->each([&](const std::string&) { g.seed_set = true; });
  app.add_option("--config", g.config_path, "Pipeline configuration (JSON)")->check(CLI::ExistingFile);
  app.add_option("--mock", g.mock_dir, "Directory with generation.jsonl and judge.jsonl scripts")->check(CLI::ExistingDirectory);
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error or off");

  // detect
  auto* detect = app.add_subcommand("detect", "Detect the languages of a text");
  std::string detect_text, detect_file, detect_lang;
  detect->add_option("--text", detect_text, "Text to analyse");
  detect->add_option("--file", detect_file, "File to analyse")->check(CLI::ExistingFile);
  detect->add_option("--lang", detect_lang, "Also report consistency with this language");

  // score
  auto* score = app.add_subcommand("score", "Score one response with the composite reward");
  std::string score_lang, score_gold, response_file, reference_file, question, question_en;
  bool no_judge = false;
  score->add_option("--lang", score_lang, "Language code of the question")->required();
  score->add_option("--gold", score_gold, "Gold answer")->required();
  score->add_option("--response-file", response_file, "Raw model response")->required()->check(CLI::ExistingFile);
  score->add_option("--reference-file", reference_file, "English reference thinking")->check(CLI::ExistingFile);
  score->add_option("--question", question, "Question text");
  score->add_option("--question-en", question_en, "English question given to the judge");
  score->add_flag("--no-judge", no_judge, "Never call the judge");

  // advantages
  auto* adv = app.add_subcommand("advantages", "Group-relative advantages for reward groups");
  std::string adv_in, adv_rewards;
  adv->add_option("--in", adv_in, "JSON lines, each an array of rewards")->check(CLI::ExistingFile);
  adv->add_option("--rewards", adv_rewards, "Comma-separated rewards of one group");

  // forge
  auto* forge = app.add_subcommand("forge", "Build one iteration's RL dataset by rejection sampling");
  std::string forge_questions, forge_out, forge_tag;
  std::size_t forge_iteration = 1;
  forge->add_option("--questions", forge_questions, "Question pairs (JSON lines)");
  forge->add_option("--out", forge_out, "Output directory");
  forge->add_option("--iteration", forge_iteration, "Iteration index");
  forge->add_option("--model-tag", forge_tag, "Reference model tag");

  // iterate
  auto* iterate = app.add_subcommand("iterate", "Run the iterative training loop");
  std::string iterate_out;
  iterate->add_option("--out", iterate_out, "Output directory (overrides the config)");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate responses and write a metric report");
  std::string eval_in, eval_out, eval_items;
  std::size_t eval_runs = 0;
  eval->add_option("--in", eval_in, "Records {id, lang, subset, level?, run?, gold, response}")->required()->check(CLI::ExistingFile);
  eval->add_option("--out", eval_out, "Metric report (JSON)")->required();
  eval->add_option("--items", eval_items, "Per-item audit records (JSON lines)");
  eval->add_option("--runs", eval_runs, "Number of runs (default: max run index + 1)");

  // serve
  auto* serve = app.add_subcommand("serve", "Serve POST /v1/score and GET /healthz");
  ServiceOptions service_options;
  bool serve_no_judge = false;
  serve->add_option("--host", service_options.host, "Bind address");
  serve->add_option("--port", service_options.port, "Port");
  serve->add_flag("--no-judge", serve_no_judge, "Never call the judge");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_default_logger(spdlog::stderr_color_mt("mthinker"));
  spdlog::set_level(spdlog::level::from_str(g.log_level));

  try {
    Runtime rt(g);

    if (*detect) {
      if (detect_text.empty() == detect_file.empty()) throw Error(Errc::invalid_argument, "give exactly one of --text or --file");
      const std::string text = detect_file.empty() ? detect_text : read_file(detect_file);
      json out = detection_json(rt.detector().detect(text));
      if (!detect_lang.empty()) out["consistent"] = rt.detector().is_consistent(text, language_arg(detect_lang));
      std::cout << out.dump(2) << '\n';
    } else if (*score) {
      ScoreRequest request;
      request.lang = language_arg(score_lang);
      request.gold = score_gold;
      request.response = read_file(response_file);
      request.question = question;
      request.question_en = question_en;
      if (!reference_file.empty()) request.en_reference_think = read_file(reference_file);
      const RewardEngine engine(rt.detector(), rt.judge(no_judge));
      std::cout << score_request(request, engine).dump(2) << '\n';
    } else if (*adv) {
      if (adv_in.empty() == adv_rewards.empty()) throw Error(Errc::invalid_argument, "give exactly one of --in or --rewards");
      std::vector<std::vector<double>> groups;
      if (!adv_rewards.empty()) {
        std::vector<double> group;
        std::stringstream ss(adv_rewards);
        for (std::string item; std::getline(ss, item, ',');) group.push_back(std::stod(item));
        groups.push_back(std::move(group));
      } else {
        std::ifstream in(adv_in);
        for (std::string line; std::getline(in, line);) {
          if (line.find_first_not_of(" \t\r") != std::string::npos) groups.push_back(json::parse(line).get<std::vector<double>>());
        }
      }
      for (const auto& a : parallel::advantages_batch(groups, rt.config().grpo)) std::cout << json(a).dump() << '\n';
    } else if (*forge) {
      auto& config = rt.config();
      if (!forge_questions.empty()) config.paths.questions = forge_questions;
      if (!forge_out.empty()) config.paths.output_dir = forge_out;
      if (config.paths.questions.empty() || config.paths.output_dir.empty()) {
        throw Error(Errc::invalid_argument, "forge needs questions and an output directory");
      }
      const auto pairs = read_questions(config.paths.questions);
      const RewardEngine judgeless(rt.detector());
      const ForgeContext context{.seed = config.seed,
                                 .iteration = forge_iteration,
                                 .model_tag = forge_tag.empty() ? config.initial_model_tag : forge_tag,
                                 .config_hash = config_hash(config),
                                 .english_cache = nullptr};
      const auto result = forge_dataset(pairs, rt.generation(), judgeless, config.forge, context);
      std::filesystem::create_directories(config.paths.output_dir);
      write_dataset(config.paths.output_dir / "dataset.jsonl", result.entries);
      write_text(config.paths.output_dir / "forge_report.json", json(result.report).dump(2) + "\n");
      std::cout << fmt::format("{} of {} questions kept\n", result.report.entries, result.report.inputs);
    } else if (*iterate) {
      auto& config = rt.config();
      if (!iterate_out.empty()) config.paths.output_dir = iterate_out;
      config.validate();
      PipelineContext context;
      context.generation = &rt.generation();
      context.detector = &rt.detector();
      context.questions = read_questions(config.paths.questions);
      EnglishCache cache;
      context.english_cache = &cache;
      const RewardEngine full(rt.detector(), rt.judge(false));
      std::unique_ptr<Trainer> trainer;
      if (config.trainer.kind == "toy") {
        trainer = std::make_unique<ToyGrpoTrainer>(rt.generation(), full, config.grpo, config.forge.candidates,
                                                   config.forge.sampling, config.trainer.steps,
                                                   config.trainer.learning_rate);
      } else {
        trainer = std::make_unique<ExternalCommandTrainer>(config.trainer.command);
      }
      context.trainer = trainer.get();
      const auto states = run_pipeline(config, context);
      std::cout << fmt::format("{} iterations written to {}; final model {}\n", states.size(),
                               config.paths.output_dir.string(), states.back().ref_model_tag);
    } else if (*eval) {
      std::vector<EvalItem> items;
      std::ifstream in(eval_in);
      for (std::string line; std::getline(in, line);) {
        if (line.find_first_not_of(" \t\r") != std::string::npos) items.push_back(json::parse(line).get<EvalItem>());
      }
      const auto records = parallel::eval_batch(items, rt.detector());
      std::size_t runs = eval_runs;
      if (runs == 0) {
        for (const auto& r : records) runs = std::max(runs, r.run + 1);
        runs = std::max<std::size_t>(runs, 1);
      }
      const auto report = macro_metrics(records, runs);
      write_text(eval_out, json(report).dump(2) + "\n");
      if (!eval_items.empty()) {
        std::string lines;
        for (const auto& r : records) lines += json(r).dump() + "\n";
        write_text(eval_items, lines);
      }
      std::cout << fmt::format("{} records, {} languages, {} run(s)\n", records.size(), report.languages.size(), runs);
    } else if (*serve) {
      const RewardEngine engine(rt.detector(), rt.judge(serve_no_judge));
      serve_scores(engine, service_options);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
