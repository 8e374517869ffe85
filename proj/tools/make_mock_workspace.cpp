// Writes a scripted workspace (questions, mock generation and judge scripts,
// config) for running the CLI without model endpoints.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "support/synth.hpp"

using namespace mthinker;

int main(int argc, char** argv) {
  CLI::App app{"Create a mock workspace for the mthinker CLI"};
  std::string out;
  std::size_t per_language = 50;
  std::size_t iterations = 2;
  std::uint64_t seed = 1;
  app.add_option("--out", out, "Workspace directory")->required();
  app.add_option("--per-language", per_language, "Questions per target language");
  app.add_option("--iterations", iterations, "Iterations to script model tags for");
  app.add_option("--seed", seed, "Scenario seed");
  CLI11_PARSE(app, argc, argv);

  synth::ScenarioOptions options;
  options.languages = {Language::ja, Language::ko, Language::fr, Language::pt, Language::th,
                       Language::es, Language::ar, Language::vi, Language::zh};
  options.per_language = per_language;
  options.seed = seed;
  options.model_tags.clear();
  for (std::size_t i = 0; i < iterations; ++i) options.model_tags.push_back("model-" + std::to_string(i));

  const auto scenario = synth::make_scenario(synth::load_sentence_pools(), options);
  const std::filesystem::path dir(out);
  synth::write_workspace(scenario, dir);
  std::ofstream(dir / "config.json") << nlohmann::json{{"seed", seed},
                                                        {"iterations", iterations},
                                                        {"paths", {{"questions", "questions.jsonl"}, {"output_dir", "runs"}}}}
                                            .dump(2)
                                     << '\n';
  std::cout << scenario.questions.size() << " questions written to " << dir.string() << '\n';
  return 0;
}
