#pragma once

// Brute-force expectation of a forge run, computed from the scenario's
// candidate kinds without parsing or scoring any text.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "support/synth.hpp"

namespace mthinker::synth {

struct ExpectedForge {
  std::vector<std::string> lines;                   // dataset lines, input order
  std::vector<std::optional<SkipReason>> outcomes;  // per input question
  std::map<SkipReason, std::size_t> skipped;
};

ExpectedForge oracle_forge(const Scenario& scenario, const std::string& model_tag, std::uint64_t seed,
                           std::size_t iteration, std::size_t per_language_cap);

}  // namespace mthinker::synth
