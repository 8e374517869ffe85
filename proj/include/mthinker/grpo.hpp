#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace mthinker {

struct GrpoConfig {
  std::size_t group_size = 8;
  double clip_epsilon = 0.2;
  double kl_beta = 0.0;
  double std_floor = 1e-6;

  void validate() const;
};

void to_json(nlohmann::json& j, const GrpoConfig& c);
void from_json(const nlohmann::json& j, GrpoConfig& c);

/// N rollouts of one question. Log-probabilities are per output (sequence
/// level), not per token.
struct RolloutGroup {
  std::vector<double> rewards;
  std::optional<std::vector<double>> advantages;
  std::vector<double> old_logprobs;
  std::vector<double> new_logprobs;
  std::vector<double> ref_logprobs;

  std::size_t size() const { return rewards.size(); }
};

/// (r_i - mean) / max(std, floor) with the population std; all zeros when
/// the std falls below the floor. Throws Error(group_too_small) for N < 2.
std::vector<double> group_advantages(std::span<const double> rewards, const GrpoConfig& config);

/// r - log r - 1 with r = exp(ref - new); never negative.
double kl_estimate(double new_logprob, double ref_logprob);

/// min(ratio * A, clip(ratio, 1 - eps, 1 + eps) * A)
double clipped_surrogate(double ratio, double advantage, double clip_epsilon);

/// Mean over the group of the clipped surrogate minus beta * KL.
double grpo_objective(const RolloutGroup& group, const GrpoConfig& config);

/// d objective / d new_logprob_i. At clip kinks the unclipped branch is used.
std::vector<double> grpo_objective_logprob_gradient(const RolloutGroup& group, const GrpoConfig& config);

// ---------------------------------------------------------------------------
// Toy categorical policy

struct ToyOutput {
  std::string label;
  double reward = 0.0;
};

/// One softmax distribution per question over a small vocabulary of outputs.
struct ToyPolicy {
  std::vector<std::vector<double>> logits;
  std::vector<std::vector<ToyOutput>> vocabulary;

  static ToyPolicy uniform(std::vector<std::vector<ToyOutput>> vocabulary);

  std::size_t questions() const { return logits.size(); }
  std::vector<double> probabilities(std::size_t question) const;
  std::vector<double> log_probabilities(std::size_t question) const;
  /// Sum over outputs of probability * reward.
  double expected_reward(std::size_t question) const;
};

void to_json(nlohmann::json& j, const ToyPolicy& p);

/// A rollout group drawn from one toy question; `outputs[i]` indexes the
/// question's vocabulary. `rollout.new_logprobs` is recomputed from the
/// policy under evaluation.
struct ToyGroup {
  std::size_t question = 0;
  std::vector<std::size_t> outputs;
  RolloutGroup rollout;
};

/// Builds a group whose old log-probs come from `policy`, reference
/// log-probs from `reference` and advantages from the outputs' rewards.
ToyGroup make_toy_group(const ToyPolicy& policy, const ToyPolicy& reference, std::size_t question,
                        std::vector<std::size_t> outputs, const GrpoConfig& config);

/// Mean of the per-group objectives with new log-probs taken from `policy`.
double toy_objective(const ToyPolicy& policy, std::span<const ToyGroup> groups, const GrpoConfig& config);

/// Analytic gradient of toy_objective with respect to every logit.
std::vector<std::vector<double>> toy_objective_gradient(const ToyPolicy& policy, std::span<const ToyGroup> groups,
                                                        const GrpoConfig& config);

/// One gradient-ascent step of size `lr` on toy_objective.
ToyPolicy toy_train_step(const ToyPolicy& policy, std::span<const ToyGroup> groups, const GrpoConfig& config,
                         double lr);

}  // namespace mthinker
