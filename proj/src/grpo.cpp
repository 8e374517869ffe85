#include "mthinker/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "mthinker/error.hpp"

namespace mthinker {

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw Error(Errc::non_finite, fmt::format("{} is not finite", what));
}

void check_group(const RolloutGroup& group) {
  const std::size_t n = group.size();
  if (n == 0) throw Error(Errc::group_too_small, "empty rollout group");
  if (!group.advantages) throw Error(Errc::unset_advantages, "advantages have not been computed");
  if (group.advantages->size() != n || group.old_logprobs.size() != n || group.new_logprobs.size() != n ||
      group.ref_logprobs.size() != n) {
    throw Error(Errc::invalid_argument, "rollout group sequences differ in length");
  }
}

double log_sum_exp(std::span<const double> xs) {
  const double hi = *std::max_element(xs.begin(), xs.end());
  double sum = 0.0;
  for (double x : xs) sum += std::exp(x - hi);
  return hi + std::log(sum);
}

}  // namespace

void GrpoConfig::validate() const {
  if (group_size < 2) throw Error(Errc::invalid_argument, "group_size must be >= 2");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) throw Error(Errc::invalid_argument, "clip_epsilon must be in (0, 1)");
  if (!(kl_beta >= 0.0)) throw Error(Errc::invalid_argument, "kl_beta must be >= 0");
  if (!(std_floor > 0.0)) throw Error(Errc::invalid_argument, "std_floor must be > 0");
}

void to_json(nlohmann::json& j, const GrpoConfig& c) {
  j = nlohmann::json{{"group_size", c.group_size},
                     {"clip_epsilon", c.clip_epsilon},
                     {"kl_beta", c.kl_beta},
                     {"std_floor", c.std_floor}};
}

void from_json(const nlohmann::json& j, GrpoConfig& c) {
  c.group_size = j.value("group_size", c.group_size);
  c.clip_epsilon = j.value("clip_epsilon", c.clip_epsilon);
  c.kl_beta = j.value("kl_beta", c.kl_beta);
  c.std_floor = j.value("std_floor", c.std_floor);
  c.validate();
}

std::vector<double> group_advantages(std::span<const double> rewards, const GrpoConfig& config) {
  if (rewards.size() < 2) {
    throw Error(Errc::group_too_small, fmt::format("group of {} rewards; need at least 2", rewards.size()));
  }
  for (double r : rewards) require_finite(r, "reward");
  const auto n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double sq = 0.0;
  for (double r : rewards) sq += (r - mean) * (r - mean);
  const double spread = std::sqrt(sq / n);

  std::vector<double> out(rewards.size(), 0.0);
  if (spread < config.std_floor) return out;
  for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / spread;
  return out;
}

double kl_estimate(double new_logprob, double ref_logprob) {
  require_finite(new_logprob, "new_logprob");
  require_finite(ref_logprob, "ref_logprob");
  const double log_ratio = ref_logprob - new_logprob;
  // r - log r - 1 = expm1(x) - x; the series keeps small nonzero x positive.
  const double x = log_ratio;
  if (std::abs(x) < 1e-4) return x * x * (0.5 + x * (1.0 / 6.0 + x / 24.0));
  return std::max(0.0, std::expm1(x) - x);
}

double clipped_surrogate(double ratio, double advantage, double clip_epsilon) {
  const double clipped = std::clamp(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon);
  return std::min(ratio * advantage, clipped * advantage);
}

double grpo_objective(const RolloutGroup& group, const GrpoConfig& config) {
  check_group(group);
  const auto& adv = *group.advantages;
  double total = 0.0;
  for (std::size_t i = 0; i < group.size(); ++i) {
    require_finite(group.old_logprobs[i], "old_logprob");
    require_finite(group.new_logprobs[i], "new_logprob");
    require_finite(adv[i], "advantage");
    const double ratio = std::exp(group.new_logprobs[i] - group.old_logprobs[i]);
    total += clipped_surrogate(ratio, adv[i], config.clip_epsilon);
    if (config.kl_beta > 0.0) total -= config.kl_beta * kl_estimate(group.new_logprobs[i], group.ref_logprobs[i]);
  }
  return total / static_cast<double>(group.size());
}

std::vector<double> grpo_objective_logprob_gradient(const RolloutGroup& group, const GrpoConfig& config) {
  check_group(group);
  const auto& adv = *group.advantages;
  const auto n = static_cast<double>(group.size());
  std::vector<double> grad(group.size(), 0.0);
  for (std::size_t i = 0; i < group.size(); ++i) {
    const double ratio = std::exp(group.new_logprobs[i] - group.old_logprobs[i]);
    const double clipped = std::clamp(ratio, 1.0 - config.clip_epsilon, 1.0 + config.clip_epsilon);
    // d(ratio)/d(new_logprob) = ratio; the clipped branch is flat.
    double g = ratio * adv[i] <= clipped * adv[i] ? ratio * adv[i] : 0.0;
    if (config.kl_beta > 0.0) {
      // d/dx [e^{ref-x} - (ref-x) - 1] = 1 - e^{ref-x}
      g -= config.kl_beta * (1.0 - std::exp(group.ref_logprobs[i] - group.new_logprobs[i]));
    }
    grad[i] = g / n;
  }
  return grad;
}

ToyPolicy ToyPolicy::uniform(std::vector<std::vector<ToyOutput>> vocabulary) {
  ToyPolicy policy;
  policy.logits.reserve(vocabulary.size());
  for (const auto& v : vocabulary) policy.logits.emplace_back(v.size(), 0.0);
  policy.vocabulary = std::move(vocabulary);
  return policy;
}

std::vector<double> ToyPolicy::log_probabilities(std::size_t question) const {
  const auto& z = logits.at(question);
  const double lse = log_sum_exp(z);
  std::vector<double> out(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) out[k] = z[k] - lse;
  return out;
}

std::vector<double> ToyPolicy::probabilities(std::size_t question) const {
  auto p = log_probabilities(question);
  for (double& v : p) v = std::exp(v);
  return p;
}

double ToyPolicy::expected_reward(std::size_t question) const {
  const auto p = probabilities(question);
  const auto& vocab = vocabulary.at(question);
  double total = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) total += p[k] * vocab.at(k).reward;
  return total;
}

void to_json(nlohmann::json& j, const ToyPolicy& p) {
  j = nlohmann::json::array();
  for (std::size_t q = 0; q < p.questions(); ++q) {
    nlohmann::json outputs = nlohmann::json::array();
    for (std::size_t k = 0; k < p.logits[q].size(); ++k) {
      outputs.push_back({{"label", p.vocabulary[q][k].label},
                         {"reward", p.vocabulary[q][k].reward},
                         {"logit", p.logits[q][k]}});
    }
    j.push_back({{"question", q}, {"outputs", outputs}});
  }
}

ToyGroup make_toy_group(const ToyPolicy& policy, const ToyPolicy& reference, std::size_t question,
                        std::vector<std::size_t> outputs, const GrpoConfig& config) {
  ToyGroup group;
  group.question = question;
  const auto old_lp = policy.log_probabilities(question);
  const auto ref_lp = reference.log_probabilities(question);
  const auto& vocab = policy.vocabulary.at(question);
  for (std::size_t k : outputs) {
    group.rollout.rewards.push_back(vocab.at(k).reward);
    group.rollout.old_logprobs.push_back(old_lp.at(k));
    group.rollout.ref_logprobs.push_back(ref_lp.at(k));
  }
  group.rollout.new_logprobs = group.rollout.old_logprobs;
  group.rollout.advantages = group_advantages(group.rollout.rewards, config);
  group.outputs = std::move(outputs);
  return group;
}

namespace {

RolloutGroup with_policy_logprobs(const ToyPolicy& policy, const ToyGroup& group) {
  RolloutGroup rollout = group.rollout;
  const auto lp = policy.log_probabilities(group.question);
  rollout.new_logprobs.resize(group.outputs.size());
  for (std::size_t i = 0; i < group.outputs.size(); ++i) rollout.new_logprobs[i] = lp.at(group.outputs[i]);
  return rollout;
}

}  // namespace

double toy_objective(const ToyPolicy& policy, std::span<const ToyGroup> groups, const GrpoConfig& config) {
  if (groups.empty()) return 0.0;
  double total = 0.0;
  for (const auto& g : groups) total += grpo_objective(with_policy_logprobs(policy, g), config);
  return total / static_cast<double>(groups.size());
}

std::vector<std::vector<double>> toy_objective_gradient(const ToyPolicy& policy, std::span<const ToyGroup> groups,
                                                        const GrpoConfig& config) {
  std::vector<std::vector<double>> grad;
  grad.reserve(policy.questions());
  for (const auto& z : policy.logits) grad.emplace_back(z.size(), 0.0);
  if (groups.empty()) return grad;
  const double scale = 1.0 / static_cast<double>(groups.size());
  for (const auto& g : groups) {
    const auto dlp = grpo_objective_logprob_gradient(with_policy_logprobs(policy, g), config);
    const auto p = policy.probabilities(g.question);
    auto& out = grad[g.question];
    // d log p(o) / d z_k = [k == o] - p_k
    for (std::size_t i = 0; i < g.outputs.size(); ++i) {
      const double w = scale * dlp[i];
      if (w == 0.0) continue;
      out[g.outputs[i]] += w;
      for (std::size_t k = 0; k < out.size(); ++k) out[k] -= w * p[k];
    }
  }
  return grad;
}

ToyPolicy toy_train_step(const ToyPolicy& policy, std::span<const ToyGroup> groups, const GrpoConfig& config,
                         double lr) {
  if (!(lr >= 0.0)) throw Error(Errc::invalid_argument, "learning rate must be >= 0");
  ToyPolicy next = policy;
  if (lr == 0.0) return next;
  const auto grad = toy_objective_gradient(policy, groups, config);
  for (std::size_t q = 0; q < next.logits.size(); ++q) {
    for (std::size_t k = 0; k < next.logits[q].size(); ++k) next.logits[q][k] += lr * grad[q][k];
  }
  return next;
}

}  // namespace mthinker
