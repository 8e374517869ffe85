#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mthinker/kernels.hpp"
#include "support/check.hpp"
#include "support/synth.hpp"

using namespace mthinker;
using mthinker::testing::error_code;

namespace {

const synth::SentencePools& pools() {
  static const auto p = synth::load_sentence_pools();
  return p;
}

}  // namespace

TEST_CASE("advantages: parallel equals serial") {
  const auto groups = synth::make_reward_groups(5000, 8, 1);
  const GrpoConfig cfg;
  CHECK(parallel::advantages_batch(groups, cfg) == serial::advantages_batch(groups, cfg));

  auto bad = groups;
  bad[4321] = {1.0};
  CHECK(error_code([&] { (void)parallel::advantages_batch(bad, cfg); }) == Errc::group_too_small);
}

TEST_CASE("scores: parallel equals serial") {
  const auto batch = synth::make_rollout_batch(pools(), 600, 2);
  MockJudgeBackend judge(synth::judge_rules());
  const RewardEngine engine(default_detector(), &judge);
  const auto a = serial::score_batch(engine, batch.inputs);
  const auto b = parallel::score_batch(engine, batch.inputs);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(nlohmann::json(a[i]) == nlohmann::json(b[i]));
}

TEST_CASE("eval records: parallel equals serial") {
  const auto batch = synth::make_rollout_batch(pools(), 600, 3);
  const auto a = serial::eval_batch(batch.items, default_detector());
  const auto b = parallel::eval_batch(batch.items, default_detector());
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(nlohmann::json(a[i]) == nlohmann::json(b[i]));
  CHECK(nlohmann::json(macro_metrics(a, 1)) == nlohmann::json(macro_metrics(b, 1)));
}

TEST_CASE("a failing judge inside the parallel scorer propagates") {
  class DownJudge : public JudgeBackend {
   public:
    std::string judge(const std::string&) override { throw BackendError(Errc::backend_failure, "refused"); }
  } down;
  const auto batch = synth::make_rollout_batch(pools(), 200, 4);
  const RewardEngine engine(default_detector(), &down);
  CHECK(error_code([&] { (void)parallel::score_batch(engine, batch.inputs); }) == Errc::judge_unreachable);
}
