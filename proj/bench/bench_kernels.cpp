// Serial vs OpenMP timings for the batch kernels on synthetic inputs.

#include <omp.h>

#include <chrono>
#include <functional>
#include <iostream>

#include <fmt/format.h>

#include "mthinker/kernels.hpp"
#include "support/synth.hpp"

using namespace mthinker;

namespace {

double best_of(int repeats, const std::function<void()>& body) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto start = std::chrono::steady_clock::now();
    body();
    best = std::min(best, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
  }
  return best;
}

void report(const std::string& name, std::size_t n, double serial_ms, double parallel_ms) {
  std::cout << fmt::format("{:<12} n={:<7} serial {:9.2f} ms   parallel {:9.2f} ms   speedup {:5.2f}x\n", name, n,
                           serial_ms, parallel_ms, serial_ms / parallel_ms);
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t scale = argc > 1 ? std::stoul(argv[1]) : 1;
  std::cout << fmt::format("OpenMP threads: {}\n", omp_get_max_threads());
  const auto pools = synth::load_sentence_pools();

  const auto groups = synth::make_reward_groups(200000 * scale, 8, 1);
  const GrpoConfig cfg;
  report("advantages", groups.size(), best_of(3, [&] { (void)serial::advantages_batch(groups, cfg); }),
         best_of(3, [&] { (void)parallel::advantages_batch(groups, cfg); }));

  const auto batch = synth::make_rollout_batch(pools, 4000 * scale, 2);
  MockJudgeBackend judge(synth::judge_rules(), 64);
  const RewardEngine engine(default_detector(), &judge);
  report("score", batch.inputs.size(), best_of(3, [&] { (void)serial::score_batch(engine, batch.inputs); }),
         best_of(3, [&] { (void)parallel::score_batch(engine, batch.inputs); }));
  report("eval", batch.items.size(), best_of(3, [&] { (void)serial::eval_batch(batch.items, default_detector()); }),
         best_of(3, [&] { (void)parallel::eval_batch(batch.items, default_detector()); }));
  return 0;
}
