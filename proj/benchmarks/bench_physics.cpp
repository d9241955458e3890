#include <benchmark/benchmark.h>

#include "competevo/physics.hpp"
#include "competevo/rng.hpp"

using namespace competevo;

namespace {

const morph::Species kSpider = morph::species_template(morph::SpeciesName::spider);
const morph::Species kAnt = morph::species_template(morph::SpeciesName::ant);

arena::ArenaState make_state(const morph::Species& sp, bool touching) {
  arena::ArenaState s = arena::reset(arena::TaskKind::sumo, morph::identity_morph(sp),
                                     morph::identity_morph(sp), 1, {}, {}, false);
  if (touching) {
    s.agents[0].position = {-0.3, 0.0};
    s.agents[1].position = {0.3, 0.0};
    s.agents[0].velocity = {1.0, 0.0};
    s.agents[1].velocity = {-1.0, 0.0};
  }
  return s;
}

void BM_StepFree(benchmark::State& state) {
  arena::ArenaState s = make_state(kSpider, false);
  std::vector<double> a(kSpider.leg_count, 0.4);
  for (auto _ : state) {
    auto [next, outcome] = arena::step(s, a, a);
    benchmark::DoNotOptimize(next.agents[0].position.x);
  }
}
BENCHMARK(BM_StepFree);

void BM_StepContact(benchmark::State& state) {
  arena::ArenaState s = make_state(kAnt, true);
  std::vector<double> a(kAnt.leg_count, 0.4);
  for (auto _ : state) {
    auto [next, outcome] = arena::step(s, a, a);
    benchmark::DoNotOptimize(outcome.dense_rewards[0]);
  }
}
BENCHMARK(BM_StepContact);

void BM_Observe(benchmark::State& state) {
  arena::ArenaState s = make_state(kSpider, false);
  for (auto _ : state) {
    auto obs = arena::observe(s, 0);
    benchmark::DoNotOptimize(obs.data());
  }
}
BENCHMARK(BM_Observe);

void BM_Reset(benchmark::State& state) {
  const morph::MorphVector id = morph::identity_morph(kSpider);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    arena::ArenaState s = arena::reset(arena::TaskKind::run_to_goal, id, id, seed++);
    benchmark::DoNotOptimize(s.bodies[0].total_mass);
  }
}
BENCHMARK(BM_Reset);

}  // namespace

BENCHMARK_MAIN();
