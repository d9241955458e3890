#include <benchmark/benchmark.h>

#include "competevo/ppo.hpp"
#include "competevo/rng.hpp"

using namespace competevo;

namespace {

const morph::Species kAnt = morph::species_template(morph::SpeciesName::ant);

std::vector<double> random_obs(const policy::PolicyParams& p, Rng& rng) {
  std::vector<double> obs(p.obs_scale.size());
  for (double& v : obs) v = rng.uniform(-3.0, 3.0);
  return obs;
}

void BM_TacticsForward(benchmark::State& state) {
  policy::PolicyParams p = policy::init_policy(kAnt, arena::TaskKind::sumo, 1);
  Rng rng(2);
  std::vector<double> obs = random_obs(p, rng);
  for (auto _ : state) {
    policy::GaussianDist d = policy::tactics_dist(p, obs);
    benchmark::DoNotOptimize(d.mean.data());
  }
}
BENCHMARK(BM_TacticsForward);

void BM_ValueForward(benchmark::State& state) {
  policy::PolicyParams p = policy::init_policy(kAnt, arena::TaskKind::sumo, 1);
  Rng rng(3);
  std::vector<double> obs = random_obs(p, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(policy::value(p, obs));
  }
}
BENCHMARK(BM_ValueForward);

// One PPO minibatch gradient pass over n on-policy transitions.
void BM_PpoLossGrad(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  policy::PolicyParams p = policy::init_policy(kAnt, arena::TaskKind::sumo, 4);
  Rng rng(5);
  std::vector<ppo::Transition> transitions(n);
  std::vector<ppo::Sample> samples;
  for (int i = 0; i < n; ++i) {
    ppo::Transition& tr = transitions[i];
    tr.observation = random_obs(p, rng);
    policy::GaussianDist d = policy::tactics_dist(p, tr.observation);
    tr.action = policy::sample(d, rng);
    tr.log_prob_behavior = policy::log_prob(d, tr.action);
    samples.push_back(ppo::Sample{&tr, rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
  }
  ppo::PpoConfig cfg;
  policy::Gradient grad(p);
  for (auto _ : state) {
    std::fill(grad.flat.begin(), grad.flat.end(), 0.0);
    ppo::LossTerms terms = ppo::ppo_loss_grad(p, samples, cfg, grad);
    benchmark::DoNotOptimize(terms.total);
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_PpoLossGrad)->Arg(64)->Arg(512);

}  // namespace

BENCHMARK_MAIN();
