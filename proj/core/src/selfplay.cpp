#include "competevo/selfplay.hpp"

#include <algorithm>
#include <cmath>

#include "competevo/errors.hpp"

namespace competevo::selfplay {

void PolicyPool::append(policy::PolicyParams params, int generation, double win_rate) {
  if (params.version != size()) {
    throw ContractViolation("PolicyPool: appended version " + std::to_string(params.version) +
                            ", expected " + std::to_string(size()));
  }
  PoolEntry entry;
  entry.version = params.version;
  entry.generation = generation;
  entry.win_rate = win_rate;
  entry.params = std::move(params);
  entries_.push_back(std::move(entry));
}

const PoolEntry& PolicyPool::at(int version) const {
  if (version < 0 || version >= size()) {
    throw LookupError("PolicyPool: version " + std::to_string(version) + " not in pool of size " +
                      std::to_string(size()));
  }
  return entries_[version];
}

const PoolEntry& PolicyPool::latest() const {
  if (entries_.empty()) throw ContractViolation("PolicyPool: empty pool");
  return entries_.back();
}

VersionRange eligible_versions(int pool_size, double delta) {
  if (pool_size < 1) throw ContractViolation("eligible_versions: empty pool");
  if (!(delta >= 0.0 && delta <= 1.0)) {
    throw ConfigError("eligible_versions: delta outside [0,1]");
  }
  const int newest = pool_size - 1;
  const int first = static_cast<int>(std::ceil((1.0 - delta) * static_cast<double>(newest)));
  return VersionRange{std::min(first, newest), newest};
}

int sample_opponent_version(int pool_size, const SamplerConfig& cfg, Rng& rng) {
  VersionRange range = eligible_versions(pool_size, cfg.delta);
  const int count = range.last - range.first + 1;
  return range.first + static_cast<int>(rng.below(static_cast<std::uint32_t>(count)));
}

const PoolEntry& sample_opponent(const PolicyPool& pool, const SamplerConfig& cfg, Rng& rng) {
  return pool.at(sample_opponent_version(pool.size(), cfg, rng));
}

namespace {

// Per-slot action selection: deterministic mean or a Gaussian sample from
// the slot's own stream. Returns the pre-clamp vector.
std::vector<double> select_action(const policy::PolicyParams& p, std::span<const double> obs,
                                  bool deterministic, Rng& rng, policy::GaussianDist* dist_out) {
  policy::GaussianDist dist = policy::tactics_dist(p, obs);
  std::vector<double> action = deterministic ? dist.mean : policy::sample(dist, rng);
  if (dist_out != nullptr) *dist_out = std::move(dist);
  return action;
}

std::vector<double> clamp_unit_vec(std::span<const double> a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::min(1.0, std::max(-1.0, a[i]));
  return out;
}

}  // namespace

EpisodeSummary run_arena_episode(const std::array<const policy::PolicyParams*, 2>& players,
                                 const std::array<morph::MorphVector, 2>& morphs,
                                 const EpisodeConfig& cfg, const CollectionConfig* collect,
                                 ppo::Trajectory* out, std::ostream* trace) {
  const arena::PhysicsConfig& phys = *cfg.physics;
  arena::ArenaState state = arena::reset(cfg.task, morphs[0], morphs[1], cfg.seed, phys,
                                         *cfg.morph_cfg, cfg.jitter);
  std::array<Rng, 2> action_rng{Rng(derive_seed(cfg.seed, {0xac710000ULL, 0})),
                                Rng(derive_seed(cfg.seed, {0xac710000ULL, 1}))};
  if (trace != nullptr) arena::write_trace_header(*trace, cfg.task, morphs[0], morphs[1]);

  EpisodeSummary summary;
  while (true) {
    std::array<std::vector<double>, 2> obs{arena::observe(state, 0, phys),
                                           arena::observe(state, 1, phys)};
    std::array<std::vector<double>, 2> raw_actions;
    std::array<policy::GaussianDist, 2> dists;
    for (int i = 0; i < 2; ++i) {
      raw_actions[i] =
          select_action(*players[i], obs[i], cfg.deterministic[i], action_rng[i], &dists[i]);
    }
    std::array<std::vector<double>, 2> executed{clamp_unit_vec(raw_actions[0]),
                                                clamp_unit_vec(raw_actions[1])};
    auto [next, outcome] = arena::step(state, executed[0], executed[1], phys);
    summary.steps += 1;

    if (trace != nullptr) {
      arena::append_trace_record(*trace, next, executed[0], executed[1], outcome);
    }

    if (collect != nullptr) {
      const int slot = collect->learner_slot;
      double dense = outcome.dense_rewards[slot];
      if (collect->warmup_reward) {
        dense = arena::locomotion_reward(state, next, slot, executed[slot], phys);
      } else if (collect->dense_override != nullptr && *collect->dense_override) {
        dense = (*collect->dense_override)(cfg.task, state, next, slot, executed[slot], phys);
      }
      const double sparse = outcome.sparse_rewards[slot];
      ppo::Transition tr;
      tr.stage = ppo::Stage::arena_confrontation;
      tr.observation = std::move(obs[slot]);
      tr.action = std::move(raw_actions[slot]);
      tr.log_prob_behavior = policy::log_prob(dists[slot], tr.action);
      tr.reward = ppo::blend_rewards(dense, sparse, collect->kappa);
      tr.value_estimate = policy::value(*players[slot], tr.observation);
      tr.done = outcome.terminal;
      summary.dense_return += dense;
      summary.sparse_return += sparse;
      if (out != nullptr) out->transitions.push_back(std::move(tr));
    }

    state = std::move(next);
    if (outcome.terminal) {
      summary.result = outcome.result;
      break;
    }
  }
  if (out != nullptr) {
    out->result = summary.result;
    out->arena_steps = summary.steps;
  }
  return summary;
}

ppo::Trajectory run_episode(const RunEpisodeInputs& in, EpisodeSummary* summary_out) {
  const policy::PolicyParams* slot_params[2];
  slot_params[in.learner_slot] = in.learner;
  slot_params[1 - in.learner_slot] = in.opponent;
  const morph::InitialMorphSeed* slot_x[2];
  slot_x[in.learner_slot] = in.x_learner;
  slot_x[1 - in.learner_slot] = in.x_opponent;

  ppo::Trajectory traj;
  std::array<morph::MorphVector, 2> morphs;
  for (int slot = 0; slot < 2; ++slot) {
    const policy::PolicyParams& p = *slot_params[slot];
    if (!in.evolvable[slot]) {
      morphs[slot] = morph::identity_morph(p.species);
      continue;
    }
    policy::GaussianDist dist = policy::morph_dist(p, *slot_x[slot]);
    Rng rng(derive_seed(in.seed, {0x3053616dULL, static_cast<std::uint64_t>(slot)}));
    std::vector<double> raw = policy::sample(dist, rng);
    morphs[slot] = morph::clamp_morph(raw, p.species, *in.morph_cfg);
    if (slot == in.learner_slot) {
      ppo::Transition tr;
      tr.stage = ppo::Stage::morph_generation;
      tr.observation = slot_x[slot]->x;
      tr.action = std::move(raw);
      tr.log_prob_behavior = policy::log_prob(dist, tr.action);
      tr.reward = 0.0;
      tr.value_estimate =
          policy::value(p, policy::morph_stage_value_input(p, slot_x[slot]->x));
      tr.done = false;
      traj.transitions.push_back(std::move(tr));
    }
  }

  EpisodeConfig ep;
  ep.task = in.task;
  ep.physics = in.physics;
  ep.morph_cfg = in.morph_cfg;
  ep.seed = derive_seed(in.seed, {0x65700000ULL});
  ep.jitter = true;
  CollectionConfig collect;
  collect.learner_slot = in.learner_slot;
  collect.kappa = in.kappa;
  collect.warmup_reward = in.warmup;
  collect.dense_override = in.dense_override;

  EpisodeSummary summary = run_arena_episode({slot_params[0], slot_params[1]}, morphs, ep,
                                             &collect, &traj, nullptr);
  traj.dense_return = summary.dense_return;
  traj.sparse_return = summary.sparse_return;
  if (summary_out != nullptr) *summary_out = summary;
  return traj;
}

}  // namespace competevo::selfplay
