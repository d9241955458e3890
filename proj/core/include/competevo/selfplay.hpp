#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "competevo/morphology.hpp"
#include "competevo/physics.hpp"
#include "competevo/policy.hpp"
#include "competevo/ppo.hpp"

namespace competevo::selfplay {

enum class Player { alpha = 0, beta = 1 };

struct PoolEntry {
  int version = 0;
  policy::PolicyParams params;
  int generation = 0;      // generation at which this version was appended
  double win_rate = 0.0;   // rollout win-rate snapshot from that generation
};

/// Append-only versioned archive of one player's policies. Versions are
/// dense and strictly increasing from 0 (the initial policy).
class PolicyPool {
 public:
  explicit PolicyPool(Player player) : player_(player) {}

  /// Appends the next version; params.version must equal size().
  void append(policy::PolicyParams params, int generation, double win_rate);

  const PoolEntry& at(int version) const;  // throws LookupError
  const PoolEntry& latest() const;
  int size() const { return static_cast<int>(entries_.size()); }
  Player player() const { return player_; }

 private:
  Player player_;
  std::vector<PoolEntry> entries_;
};

struct SamplerConfig {
  double delta = 0.5;    // fraction of history eligible, newest first
  int n_opponents = 4;   // historical opponents sampled per generation
};

struct CurriculumConfig {
  int warmup_generations = 100;
  int termination_generation = 1000;  // T_t of the annealing schedule
  int max_generations = 1000;
  std::array<bool, 2> evolvable{true, false};
};

struct VersionRange {
  int first = 0;
  int last = 0;  // inclusive
};

/// Eligible versions for a pool of size K: {ceil((1-delta)*(K-1)) .. K-1}.
/// delta=0 selects only the latest, delta=1 all of history.
VersionRange eligible_versions(int pool_size, double delta);

int sample_opponent_version(int pool_size, const SamplerConfig& cfg, Rng& rng);
const PoolEntry& sample_opponent(const PolicyPool& pool, const SamplerConfig& cfg, Rng& rng);

/// Optional replacement for the task's dense reward (test instrumentation;
/// session-only, never serialized).
using DenseRewardFn =
    std::function<double(arena::TaskKind, const arena::ArenaState& before,
                         const arena::ArenaState& after, int player,
                         std::span<const double> action, const arena::PhysicsConfig&)>;

struct EpisodeConfig {
  arena::TaskKind task{};
  const arena::PhysicsConfig* physics = nullptr;
  const morph::MorphConfig* morph_cfg = nullptr;
  std::uint64_t seed = 0;
  bool jitter = true;
  std::array<bool, 2> deterministic{false, false};  // mean actions vs samples
};

struct CollectionConfig {
  int learner_slot = 0;
  double kappa = 1.0;
  bool warmup_reward = false;  // locomotion shaping instead of task reward
  const DenseRewardFn* dense_override = nullptr;
};

struct EpisodeSummary {
  arena::RoundResult result = arena::RoundResult::ongoing;
  int steps = 0;
  double dense_return = 0.0;   // learner's raw sums (when collecting)
  double sparse_return = 0.0;
};

/// Arena-confrontation loop shared by training rollouts, tournament play,
/// and replay export: reset, per-step action selection for both players,
/// stepping until terminal. When `collect` is non-null the learner's
/// transitions are appended to `out` with kappa-blended rewards.
EpisodeSummary run_arena_episode(const std::array<const policy::PolicyParams*, 2>& players,
                                 const std::array<morph::MorphVector, 2>& morphs,
                                 const EpisodeConfig& cfg, const CollectionConfig* collect,
                                 ppo::Trajectory* out, std::ostream* trace = nullptr);

struct RunEpisodeInputs {
  const policy::PolicyParams* learner = nullptr;
  const policy::PolicyParams* opponent = nullptr;
  int learner_slot = 0;  // the learner plays its own side
  arena::TaskKind task{};
  double kappa = 1.0;
  std::array<bool, 2> evolvable{false, false};  // by slot
  const morph::InitialMorphSeed* x_learner = nullptr;
  const morph::InitialMorphSeed* x_opponent = nullptr;
  std::uint64_t seed = 0;
  bool warmup = false;
  const arena::PhysicsConfig* physics = nullptr;
  const morph::MorphConfig* morph_cfg = nullptr;
  const DenseRewardFn* dense_override = nullptr;
};

/// One full two-stage episode from the learner's perspective. Evolvable
/// players sample their morph from the morph head (clamped); fixed players
/// use the identity morph. The learner's morph transition (reward 0) leads
/// the trajectory when the learner is evolvable.
ppo::Trajectory run_episode(const RunEpisodeInputs& in, EpisodeSummary* summary = nullptr);

}  // namespace competevo::selfplay
