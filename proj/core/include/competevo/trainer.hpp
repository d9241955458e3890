#pragma once

#include <array>
#include <functional>
#include <string>

#include "competevo/config.hpp"
#include "competevo/selfplay.hpp"

namespace competevo::selfplay {

struct PlayerGenerationMetrics {
  int episodes = 0;
  int transitions = 0;
  double mean_dense_return = 0.0;
  double mean_sparse_return = 0.0;
  double mean_blended_return = 0.0;
  double mean_episode_len = 0.0;
  int wins = 0;
  int losses = 0;
  int draws = 0;
  double entropy = 0.0;    // tactics-head entropy of the freshly trained policy
  double grad_norm = 0.0;  // mean pre-clip gradient norm over minibatches
  double loss = 0.0;
};

struct GenerationMetrics {
  int generation = 0;  // index of the generation that was just executed
  double kappa = 1.0;
  bool warmup = false;
  std::array<PlayerGenerationMetrics, 2> players;
  double wall_clock_sec = 0.0;
};

/// One metrics record as a single JSON line (the metrics-stream format).
std::string metrics_to_json_line(const GenerationMetrics& m);

/// Drives the whole self-play loop: warm-up generations first (locomotion
/// shaping, kappa fixed at 1, no opponent-interaction rewards), then
/// confrontation generations with delta-uniform opponent sampling and
/// annealed rewards. Each generation trains alpha then beta sequentially,
/// appending one new version per player per generation.
class Trainer {
 public:
  explicit Trainer(RunConfig cfg);

  /// Executes one generation (both players). Throws ContractViolation once
  /// max_generations is reached.
  void step_generation();

  /// Runs to max_generations; the callback (if any) fires after every
  /// generation and may return false to stop early.
  void run(const std::function<bool(Trainer&, const GenerationMetrics&)>& on_generation = {});

  int generation() const { return generation_; }
  bool in_warmup() const { return generation_ < cfg_.curriculum.warmup_generations; }
  const RunConfig& config() const { return cfg_; }
  const PolicyPool& pool(Player p) const { return pools_[static_cast<int>(p)]; }
  const morph::InitialMorphSeed& morph_seed(Player p) const { return x_[static_cast<int>(p)]; }
  const GenerationMetrics& last_metrics() const { return last_metrics_; }

  /// Checkpoint directory: config snapshot, per-player pool files, optimizer
  /// state. Pool files are append-only; a resumed run bit-matches an
  /// uninterrupted one when the configuration is unchanged.
  void save_checkpoint(const std::string& dir) const;

  /// Loads a checkpoint. When `override_config` is given it replaces the
  /// stored settings after an ensure_compatible check (so an operator can,
  /// e.g., raise max_generations on resume).
  static Trainer load_checkpoint(const std::string& dir,
                                 const RunConfig* override_config = nullptr);

  /// Rejects checkpoints whose species/task/architecture do not match.
  static void ensure_compatible(const RunConfig& requested, const RunConfig& stored);

  // Test instrumentation (session-only, never serialized).
  std::function<void(Player, const ppo::RolloutBatch&)> batch_observer;
  DenseRewardFn dense_override;

 private:
  struct LoadTag {};
  Trainer(RunConfig cfg, LoadTag);

  ppo::RolloutBatch collect_batch(int player, double kappa, bool warmup,
                                  PlayerGenerationMetrics& pm);
  void collect_vs(int player, const policy::PolicyParams& opponent, int opponent_index,
                  int budget, double kappa, bool warmup, ppo::RolloutBatch& batch);

  RunConfig cfg_;
  int generation_ = 0;
  std::array<PolicyPool, 2> pools_{PolicyPool(Player::alpha), PolicyPool(Player::beta)};
  std::array<ppo::OptimizerState, 2> optimizers_;
  std::array<morph::InitialMorphSeed, 2> x_;
  GenerationMetrics last_metrics_;
};

}  // namespace competevo::selfplay
