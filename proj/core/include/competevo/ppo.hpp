#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "competevo/physics.hpp"
#include "competevo/policy.hpp"

namespace competevo::ppo {

enum class Stage { morph_generation, arena_confrontation };

/// One stored step of experience. For the morph-generation stage the
/// observation is the fixed seed x, the action is the raw (pre-clamp) morph
/// sample, and the reward is always zero.
struct Transition {
  Stage stage = Stage::arena_confrontation;
  std::vector<double> observation;
  std::vector<double> action;  // pre-clamp sample (thrusts or morph values)
  double log_prob_behavior = 0.0;
  double reward = 0.0;  // kappa-blended at collection time
  double value_estimate = 0.0;
  bool done = false;
};

struct Trajectory {
  std::vector<Transition> transitions;
  arena::RoundResult result = arena::RoundResult::ongoing;
  double dense_return = 0.0;   // raw (un-blended) sums, for metrics
  double sparse_return = 0.0;
  int arena_steps = 0;
};

struct RolloutBatch {
  std::vector<Trajectory> trajectories;
  int total_transitions = 0;
  int generation = 0;
};

struct PpoConfig {
  double learning_rate = 0.0005;
  double clip = 0.2;
  double gamma = 0.995;
  double gae_lambda = 0.95;
  int batch_size = 50000;
  int minibatch_size = 2000;
  int update_epochs = 5;
  double vf_coeff = 0.5;
  double ent_coeff = 0.01;
  double grad_clip = 0.5;
};

struct OptimizerState {
  std::vector<double> m;  // first-moment accumulator
  std::vector<double> v;  // second-moment accumulator
  std::int64_t step = 0;
  double lr = 0.0005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// kappa = max((T_t - t) / T_t, 0). Throws ConfigError for T_t <= 0.
double anneal_factor(int t, int termination_generation);

/// R = kappa * r_dense + (1 - kappa) * r_sparse. kappa must be in [0, 1].
double blend_rewards(double r_d, double r_s, double kappa);

struct GaeResult {
  std::vector<double> advantages;  // raw (not normalized)
  std::vector<double> returns;     // advantage + value baseline
};

/// Generalized advantage estimation. `values` has length rewards.size() + 1
/// with the bootstrap value (0 at a terminal) last.
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      double gamma, double lambda);

/// Flattened view of one transition with its precomputed (normalized)
/// advantage and return target.
struct Sample {
  const Transition* transition = nullptr;
  double advantage = 0.0;
  double ret = 0.0;
};

/// Shifts/rescales the advantages to zero mean and unit standard deviation
/// (population std, computed over the whole batch). No-op for fewer than two
/// samples or zero spread.
void normalize_advantages(std::span<Sample> samples);

struct LossTerms {
  double total = 0.0;
  double surrogate = 0.0;
  double value_mse = 0.0;
  double entropy = 0.0;
};

/// Clipped-surrogate PPO loss, averaged over the samples:
///   L = -E[min(rho A, clip(rho, 1-eps, 1+eps) A)]
///       + vf_coeff E[(V - ret)^2] - ent_coeff E[entropy]
/// Morph-stage samples go through the morph head (value on the zero-padded
/// observation); confrontation samples through the tactics head. When
/// morph_entropy_enabled is false the entropy bonus skips morph samples.
LossTerms ppo_loss(const policy::PolicyParams& p, std::span<const Sample> samples,
                   const PpoConfig& cfg, bool morph_entropy_enabled = true);

/// Same loss with exact reverse-mode gradients accumulated into `grad`.
LossTerms ppo_loss_grad(const policy::PolicyParams& p, std::span<const Sample> samples,
                        const PpoConfig& cfg, policy::Gradient& grad,
                        bool morph_entropy_enabled = true);

OptimizerState make_optimizer(const policy::PolicyParams& p, double lr);

/// Standard bias-corrected Adam step (beta1 0.9, beta2 0.999, eps 1e-8).
/// Throws NumericalError on non-finite gradients.
void adam_step(OptimizerState& opt, std::span<double> params, std::span<const double> grad);

/// Scales `grad` down to the given global L2 norm if it exceeds it; returns
/// the pre-clip norm.
double clip_gradient(std::span<double> grad, double max_norm);

struct UpdateStats {
  double mean_loss = 0.0;
  double mean_entropy = 0.0;
  double mean_grad_norm = 0.0;
  int minibatches = 0;
};

/// Full PPO update: GAE per trajectory, batch-wide advantage normalization,
/// update_epochs passes over shuffled minibatches, gradient-norm clipping,
/// Adam. Returns new parameters stamped with new_version.
policy::PolicyParams update(const policy::PolicyParams& p, const RolloutBatch& batch,
                            const PpoConfig& cfg, OptimizerState& opt, std::uint64_t shuffle_seed,
                            int new_version, bool morph_entropy_enabled = true,
                            UpdateStats* stats = nullptr);

}  // namespace competevo::ppo
