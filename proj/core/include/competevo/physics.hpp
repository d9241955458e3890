#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "competevo/morphology.hpp"

namespace competevo::arena {

/* Frame convention
 *
 * Agents are orientation-free discs; legs never rotate. Each player has a
 * fixed canonical frame: player 0's frame is the world frame, player 1's
 * frame is the world frame reflected across the y-axis (the two fighters
 * face each other). Leg k of player 0 thrusts along
 * (cos(2*pi*k/n), sin(2*pi*k/n)); leg k of player 1 thrusts along the exact
 * x-negation of that. Observations and actions are expressed in the owning
 * player's frame, so "+x" always means "toward the opponent's side".
 *
 * Consequence: swapping the players and reflecting the world across the
 * y-axis is an exact symmetry of the whole pipeline (physics, rewards,
 * observations), bit-for-bit. Mirrored duels between identical policies stay
 * mirror-invariant forever and can only end in draws.
 */

enum class TaskKind { run_to_goal, sumo };

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(Vec2 a, double c) { return {a.x * c, a.y * c}; }
  friend Vec2 operator*(double c, Vec2 a) { return a * c; }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

double norm(Vec2 v);
double dot(Vec2 a, Vec2 b);

struct PhysicsConfig {
  double dt = 0.05;           // integration timestep (s)
  int episode_len = 500;      // steps until a draw is declared
  double friction = 0.8;      // linear drag coefficient (1/s)
  int stun_steps = 20;        // run_to_goal knockdown recovery time
  double jitter = 0.05;       // reset position jitter bound (m)
  double goal_x = 5.0;        // run_to_goal goal lines at +-goal_x
  double start_x_goal = 3.0;  // run_to_goal start offset
  double dohyo_radius = 3.0;  // sumo ring radius
  double start_x_sumo = 1.5;  // sumo start offset
  double w_prog = 1.0;        // dense-reward weights
  double w_push = 1.0;
  double w_center = 0.5;
  double w_approach = 0.5;
};

struct AgentKinematics {
  Vec2 position;
  Vec2 velocity;
  int stunned_until = 0;  // first step index at which the agent can act again
  bool fallen = false;

  friend bool operator==(const AgentKinematics&, const AgentKinematics&) = default;
};

enum class RoundResult { ongoing, alpha_wins, beta_wins, draw };

struct StepOutcome {
  std::array<double, 2> dense_rewards{0.0, 0.0};
  std::array<double, 2> sparse_rewards{0.0, 0.0};
  bool terminal = false;
  RoundResult result = RoundResult::ongoing;
};

struct ArenaState {
  TaskKind task{};
  int step = 0;
  std::array<AgentKinematics, 2> agents;
  std::array<morph::BodyProperties, 2> bodies;
  std::array<morph::MorphVector, 2> morphs;
  std::uint64_t rng_state = 0;
};

/// Per-leg thrust commands in [-1, 1], length = leg_count.
using ActionVector = std::vector<double>;

/// Fixed observation layout, length 12 + param_count, all in the observer's
/// own frame:
///   [0:2]  own position        [2:4]  own velocity
///   [4]    own stun flag       [5]    remaining-time fraction
///   [6]    geometry feature (signed distance to own goal line, or distance
///          from dohyo center)
///   [7:9]  opponent relative position   [9:11] opponent relative velocity
///   [11]   opponent contact radius
///   [12:]  own morph encoding
using ObservationVector = std::vector<double>;

inline constexpr int kObsFixedDim = 12;

int observation_dim(const morph::Species& species);

/// World-frame thrust direction of one leg (unit vector).
Vec2 leg_direction(int player, int leg, int leg_count);

/// Whether the agent cannot act at the given step index.
bool is_stunned(const AgentKinematics& agent, int step);

/// Builds the initial state: face-to-face starts, zero velocities, derived
/// bodies, seeded mirror-symmetric positional jitter.
ArenaState reset(TaskKind task, const morph::MorphVector& morph_a,
                 const morph::MorphVector& morph_b, std::uint64_t seed,
                 const PhysicsConfig& cfg = {}, const morph::MorphConfig& morph_cfg = {},
                 bool jitter_enabled = true);

/// Termination status of a state (without stepping it).
RoundResult evaluate_result(const ArenaState& s, const PhysicsConfig& cfg = {});

/// One transition: per-leg thrust, linear drag, semi-implicit Euler,
/// inelastic disc contact with knockdown, termination and rewards.
/// Actions are clamped to [-1, 1] on entry. Throws ContractViolation when
/// called on a terminal state.
std::pair<ArenaState, StepOutcome> step(const ArenaState& s, std::span<const double> action_a,
                                        std::span<const double> action_b,
                                        const PhysicsConfig& cfg = {});

/// Actuation energy cost of one step: energy_coeff * sum_k |a_k| * force_k * dt.
double energy_cost(const morph::BodyProperties& body, std::span<const double> action, double dt);

/// Task shaping reward for one player over one transition.
double dense_reward(TaskKind task, const ArenaState& before, const ArenaState& after, int player,
                    std::span<const double> action, const PhysicsConfig& cfg = {});

/// Warm-up shaping reward: forward progress toward the opponent's side minus
/// actuation energy.
double locomotion_reward(const ArenaState& before, const ArenaState& after, int player,
                         std::span<const double> action, const PhysicsConfig& cfg = {});

ObservationVector observe(const ArenaState& s, int player, const PhysicsConfig& cfg = {});

/// Reflects the world across the y-axis and swaps the two players.
/// Involutive and exact.
ArenaState mirror(const ArenaState& s);

/// Replay trace: '#'-prefixed header lines, then one whitespace-separated
/// record per step. Field order:
///   step p0x p0y v0x v0y p1x p1y v1x v1y
///   <n0 player-0 actions> <n1 player-1 actions>
///   dense0 dense1 sparse0 sparse1 result
void write_trace_header(std::ostream& os, TaskKind task, const morph::MorphVector& morph_a,
                        const morph::MorphVector& morph_b);
void append_trace_record(std::ostream& os, const ArenaState& after,
                         std::span<const double> action_a, std::span<const double> action_b,
                         const StepOutcome& outcome);

const char* result_name(RoundResult r);
const char* task_name(TaskKind t);
TaskKind parse_task(std::string_view name);

}  // namespace competevo::arena
