#include "competevo/physics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "competevo/errors.hpp"
#include "competevo/rng.hpp"

namespace competevo::arena {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double clamp_unit(double a) { return std::min(1.0, std::max(-1.0, a)); }

// Forward progress toward the opponent's side in the player's own frame.
double forward_progress(const ArenaState& before, const ArenaState& after, int player) {
  double dx = after.agents[player].position.x - before.agents[player].position.x;
  return player == 0 ? dx : -dx;
}

void check_action(const ArenaState& s, int player, std::span<const double> action) {
  int legs = s.bodies[player].species.leg_count;
  if (static_cast<int>(action.size()) != legs) {
    throw DimensionError("step: action length " + std::to_string(action.size()) + " for player " +
                         std::to_string(player) + ", expected " + std::to_string(legs));
  }
}

void format_double(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

}  // namespace

double norm(Vec2 v) { return std::sqrt(v.x * v.x + v.y * v.y); }
double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

int observation_dim(const morph::Species& species) { return kObsFixedDim + species.param_count; }

Vec2 leg_direction(int player, int leg, int leg_count) {
  double angle = kTwoPi * static_cast<double>(leg) / static_cast<double>(leg_count);
  Vec2 u{std::cos(angle), std::sin(angle)};
  // Player 1's frame is the exact x-reflection of player 0's.
  if (player == 1) u.x = -u.x;
  return u;
}

bool is_stunned(const AgentKinematics& agent, int step) { return step < agent.stunned_until; }

ArenaState reset(TaskKind task, const morph::MorphVector& morph_a,
                 const morph::MorphVector& morph_b, std::uint64_t seed, const PhysicsConfig& cfg,
                 const morph::MorphConfig& morph_cfg, bool jitter_enabled) {
  ArenaState s;
  s.task = task;
  s.step = 0;
  s.morphs = {morph_a, morph_b};
  s.bodies = {morph::derive_body(morph_a, morph_cfg), morph::derive_body(morph_b, morph_cfg)};

  const double x0 = task == TaskKind::run_to_goal ? cfg.start_x_goal : cfg.start_x_sumo;
  s.agents[0].position = {-x0, 0.0};
  s.agents[1].position = {x0, 0.0};

  Rng rng(derive_seed(seed, {0x6a697474u}));
  if (jitter_enabled && cfg.jitter > 0.0) {
    // One draw, applied mirror-symmetrically: a jittered start is still an
    // exact mirror configuration, so side-swapped matchups mirror exactly.
    double jx = rng.uniform(-cfg.jitter, cfg.jitter);
    double jy = rng.uniform(-cfg.jitter, cfg.jitter);
    s.agents[0].position = s.agents[0].position + Vec2{jx, jy};
    s.agents[1].position = s.agents[1].position + Vec2{-jx, jy};
  }
  s.rng_state = rng.state();
  return s;
}

RoundResult evaluate_result(const ArenaState& s, const PhysicsConfig& cfg) {
  bool lost[2] = {false, false};
  if (s.task == TaskKind::run_to_goal) {
    bool crossed0 = s.agents[0].position.x >= cfg.goal_x;
    bool crossed1 = s.agents[1].position.x <= -cfg.goal_x;
    if (crossed0 && crossed1) return RoundResult::draw;
    if (crossed0) return RoundResult::alpha_wins;
    if (crossed1) return RoundResult::beta_wins;
  } else {
    for (int i = 0; i < 2; ++i) {
      lost[i] = s.agents[i].fallen || norm(s.agents[i].position) > cfg.dohyo_radius;
    }
    if (lost[0] && lost[1]) return RoundResult::draw;
    if (lost[0]) return RoundResult::beta_wins;
    if (lost[1]) return RoundResult::alpha_wins;
  }
  if (s.step >= cfg.episode_len) return RoundResult::draw;
  return RoundResult::ongoing;
}

double energy_cost(const morph::BodyProperties& body, std::span<const double> action, double dt) {
  double e = 0.0;
  for (std::size_t k = 0; k < action.size(); ++k) {
    e += std::abs(clamp_unit(action[k])) * body.leg_force[k];
  }
  return body.energy_coeff * e * dt;
}

std::pair<ArenaState, StepOutcome> step(const ArenaState& s, std::span<const double> action_a,
                                        std::span<const double> action_b,
                                        const PhysicsConfig& cfg) {
  if (evaluate_result(s, cfg) != RoundResult::ongoing) {
    throw ContractViolation("step: state is already terminal");
  }
  check_action(s, 0, action_a);
  check_action(s, 1, action_b);

  ArenaState next = s;
  next.step = s.step + 1;
  const std::span<const double> actions[2] = {action_a, action_b};

  // Thrust + linear drag, semi-implicit Euler.
  for (int i = 0; i < 2; ++i) {
    const auto& body = s.bodies[i];
    Vec2 thrust{0.0, 0.0};
    if (!is_stunned(s.agents[i], s.step)) {
      int legs = body.species.leg_count;
      for (int k = 0; k < legs; ++k) {
        thrust = thrust + clamp_unit(actions[i][k]) * body.leg_force[k] *
                              leg_direction(i, k, legs);
      }
    }
    AgentKinematics& agent = next.agents[i];
    Vec2 accel = thrust * (1.0 / body.total_mass) - cfg.friction * agent.velocity;
    agent.velocity = agent.velocity + accel * cfg.dt;
    agent.position = agent.position + agent.velocity * cfg.dt;
  }

  // Disc-disc contact: restitution-0 impulse along the center line plus
  // positional de-penetration split by inverse mass.
  {
    const double r_sum = s.bodies[0].contact_radius + s.bodies[1].contact_radius;
    Vec2 d = next.agents[1].position - next.agents[0].position;
    double dist = norm(d);
    if (dist < r_sum) {
      Vec2 n = dist > 1e-12 ? d * (1.0 / dist) : Vec2{1.0, 0.0};
      const double m0 = s.bodies[0].total_mass;
      const double m1 = s.bodies[1].total_mass;
      const double inv0 = 1.0 / m0;
      const double inv1 = 1.0 / m1;
      double vn = dot(next.agents[1].velocity - next.agents[0].velocity, n);
      if (vn < 0.0) {
        double impulse = -vn / (inv0 + inv1);
        next.agents[0].velocity = next.agents[0].velocity - n * (impulse * inv0);
        next.agents[1].velocity = next.agents[1].velocity + n * (impulse * inv1);
        for (int i = 0; i < 2; ++i) {
          if (impulse > s.bodies[i].stability) {
            next.agents[i].fallen = true;
            next.agents[i].stunned_until = next.step + cfg.stun_steps;
          }
        }
      }
      double overlap = r_sum - dist;
      next.agents[0].position = next.agents[0].position - n * (overlap * inv0 / (inv0 + inv1));
      next.agents[1].position = next.agents[1].position + n * (overlap * inv1 / (inv0 + inv1));
    }
  }

  // Knockdown recovery (run_to_goal only; in sumo a fall is terminal).
  if (s.task == TaskKind::run_to_goal) {
    for (auto& agent : next.agents) {
      if (agent.fallen && next.step >= agent.stunned_until) agent.fallen = false;
    }
  }

  StepOutcome out;
  out.result = evaluate_result(next, cfg);
  out.terminal = out.result != RoundResult::ongoing;
  if (out.terminal) {
    const double win = s.task == TaskKind::run_to_goal ? 1000.0 : 2000.0;
    switch (out.result) {
      case RoundResult::alpha_wins:
        out.sparse_rewards = {win, -win};
        break;
      case RoundResult::beta_wins:
        out.sparse_rewards = {-win, win};
        break;
      case RoundResult::draw:
        if (s.task == TaskKind::sumo) out.sparse_rewards = {-1000.0, -1000.0};
        break;
      case RoundResult::ongoing:
        break;
    }
  }
  out.dense_rewards[0] = dense_reward(s.task, s, next, 0, action_a, cfg);
  out.dense_rewards[1] = dense_reward(s.task, s, next, 1, action_b, cfg);
  return {next, out};
}

double dense_reward(TaskKind task, const ArenaState& before, const ArenaState& after, int player,
                    std::span<const double> action, const PhysicsConfig& cfg) {
  const double energy = energy_cost(before.bodies[player], action, cfg.dt);
  if (task == TaskKind::run_to_goal) {
    return cfg.w_prog * forward_progress(before, after, player) - energy;
  }
  const int opp = 1 - player;
  double own_before = norm(before.agents[player].position);
  double own_after = norm(after.agents[player].position);
  double opp_before = norm(before.agents[opp].position);
  double opp_after = norm(after.agents[opp].position);
  double sep_before = norm(before.agents[opp].position - before.agents[player].position);
  double sep_after = norm(after.agents[opp].position - after.agents[player].position);
  return cfg.w_push * (opp_after - opp_before) - cfg.w_center * (own_after - own_before) +
         cfg.w_approach * (sep_before - sep_after) - energy;
}

double locomotion_reward(const ArenaState& before, const ArenaState& after, int player,
                         std::span<const double> action, const PhysicsConfig& cfg) {
  return cfg.w_prog * forward_progress(before, after, player) -
         energy_cost(before.bodies[player], action, cfg.dt);
}

ObservationVector observe(const ArenaState& s, int player, const PhysicsConfig& cfg) {
  const int opp = 1 - player;
  const double flip = player == 0 ? 1.0 : -1.0;
  const auto& self = s.agents[player];
  const auto& other = s.agents[opp];

  ObservationVector obs;
  obs.reserve(observation_dim(s.bodies[player].species));
  obs.push_back(flip * self.position.x);
  obs.push_back(self.position.y);
  obs.push_back(flip * self.velocity.x);
  obs.push_back(self.velocity.y);
  obs.push_back(is_stunned(self, s.step) ? 1.0 : 0.0);
  obs.push_back(static_cast<double>(cfg.episode_len - s.step) /
                static_cast<double>(cfg.episode_len));
  if (s.task == TaskKind::run_to_goal) {
    // Remaining signed distance to the own goal line, in the own frame.
    obs.push_back(cfg.goal_x - flip * self.position.x);
  } else {
    obs.push_back(norm(self.position));
  }
  obs.push_back(flip * (other.position.x - self.position.x));
  obs.push_back(other.position.y - self.position.y);
  obs.push_back(flip * (other.velocity.x - self.velocity.x));
  obs.push_back(other.velocity.y - self.velocity.y);
  obs.push_back(s.bodies[opp].contact_radius);
  obs.insert(obs.end(), s.morphs[player].values.begin(), s.morphs[player].values.end());
  return obs;
}

ArenaState mirror(const ArenaState& s) {
  ArenaState m = s;
  for (int i = 0; i < 2; ++i) {
    m.agents[i] = s.agents[1 - i];
    m.agents[i].position.x = -m.agents[i].position.x;
    m.agents[i].velocity.x = -m.agents[i].velocity.x;
    m.bodies[i] = s.bodies[1 - i];
    m.morphs[i] = s.morphs[1 - i];
  }
  return m;
}

void write_trace_header(std::ostream& os, TaskKind task, const morph::MorphVector& morph_a,
                        const morph::MorphVector& morph_b) {
  os << "# competevo-replay v1 task=" << task_name(task)
     << " species=" << morph::species_name(morph_a.species.name) << ","
     << morph::species_name(morph_b.species.name) << "\n";
  for (int i = 0; i < 2; ++i) {
    const auto& m = i == 0 ? morph_a : morph_b;
    std::string line = i == 0 ? "# morph_a" : "# morph_b";
    for (double v : m.values) {
      line += ' ';
      format_double(line, v);
    }
    os << line << "\n";
  }
  os << "# fields: step p0x p0y v0x v0y p1x p1y v1x v1y a0[n0] a1[n1] "
        "dense0 dense1 sparse0 sparse1 result\n";
}

void append_trace_record(std::ostream& os, const ArenaState& after,
                         std::span<const double> action_a, std::span<const double> action_b,
                         const StepOutcome& outcome) {
  std::string line = std::to_string(after.step);
  auto push = [&line](double v) {
    line += ' ';
    format_double(line, v);
  };
  for (int i = 0; i < 2; ++i) {
    push(after.agents[i].position.x);
    push(after.agents[i].position.y);
    push(after.agents[i].velocity.x);
    push(after.agents[i].velocity.y);
  }
  for (double a : action_a) push(a);
  for (double a : action_b) push(a);
  push(outcome.dense_rewards[0]);
  push(outcome.dense_rewards[1]);
  push(outcome.sparse_rewards[0]);
  push(outcome.sparse_rewards[1]);
  line += ' ';
  line += result_name(outcome.result);
  os << line << "\n";
}

const char* result_name(RoundResult r) {
  switch (r) {
    case RoundResult::ongoing:
      return "ongoing";
    case RoundResult::alpha_wins:
      return "alpha_wins";
    case RoundResult::beta_wins:
      return "beta_wins";
    case RoundResult::draw:
      return "draw";
  }
  return "?";
}

const char* task_name(TaskKind t) {
  return t == TaskKind::run_to_goal ? "run_to_goal" : "sumo";
}

TaskKind parse_task(std::string_view name) {
  if (name == "run_to_goal") return TaskKind::run_to_goal;
  if (name == "sumo") return TaskKind::sumo;
  throw ConfigError("unknown task: \"" + std::string(name) + "\"");
}

}  // namespace competevo::arena
