// Acceptance suite: one runner per criterion, one PASS/FAIL line each.
// Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "competevo/config.hpp"
#include "competevo/tournament.hpp"
#include "competevo/trainer.hpp"

using namespace competevo;

namespace {

namespace fs = std::filesystem;

struct AcceptanceFailure {
  std::string message;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw AcceptanceFailure{message};
}

std::string fmt(const char* format, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), format, a, b);
  return buf;
}

const morph::Species kAnt = morph::species_template(morph::SpeciesName::ant);

policy::PolicyConfig small_nets() {
  policy::PolicyConfig cfg;
  cfg.tactics_hidden = {5};
  cfg.value_hidden = {4};
  cfg.morph_hidden = {4};
  return cfg;
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// ---------------------------------------------------------------------------
// 1. Reward-annealing exactness.
void criterion_annealing() {
  for (int tt : {1, 3, 7, 100, 1000}) {
    for (int t = 0; t <= 2 * tt + 3; ++t) {
      const double expected =
          std::max((static_cast<double>(tt) - static_cast<double>(t)) / static_cast<double>(tt),
                   0.0);
      require(ppo::anneal_factor(t, tt) == expected, "anneal_factor mismatch at t=" +
                                                         std::to_string(t) +
                                                         " T_t=" + std::to_string(tt));
    }
    require(ppo::anneal_factor(0, tt) == 1.0, "anneal_factor(0) != 1");
    require(ppo::anneal_factor(tt, tt) == 0.0, "anneal_factor(T_t) != 0");
    require(ppo::anneal_factor(3 * tt, tt) == 0.0, "anneal_factor beyond T_t != 0");
  }
  const double rewards[] = {-2000.0, -3.5, 0.0, 1.0, 777.25};
  const double kappas[] = {0.0, 0.125, 0.5, 0.9, 1.0};
  for (double rd : rewards) {
    for (double rs : rewards) {
      for (double k : kappas) {
        require(ppo::blend_rewards(rd, rs, k) == k * rd + (1.0 - k) * rs,
                "blend_rewards mismatch");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// 2. Morphology encoding conformance.
void criterion_encoding() {
  require(morph::species_template(morph::SpeciesName::ant).param_count == 20, "ant != 20");
  require(morph::species_template(morph::SpeciesName::bug).param_count == 30, "bug != 30");
  require(morph::species_template(morph::SpeciesName::spider).param_count == 40, "spider != 40");
  for (auto name :
       {morph::SpeciesName::ant, morph::SpeciesName::bug, morph::SpeciesName::spider}) {
    const morph::Species sp = morph::species_template(name);
    require(sp.param_count == 5 * sp.leg_count, "param_count != 5 * leg_count");
  }

  Rng rng(1001);
  const morph::Species spider = morph::species_template(morph::SpeciesName::spider);
  std::vector<double> raw(spider.param_count);
  for (int trial = 0; trial < 100000; ++trial) {
    for (double& v : raw) v = rng.uniform(-50.0, 50.0);
    morph::MorphVector m = morph::clamp_morph(raw, spider);
    for (double v : m.values) {
      require(v >= 0.5 && v <= 2.0, "clamp escaped bounds");
    }
  }

  // Exact force linearity under power-of-two girth scaling.
  const morph::Species bug = morph::species_template(morph::SpeciesName::bug);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> vals(bug.param_count);
    for (double& v : vals) v = rng.uniform(0.5, 1.0);
    morph::MorphVector m{bug, vals};
    morph::BodyProperties base = morph::derive_body(m);
    morph::MorphVector doubled = m;
    for (int k = 0; k < bug.leg_count; ++k) {
      doubled.values[k * morph::kParamsPerLeg + 2] *= 2.0;
      doubled.values[k * morph::kParamsPerLeg + 4] *= 2.0;
    }
    morph::BodyProperties scaled = morph::derive_body(doubled);
    for (int k = 0; k < bug.leg_count; ++k) {
      require(scaled.leg_force[k] == 2.0 * base.leg_force[k], "force not exactly linear");
      const double l3 = m.leg_param(k, 2), l5 = m.leg_param(k, 4);
      require(base.leg_force[k] == 10.0 * (l3 + l5) / 2.0, "force law mismatch");
    }
  }
}

// ---------------------------------------------------------------------------
// 3. Analytic gradients of the full PPO loss vs central finite differences.
void criterion_gradients() {
  Rng rng(42);
  ppo::PpoConfig cfg;
  for (int trial = 0; trial < 20; ++trial) {
    policy::PolicyParams p =
        policy::init_policy(kAnt, arena::TaskKind::sumo, 5000 + trial, small_nets());
    for (double& w : p.flat) w += rng.uniform(-0.08, 0.08);

    // Synthetic off-policy batch with both stages present.
    std::vector<ppo::Transition> transitions;
    morph::InitialMorphSeed x{std::vector<double>(20, 1.0)};
    for (double& v : x.x) v = rng.uniform(0.9, 1.1);
    {
      policy::GaussianDist d = policy::morph_dist(p, x);
      ppo::Transition tr;
      tr.stage = ppo::Stage::morph_generation;
      tr.observation = x.x;
      tr.action = policy::sample(d, rng);
      tr.log_prob_behavior = policy::log_prob(d, tr.action) + rng.uniform(-0.05, 0.05);
      transitions.push_back(std::move(tr));
    }
    for (int t = 0; t < 7; ++t) {
      std::vector<double> obs(arena::observation_dim(kAnt));
      for (double& v : obs) v = rng.uniform(-2.0, 2.0);
      policy::GaussianDist d = policy::tactics_dist(p, obs);
      ppo::Transition tr;
      tr.stage = ppo::Stage::arena_confrontation;
      tr.observation = std::move(obs);
      tr.action = policy::sample(d, rng);
      tr.log_prob_behavior = policy::log_prob(d, tr.action) + rng.uniform(-0.05, 0.05);
      transitions.push_back(std::move(tr));
    }
    std::vector<ppo::Sample> samples;
    for (auto& tr : transitions) {
      samples.push_back(ppo::Sample{&tr, rng.uniform(-1.5, 1.5), rng.uniform(-1.0, 1.0)});
    }

    policy::Gradient analytic(p);
    ppo::ppo_loss_grad(p, samples, cfg, analytic);

    const double eps = 1e-5;
    policy::PolicyParams probe = p;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < p.flat.size(); ++i) {
      const double keep = probe.flat[i];
      probe.flat[i] = keep + eps;
      const double up = ppo::ppo_loss(probe, samples, cfg).total;
      probe.flat[i] = keep - eps;
      const double dn = ppo::ppo_loss(probe, samples, cfg).total;
      probe.flat[i] = keep;
      const double fd = (up - dn) / (2.0 * eps);
      num += (fd - analytic.flat[i]) * (fd - analytic.flat[i]);
      den += fd * fd;
    }
    const double rel = std::sqrt(num) / std::max(std::sqrt(den), 1e-8);
    require(rel <= 1e-4, fmt("gradcheck relative error %.3g > 1e-4", rel));
  }
}

// ---------------------------------------------------------------------------
// 4. GAE against brute-force oracles.
void criterion_gae() {
  {
    std::vector<double> r{1.0, 1.0};
    std::vector<double> v{0.0, 0.0, 0.0};
    ppo::GaeResult g = ppo::compute_gae(r, v, 0.995, 0.95);
    require(std::abs(g.advantages[0] - 1.94525) <= 1e-9, "two-step hand case failed");
    require(std::abs(g.advantages[1] - 1.0) <= 1e-9, "two-step hand case failed");
  }
  Rng rng(4242);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 20;
    std::vector<double> rewards(n), values(n + 1);
    for (double& r : rewards) r = rng.uniform(-5.0, 5.0);
    for (int i = 0; i < n; ++i) values[i] = rng.uniform(-3.0, 3.0);
    values[n] = 0.0;
    const double gamma = rng.uniform(0.9, 1.0);
    ppo::GaeResult g = ppo::compute_gae(rewards, values, gamma, 1.0);
    // independent oracle: discounted Monte-Carlo returns
    double acc = 0.0;
    std::vector<double> mc(n);
    for (int t = n - 1; t >= 0; --t) {
      acc = rewards[t] + gamma * acc;
      mc[t] = acc;
    }
    for (int t = 0; t < n; ++t) {
      require(std::abs(g.advantages[t] - (mc[t] - values[t])) <= 1e-12, "lambda=1 mismatch");
      require(std::abs(g.returns[t] - mc[t]) <= 1e-12, "lambda=1 returns mismatch");
    }
  }
}

// ---------------------------------------------------------------------------
// 5. Opponent sampler distribution and eligibility.
void criterion_sampler() {
  require(selfplay::eligible_versions(10, 0.0).first == 9 &&
              selfplay::eligible_versions(10, 0.0).last == 9,
          "eligibility K=10 delta=0");
  require(selfplay::eligible_versions(10, 0.5).first == 5 &&
              selfplay::eligible_versions(10, 0.5).last == 9,
          "eligibility K=10 delta=0.5");
  require(selfplay::eligible_versions(10, 1.0).first == 0 &&
              selfplay::eligible_versions(10, 1.0).last == 9,
          "eligibility K=10 delta=1");

  selfplay::SamplerConfig cfg;
  cfg.delta = 1.0;
  Rng rng(51);
  int counts[4] = {0, 0, 0, 0};
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) counts[selfplay::sample_opponent_version(4, cfg, rng)]++;
  for (int v = 0; v < 4; ++v) {
    const double freq = counts[v] / static_cast<double>(draws);
    require(std::abs(freq - 0.25) <= 0.01, fmt("delta=1 frequency %.4f off 0.25 +- 0.01", freq));
  }
  cfg.delta = 0.0;
  for (int i = 0; i < 10000; ++i) {
    require(selfplay::sample_opponent_version(9, cfg, rng) == 8, "delta=0 not latest-only");
  }
}

// ---------------------------------------------------------------------------
// 6. Physics invariants and terminal sparse-reward patterns.
void criterion_physics() {
  Rng rng(61);
  const arena::PhysicsConfig cfg;
  auto rand_morph = [&rng](const morph::Species& sp) {
    std::vector<double> v(sp.param_count);
    for (double& x : v) x = rng.uniform(0.5, 2.0);
    return morph::MorphVector{sp, v};
  };
  auto rand_action = [&rng](int n) {
    std::vector<double> a(n);
    for (double& v : a) v = rng.uniform(-1.0, 1.0);
    return a;
  };

  int performed = 0;
  while (performed < 10000) {
    arena::TaskKind task =
        performed % 2 == 0 ? arena::TaskKind::sumo : arena::TaskKind::run_to_goal;
    arena::ArenaState s =
        arena::reset(task, rand_morph(kAnt), rand_morph(kAnt), rng.next_u64(), cfg, {}, false);
    const double spread = performed % 3 == 0 ? 0.6 : 2.0;
    for (int i = 0; i < 2; ++i) {
      s.agents[i].position = {rng.uniform(-spread, spread), rng.uniform(-spread, spread)};
      s.agents[i].velocity = {rng.uniform(-4.0, 4.0), rng.uniform(-4.0, 4.0)};
    }
    if (arena::evaluate_result(s, cfg) != arena::RoundResult::ongoing) continue;
    std::vector<double> a0 = rand_action(4), a1 = rand_action(4);

    // determinism: bit-identical repeat
    auto [n1, o1] = arena::step(s, a0, a1, cfg);
    auto [n2, o2] = arena::step(s, a0, a1, cfg);
    for (int i = 0; i < 2; ++i) {
      require(n1.agents[i].position.x == n2.agents[i].position.x &&
                  n1.agents[i].position.y == n2.agents[i].position.y &&
                  n1.agents[i].velocity.x == n2.agents[i].velocity.x &&
                  n1.agents[i].velocity.y == n2.agents[i].velocity.y,
              "step not bit-deterministic");
    }

    // momentum bookkeeping against the independently recomputed forces
    arena::Vec2 lhs{0.0, 0.0}, rhs{0.0, 0.0};
    const std::span<const double> acts[2] = {a0, a1};
    for (int i = 0; i < 2; ++i) {
      const double m = s.bodies[i].total_mass;
      lhs = lhs + m * (n1.agents[i].velocity - s.agents[i].velocity);
      arena::Vec2 thrust{0.0, 0.0};
      if (!arena::is_stunned(s.agents[i], s.step)) {
        for (int k = 0; k < 4; ++k) {
          const double angle = 2.0 * M_PI * k / 4.0;
          arena::Vec2 u{std::cos(angle), std::sin(angle)};
          if (i == 1) u.x = -u.x;
          thrust = thrust + std::min(1.0, std::max(-1.0, acts[i][k])) *
                                s.bodies[i].leg_force[k] * u;
        }
      }
      rhs = rhs + (thrust - cfg.friction * m * s.agents[i].velocity) * cfg.dt;
    }
    require(std::abs(lhs.x - rhs.x) <= 1e-9 && std::abs(lhs.y - rhs.y) <= 1e-9,
            "momentum bookkeeping beyond 1e-9");

    // mirror equivariance
    auto [mn, mo] = arena::step(arena::mirror(s), a1, a0, cfg);
    const arena::ArenaState expect = arena::mirror(n1);
    for (int i = 0; i < 2; ++i) {
      require(std::abs(mn.agents[i].position.x - expect.agents[i].position.x) <= 1e-9 &&
                  std::abs(mn.agents[i].position.y - expect.agents[i].position.y) <= 1e-9 &&
                  std::abs(mn.agents[i].velocity.x - expect.agents[i].velocity.x) <= 1e-9 &&
                  std::abs(mn.agents[i].velocity.y - expect.agents[i].velocity.y) <= 1e-9,
              "mirror equivariance beyond 1e-9");
    }
    performed++;
  }

  // Terminal sparse patterns.
  const morph::MorphVector id = morph::identity_morph(kAnt);
  std::vector<double> zero(4, 0.0);
  {
    arena::ArenaState s = arena::reset(arena::TaskKind::sumo, id, id, 0, cfg, {}, false);
    s.agents[0].position = {2.9, 0.0};
    s.agents[0].velocity = {3.0, 0.0};
    auto [n, o] = arena::step(s, zero, zero, cfg);
    require(o.result == arena::RoundResult::beta_wins && o.sparse_rewards[0] == -2000.0 &&
                o.sparse_rewards[1] == 2000.0,
            "sumo ring-out pattern");
  }
  {
    arena::ArenaState s = arena::reset(arena::TaskKind::sumo, id, id, 0, cfg, {}, false);
    s.agents[1].position = {-2.9, 0.4};
    s.agents[1].velocity = {-3.0, 0.0};
    auto [n, o] = arena::step(s, zero, zero, cfg);
    require(o.result == arena::RoundResult::alpha_wins && o.sparse_rewards[0] == 2000.0 &&
                o.sparse_rewards[1] == -2000.0,
            "sumo ring-out pattern (beta out)");
  }
  {
    // knockout: stable-legged beta knocks alpha down
    morph::MorphVector sturdy = id;
    for (int k = 0; k < 4; ++k) {
      sturdy.values[k * morph::kParamsPerLeg + 0] = 2.0;
      sturdy.values[k * morph::kParamsPerLeg + 1] = 2.0;
      sturdy.values[k * morph::kParamsPerLeg + 3] = 2.0;
    }
    arena::ArenaState s = arena::reset(arena::TaskKind::sumo, id, sturdy, 0, cfg, {}, false);
    s.agents[0].position = {-0.3, 0.0};
    s.agents[1].position = {0.3, 0.0};
    s.agents[0].velocity = {4.0, 0.0};
    auto [n, o] = arena::step(s, zero, zero, cfg);
    require(n.agents[0].fallen && o.result == arena::RoundResult::beta_wins &&
                o.sparse_rewards[0] == -2000.0 && o.sparse_rewards[1] == 2000.0,
            "sumo knockout pattern");
  }
  {
    arena::ArenaState s = arena::reset(arena::TaskKind::sumo, id, id, 0, cfg, {}, false);
    s.step = cfg.episode_len - 1;
    auto [n, o] = arena::step(s, zero, zero, cfg);
    require(o.result == arena::RoundResult::draw && o.sparse_rewards[0] == -1000.0 &&
                o.sparse_rewards[1] == -1000.0,
            "sumo draw pattern");
  }
  {
    arena::ArenaState s = arena::reset(arena::TaskKind::run_to_goal, id, id, 0, cfg, {}, false);
    s.agents[0].position = {4.9, 0.0};
    s.agents[0].velocity = {4.0, 0.0};
    auto [n, o] = arena::step(s, zero, zero, cfg);
    require(o.result == arena::RoundResult::alpha_wins && o.sparse_rewards[0] == 1000.0 &&
                o.sparse_rewards[1] == -1000.0,
            "run_to_goal crossing pattern");
  }
  {
    arena::ArenaState s = arena::reset(arena::TaskKind::run_to_goal, id, id, 0, cfg, {}, false);
    s.agents[1].position = {-4.9, 0.0};
    s.agents[1].velocity = {-4.0, 0.0};
    auto [n, o] = arena::step(s, zero, zero, cfg);
    require(o.result == arena::RoundResult::beta_wins && o.sparse_rewards[0] == -1000.0 &&
                o.sparse_rewards[1] == 1000.0,
            "run_to_goal crossing pattern (beta)");
  }
  {
    arena::ArenaState s = arena::reset(arena::TaskKind::run_to_goal, id, id, 0, cfg, {}, false);
    s.step = cfg.episode_len - 1;
    auto [n, o] = arena::step(s, zero, zero, cfg);
    require(o.result == arena::RoundResult::draw && o.sparse_rewards[0] == 0.0 &&
                o.sparse_rewards[1] == 0.0,
            "run_to_goal timeout pattern");
  }
}

// ---------------------------------------------------------------------------
// Shared smoke-run configuration for criteria 7-9.
RunConfig smoke_config() {
  RunConfig cfg;
  cfg.task = arena::TaskKind::run_to_goal;
  cfg.species = {morph::SpeciesName::ant, morph::SpeciesName::ant};
  cfg.seed = 2024;
  cfg.workers = 2;
  return cfg;
}

// 7. Algorithm-1 structure over a 10-generation smoke run plus bit-exact
//    checkpoint resumption.
void criterion_algorithm_structure() {
  RunConfig cfg = smoke_config();
  cfg.curriculum.evolvable = {true, false};
  cfg.ppo.batch_size = 120;
  cfg.ppo.minibatch_size = 120;
  cfg.ppo.update_epochs = 2;
  cfg.sampler.n_opponents = 2;
  cfg.curriculum.warmup_generations = 2;
  cfg.curriculum.termination_generation = 50;
  cfg.curriculum.max_generations = 10;
  cfg.physics.episode_len = 25;
  cfg.policy = small_nets();

  selfplay::Trainer uninterrupted(cfg);
  int bad_trajectories = 0;
  uninterrupted.batch_observer = [&](selfplay::Player player, const ppo::RolloutBatch& batch) {
    for (const auto& traj : batch.trajectories) {
      int morphs = 0;
      for (std::size_t i = 0; i < traj.transitions.size(); ++i) {
        if (traj.transitions[i].stage == ppo::Stage::morph_generation) {
          morphs++;
          if (i != 0 || traj.transitions[i].reward != 0.0) bad_trajectories++;
        }
      }
      const int want = player == selfplay::Player::alpha ? 1 : 0;
      if (morphs != want) bad_trajectories++;
    }
  };
  for (int g = 0; g < 10; ++g) uninterrupted.step_generation();
  require(bad_trajectories == 0, "morph-stage trajectory structure violated");
  require(uninterrupted.pool(selfplay::Player::alpha).size() == 11, "alpha pool != 11");
  require(uninterrupted.pool(selfplay::Player::beta).size() == 11, "beta pool != 11");

  TempDir dir_a("competevo_accept_full");
  uninterrupted.save_checkpoint(dir_a.path.string());

  TempDir dir_b("competevo_accept_resume");
  {
    selfplay::Trainer half(cfg);
    for (int g = 0; g < 5; ++g) half.step_generation();
    half.save_checkpoint(dir_b.path.string());
  }
  selfplay::Trainer resumed = selfplay::Trainer::load_checkpoint(dir_b.path.string());
  for (int g = 0; g < 5; ++g) resumed.step_generation();
  resumed.save_checkpoint(dir_b.path.string());

  for (int player = 0; player < 2; ++player) {
    const std::string pool = player == 0 ? "pool_alpha" : "pool_beta";
    for (int v = 0; v <= 10; ++v) {
      char name[32];
      std::snprintf(name, sizeof(name), "v%05d.policy", v);
      const std::string a = read_file(dir_a.path / pool / name);
      const std::string b = read_file(dir_b.path / pool / name);
      require(!a.empty() && a == b,
              "checkpoint resume not bit-identical at " + pool + "/" + name);
    }
    const std::string opt = player == 0 ? "opt_alpha.bin" : "opt_beta.bin";
    require(read_file(dir_a.path / opt) == read_file(dir_b.path / opt),
            "optimizer state not bit-identical after resume");
  }
}

// 8. Directional training smoke: 10 warm-up + 30 self-play generations beat
//    the frozen initial policy at >= 0.8 over 100 deterministic rounds.
void criterion_training_smoke() {
  RunConfig cfg = smoke_config();
  cfg.curriculum.evolvable = {false, false};
  cfg.ppo.batch_size = 2000;
  cfg.ppo.minibatch_size = 2000;
  cfg.curriculum.warmup_generations = 10;
  cfg.curriculum.max_generations = 40;
  cfg.curriculum.termination_generation = 1000;

  selfplay::Trainer trainer(cfg);
  for (int g = 0; g < 40; ++g) trainer.step_generation();

  tour::Contender latest{trainer.pool(selfplay::Player::alpha).latest().params,
                         trainer.morph_seed(selfplay::Player::alpha), false, "trained"};
  tour::Contender frozen{trainer.pool(selfplay::Player::alpha).at(0).params,
                         trainer.morph_seed(selfplay::Player::alpha), false, "v0"};
  tour::DuelSpec spec;
  spec.a = &latest;
  spec.b = &frozen;
  spec.task = cfg.task;
  spec.rounds = 100;
  spec.mode = tour::EvalMode::deterministic_mean;
  spec.seed = 7;
  tour::WinStats stats = tour::duel(spec, cfg.physics, cfg.morphology);
  require(stats.win_rate_a >= 0.8,
          fmt("trained-vs-v0 win rate %.2f < 0.8 (%f draws)", stats.win_rate_a,
              static_cast<double>(stats.draws)));
}

// 9. Morph-evolution direction on the tug microtask: with a dense reward
//    sum_k force_k * |a_k| that is monotone in girth, 20 generations push the
//    morph-head mean girths well above 1.
void criterion_morph_direction() {
  RunConfig cfg = smoke_config();
  cfg.curriculum.evolvable = {true, true};
  cfg.ppo.batch_size = 2000;
  cfg.ppo.minibatch_size = 2000;
  cfg.ppo.learning_rate = 0.01;
  cfg.ppo.update_epochs = 10;
  cfg.curriculum.warmup_generations = 0;
  cfg.curriculum.max_generations = 20;
  cfg.curriculum.termination_generation = 100000;  // kappa stays ~1: pure dense
  cfg.physics.episode_len = 12;
  cfg.physics.goal_x = 50.0;  // keep episodes from terminating early
  cfg.policy.morph_logstd_init = -0.5;
  cfg.policy.tactics_logstd_init = -2.0;

  selfplay::Trainer trainer(cfg);
  trainer.dense_override = [](arena::TaskKind, const arena::ArenaState& before,
                              const arena::ArenaState&, int player,
                              std::span<const double> action, const arena::PhysicsConfig&) {
    double r = 0.0;
    for (std::size_t k = 0; k < action.size(); ++k) {
      r += before.bodies[player].leg_force[k] * std::abs(action[k]);
    }
    return r;
  };
  for (int g = 0; g < 20; ++g) trainer.step_generation();

  for (int player = 0; player < 2; ++player) {
    const auto& pool = trainer.pool(static_cast<selfplay::Player>(player));
    policy::GaussianDist d = policy::morph_dist(
        pool.latest().params, trainer.morph_seed(static_cast<selfplay::Player>(player)));
    morph::MorphVector m =
        morph::clamp_morph(d.mean, pool.latest().params.species, cfg.morphology);
    double acc = 0.0;
    int count = 0;
    for (int leg = 0; leg < m.species.leg_count; ++leg) {
      acc += m.leg_param(leg, 2) + m.leg_param(leg, 4);
      count += 2;
    }
    const double mean_girth = acc / count;
    require(mean_girth > 1.0, fmt("player %d girth mean %.3f not above 1.0",
                                  static_cast<double>(player), mean_girth));
    require(mean_girth >= 1.15, fmt("player %d girth mean %.3f < 1.15",
                                    static_cast<double>(player), mean_girth));
  }
}

// ---------------------------------------------------------------------------
// 10. Evaluation symmetry: mirrored deterministic self-duels only draw;
//     side alternation mirrors tallies exactly.
void criterion_evaluation_symmetry() {
  policy::PolicyConfig nets;  // default-size networks
  tour::Contender self;
  self.params = policy::init_policy(kAnt, arena::TaskKind::sumo, 404, nets);
  Rng rng(405);
  self.x = morph::draw_morph_seed(kAnt, rng);
  self.evolvable = false;
  self.label = "self";
  tour::Contender self_copy = self;

  arena::PhysicsConfig phys;
  phys.episode_len = 150;
  for (arena::TaskKind task : {arena::TaskKind::sumo, arena::TaskKind::run_to_goal}) {
    tour::DuelSpec spec;
    spec.a = &self;
    spec.b = &self_copy;
    spec.task = task;
    spec.rounds = 25;
    spec.mode = tour::EvalMode::deterministic_mean;
    spec.seed = 11;
    spec.jitter = false;
    tour::WinStats stats = tour::duel(spec, phys, {});
    require(stats.draws == spec.rounds,
            fmt("self-duel produced %.0f non-draws", double(spec.rounds - stats.draws)));
  }

  tour::Contender a;
  a.params = policy::init_policy(kAnt, arena::TaskKind::sumo, 406, nets);
  a.x = morph::draw_morph_seed(kAnt, rng);
  a.evolvable = true;
  a.label = "a";
  tour::Contender b;
  b.params = policy::init_policy(kAnt, arena::TaskKind::sumo, 407, nets);
  b.x = morph::draw_morph_seed(kAnt, rng);
  b.evolvable = false;
  b.label = "b";

  tour::DuelSpec ab;
  ab.a = &a;
  ab.b = &b;
  ab.task = arena::TaskKind::sumo;
  ab.rounds = 21;
  ab.mode = tour::EvalMode::deterministic_mean;
  ab.seed = 17;
  tour::DuelSpec ba = ab;
  ba.a = &b;
  ba.b = &a;
  tour::WinStats sab = tour::duel(ab, phys, {});
  tour::WinStats sba = tour::duel(ba, phys, {});
  require(sab.wins_a == sba.wins_b && sab.wins_b == sba.wins_a && sab.draws == sba.draws,
          "side-swapped duels are not exact mirrors");
  require(sab.wins_a + sab.wins_b + sab.draws == ab.rounds, "tally not conserved");
}

struct Criterion {
  int number;
  const char* name;
  std::function<void()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "rewards-annealing exactness (Eq. kappa blend)", criterion_annealing},
      {2, "morphology encoding conformance", criterion_encoding},
      {3, "PPO-loss gradient correctness vs finite differences", criterion_gradients},
      {4, "GAE brute-force oracle equivalence", criterion_gae},
      {5, "delta-uniform opponent sampler distribution", criterion_sampler},
      {6, "physics determinism / mirror / momentum / sparse rewards", criterion_physics},
      {7, "algorithm structure + bit-exact checkpoint resume", criterion_algorithm_structure},
      {8, "training smoke: trained tactics beat frozen v0", criterion_training_smoke},
      {9, "morph-evolution direction on the tug microtask", criterion_morph_direction},
      {10, "evaluation symmetry: self-duel draws, mirrored tallies",
       criterion_evaluation_symmetry},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    std::string error;
    try {
      c.run();
    } catch (const AcceptanceFailure& f) {
      error = f.message;
    } catch (const std::exception& e) {
      error = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (error.empty()) {
      std::printf("[PASS] %2d. %s (%.2f s)\n", c.number, c.name, seconds);
    } else {
      failures++;
      std::printf("[FAIL] %2d. %s (%.2f s): %s\n", c.number, c.name, seconds, error.c_str());
    }
    std::fflush(stdout);
  }
  std::printf("%d/%zu acceptance criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures;
}
