#include "competevo/trainer.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "competevo/binio.hpp"
#include "competevo/errors.hpp"

namespace competevo::selfplay {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kTagInit = 0x696e6974ULL;      // policy init streams
constexpr std::uint64_t kTagMorphSeed = 0x7853656cULL; // per-player x draws
constexpr std::uint64_t kTagOpponents = 0x6f707073ULL; // opponent sampling
constexpr std::uint64_t kTagEpisode = 0x65706973ULL;   // episode seeds
constexpr std::uint64_t kTagShuffle = 0x75706474ULL;   // minibatch shuffles

/// Index-parallel execution with deterministic result placement; the first
/// worker exception is rethrown on the caller thread.
template <typename Fn>
void parallel_for(int begin, int end, int workers, Fn&& fn) {
  if (workers <= 1 || end - begin <= 1) {
    for (int i = begin; i < end; ++i) fn(i);
    return;
  }
  std::atomic<int> next{begin};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    try {
      for (int i = next.fetch_add(1); i < end; i = next.fetch_add(1)) fn(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
      next.store(end);
    }
  };
  std::vector<std::thread> pool;
  const int extra = std::min(workers, end - begin) - 1;
  pool.reserve(extra);
  for (int w = 0; w < extra; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

double tactics_entropy(const policy::PolicyParams& p) {
  policy::GaussianDist d;
  auto ls = p.tactics_logstd();
  d.mean.assign(ls.size(), 0.0);
  d.log_std.assign(ls.begin(), ls.end());
  return policy::entropy(d);
}

std::string pool_dir_name(int player) { return player == 0 ? "pool_alpha" : "pool_beta"; }

std::string version_file_name(int version) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "v%05d.policy", version);
  return buf;
}

void atomic_write(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

void save_optimizer(const fs::path& path, const ppo::OptimizerState& opt) {
  std::ostringstream os;
  os << "competevo-adam v1 params=" << opt.m.size() << " step=" << opt.step << "\n";
  binio::write_f64le(os, opt.m);
  binio::write_f64le(os, opt.v);
  atomic_write(path, os.str());
}

void load_optimizer(const fs::path& path, ppo::OptimizerState& opt) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("missing optimizer file " + path.string());
  std::string line;
  std::getline(is, line);
  std::size_t n = 0;
  long long step = 0;
  if (std::sscanf(line.c_str(), "competevo-adam v1 params=%zu step=%lld", &n, &step) != 2) {
    throw CheckpointError("bad optimizer header in " + path.string());
  }
  if (n != opt.m.size()) {
    throw CheckpointError("optimizer size " + std::to_string(n) + " does not match policy (" +
                          std::to_string(opt.m.size()) + ")");
  }
  opt.step = step;
  binio::read_f64le(is, opt.m);
  binio::read_f64le(is, opt.v);
}

}  // namespace

std::string metrics_to_json_line(const GenerationMetrics& m) {
  nlohmann::json rec;
  rec["generation"] = m.generation;
  rec["kappa"] = m.kappa;
  rec["phase"] = m.warmup ? "warmup" : "selfplay";
  const char* names[2] = {"alpha", "beta"};
  for (int i = 0; i < 2; ++i) {
    const auto& p = m.players[i];
    rec[names[i]] = {{"episodes", p.episodes},
                     {"transitions", p.transitions},
                     {"mean_dense_return", p.mean_dense_return},
                     {"mean_sparse_return", p.mean_sparse_return},
                     {"mean_blended_return", p.mean_blended_return},
                     {"mean_episode_len", p.mean_episode_len},
                     {"wins", p.wins},
                     {"losses", p.losses},
                     {"draws", p.draws},
                     {"entropy", p.entropy},
                     {"grad_norm", p.grad_norm},
                     {"loss", p.loss}};
  }
  rec["wall_clock_sec"] = m.wall_clock_sec;
  return rec.dump();
}

Trainer::Trainer(RunConfig cfg) : cfg_(std::move(cfg)) {
  validate_config(cfg_);
  for (int i = 0; i < 2; ++i) {
    morph::Species species = morph::species_template(cfg_.species[i]);
    auto params = policy::init_policy(
        species, cfg_.task,
        derive_seed(cfg_.seed, {kTagInit, static_cast<std::uint64_t>(i)}), cfg_.policy);
    optimizers_[i] = ppo::make_optimizer(params, cfg_.ppo.learning_rate);
    pools_[i].append(std::move(params), 0, 0.0);
    Rng xrng(derive_seed(cfg_.seed, {kTagMorphSeed, static_cast<std::uint64_t>(i)}));
    x_[i] = morph::draw_morph_seed(species, xrng);
  }
}

Trainer::Trainer(RunConfig cfg, LoadTag) : cfg_(std::move(cfg)) { validate_config(cfg_); }

void Trainer::collect_vs(int player, const policy::PolicyParams& opponent, int opponent_index,
                         int budget, double kappa, bool warmup, ppo::RolloutBatch& batch) {
  const policy::PolicyParams& learner = pools_[player].latest().params;
  const DenseRewardFn* override_fn = dense_override ? &dense_override : nullptr;

  auto run_one = [&](int episode_idx) -> ppo::Trajectory {
    RunEpisodeInputs in;
    in.learner = &learner;
    in.opponent = &opponent;
    in.learner_slot = player;
    in.task = cfg_.task;
    in.kappa = kappa;
    in.evolvable = cfg_.curriculum.evolvable;
    in.x_learner = &x_[player];
    in.x_opponent = &x_[1 - player];
    in.seed = derive_seed(cfg_.seed, {kTagEpisode, static_cast<std::uint64_t>(generation_),
                                      static_cast<std::uint64_t>(player),
                                      static_cast<std::uint64_t>(opponent_index),
                                      static_cast<std::uint64_t>(episode_idx)});
    in.warmup = warmup;
    in.physics = &cfg_.physics;
    in.morph_cfg = &cfg_.morphology;
    in.dense_override = override_fn;
    return run_episode(in);
  };

  // Episodes are pre-assigned seeds by index and selected in index order, so
  // the collected set is identical for any worker count or schedule.
  std::vector<ppo::Trajectory> trajectories;
  int produced = 0;
  int kept = 0;
  while (true) {
    int selected = 0;
    kept = 0;
    for (int e = 0; e < produced; ++e) {
      selected += static_cast<int>(trajectories[e].transitions.size());
      kept = e + 1;
      if (selected >= budget) break;
    }
    if (selected >= budget) break;
    const int wave = std::max(2 * cfg_.workers, 2);
    trajectories.resize(produced + wave);
    parallel_for(produced, produced + wave, cfg_.workers,
                 [&](int e) { trajectories[e] = run_one(e); });
    produced += wave;
  }
  for (int e = 0; e < kept; ++e) {
    batch.total_transitions += static_cast<int>(trajectories[e].transitions.size());
    batch.trajectories.push_back(std::move(trajectories[e]));
  }
}

ppo::RolloutBatch Trainer::collect_batch(int player, double kappa, bool warmup,
                                         PlayerGenerationMetrics& pm) {
  const PolicyPool& opponent_pool = pools_[1 - player];

  std::vector<int> opponent_versions;
  if (warmup) {
    // Warm-up trains locomotion only; play against the opponent's latest.
    opponent_versions.push_back(opponent_pool.size() - 1);
  } else {
    Rng rng(derive_seed(cfg_.seed, {kTagOpponents, static_cast<std::uint64_t>(generation_),
                                    static_cast<std::uint64_t>(player)}));
    for (int k = 0; k < cfg_.sampler.n_opponents; ++k) {
      opponent_versions.push_back(sample_opponent_version(opponent_pool.size(), cfg_.sampler, rng));
    }
  }

  ppo::RolloutBatch batch;
  batch.generation = generation_;
  const int n = static_cast<int>(opponent_versions.size());
  for (int k = 0; k < n; ++k) {
    int budget = cfg_.ppo.batch_size / n + (k < cfg_.ppo.batch_size % n ? 1 : 0);
    if (budget <= 0) continue;
    collect_vs(player, opponent_pool.at(opponent_versions[k]).params, k, budget, kappa, warmup,
               batch);
  }

  pm.episodes = static_cast<int>(batch.trajectories.size());
  pm.transitions = batch.total_transitions;
  const auto learner_wins =
      player == 0 ? arena::RoundResult::alpha_wins : arena::RoundResult::beta_wins;
  const auto learner_loses =
      player == 0 ? arena::RoundResult::beta_wins : arena::RoundResult::alpha_wins;
  for (const auto& traj : batch.trajectories) {
    pm.mean_dense_return += traj.dense_return;
    pm.mean_sparse_return += traj.sparse_return;
    pm.mean_episode_len += traj.arena_steps;
    double blended = 0.0;
    for (const auto& tr : traj.transitions) blended += tr.reward;
    pm.mean_blended_return += blended;
    if (traj.result == learner_wins) {
      pm.wins += 1;
    } else if (traj.result == learner_loses) {
      pm.losses += 1;
    } else {
      pm.draws += 1;
    }
  }
  if (pm.episodes > 0) {
    pm.mean_dense_return /= pm.episodes;
    pm.mean_sparse_return /= pm.episodes;
    pm.mean_blended_return /= pm.episodes;
    pm.mean_episode_len /= pm.episodes;
  }
  return batch;
}

void Trainer::step_generation() {
  if (generation_ >= cfg_.curriculum.max_generations) {
    throw ContractViolation("step_generation: max_generations reached");
  }
  const auto t_start = std::chrono::steady_clock::now();
  const int t = generation_;
  const bool warmup = t < cfg_.curriculum.warmup_generations;
  const double kappa =
      warmup ? 1.0 : ppo::anneal_factor(t, cfg_.curriculum.termination_generation);
  const bool morph_entropy = t < cfg_.curriculum.termination_generation;

  GenerationMetrics gm;
  gm.generation = t;
  gm.kappa = kappa;
  gm.warmup = warmup;

  for (int player = 0; player < 2; ++player) {
    PlayerGenerationMetrics& pm = gm.players[player];
    ppo::RolloutBatch batch = collect_batch(player, kappa, warmup, pm);
    if (batch_observer) batch_observer(static_cast<Player>(player), batch);

    ppo::UpdateStats stats;
    const int new_version = pools_[player].size();
    auto new_params = ppo::update(
        pools_[player].latest().params, batch, cfg_.ppo, optimizers_[player],
        derive_seed(cfg_.seed, {kTagShuffle, static_cast<std::uint64_t>(t),
                                static_cast<std::uint64_t>(player)}),
        new_version, morph_entropy, &stats);
    pm.grad_norm = stats.mean_grad_norm;
    pm.loss = stats.mean_loss;
    pm.entropy = tactics_entropy(new_params);
    const double win_rate = pm.episodes > 0 ? static_cast<double>(pm.wins) / pm.episodes : 0.0;
    pools_[player].append(std::move(new_params), new_version, win_rate);
  }

  generation_ += 1;
  gm.wall_clock_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  last_metrics_ = gm;
}

void Trainer::run(const std::function<bool(Trainer&, const GenerationMetrics&)>& on_generation) {
  while (generation_ < cfg_.curriculum.max_generations) {
    step_generation();
    if (on_generation && !on_generation(*this, last_metrics_)) break;
  }
}

void Trainer::save_checkpoint(const std::string& dir) const {
  fs::path root(dir);
  fs::create_directories(root);
  atomic_write(root / "config.json", config_to_json(cfg_));

  for (int player = 0; player < 2; ++player) {
    const fs::path pool_dir = root / pool_dir_name(player);
    fs::create_directories(pool_dir);
    const PolicyPool& pool = pools_[player];
    for (int v = 0; v < pool.size(); ++v) {
      const fs::path file = pool_dir / version_file_name(v);
      if (fs::exists(file)) continue;  // append-only
      const PoolEntry& entry = pool.at(v);
      std::ostringstream os;
      policy::PolicyFileMeta meta{entry.version, entry.generation, entry.win_rate};
      policy::save_policy(os, entry.params, x_[player], meta, cfg_.policy);
      atomic_write(file, os.str());
    }
    save_optimizer(root / (player == 0 ? "opt_alpha.bin" : "opt_beta.bin"), optimizers_[player]);
  }

  nlohmann::json state;
  state["format"] = "competevo-checkpoint v1";
  state["generation"] = generation_;
  state["pool_sizes"] = {pools_[0].size(), pools_[1].size()};
  atomic_write(root / "state.json", state.dump(2) + "\n");
}

Trainer Trainer::load_checkpoint(const std::string& dir, const RunConfig* override_config) {
  fs::path root(dir);
  if (!fs::exists(root / "state.json")) {
    throw CheckpointError("no checkpoint at " + root.string());
  }
  RunConfig cfg = load_config_file((root / "config.json").string());
  if (override_config != nullptr) {
    ensure_compatible(*override_config, cfg);
    cfg = *override_config;
  }

  nlohmann::json state;
  {
    std::ifstream is(root / "state.json");
    if (!is) throw CheckpointError("cannot read " + (root / "state.json").string());
    try {
      is >> state;
    } catch (const nlohmann::json::exception& e) {
      throw CheckpointError(std::string("corrupt state.json: ") + e.what());
    }
  }
  if (state.value("format", "") != std::string("competevo-checkpoint v1")) {
    throw CheckpointError("unrecognized checkpoint format");
  }

  Trainer t(std::move(cfg), LoadTag{});
  t.generation_ = state.at("generation").get<int>();
  auto pool_sizes = state.at("pool_sizes").get<std::vector<int>>();
  if (pool_sizes.size() != 2) throw CheckpointError("state.json: bad pool_sizes");

  for (int player = 0; player < 2; ++player) {
    const fs::path pool_dir = root / pool_dir_name(player);
    const morph::Species expected = morph::species_template(t.cfg_.species[player]);
    for (int v = 0; v < pool_sizes[player]; ++v) {
      const fs::path file = pool_dir / version_file_name(v);
      std::ifstream is(file, std::ios::binary);
      if (!is) throw CheckpointError("missing pool file " + file.string());
      policy::LoadedPolicy loaded;
      try {
        loaded = policy::load_policy(is);
      } catch (const CheckpointError& e) {
        throw CheckpointError(file.string() + ": " + e.what());
      }
      if (!(loaded.params.species == expected)) {
        throw CheckpointError(file.string() + ": species does not match run config");
      }
      if (loaded.params.task != t.cfg_.task) {
        throw CheckpointError(file.string() + ": task does not match run config");
      }
      if (v == 0) t.x_[player] = loaded.x;
      t.pools_[player].append(std::move(loaded.params), loaded.meta.generation,
                              loaded.meta.win_rate);
    }
    t.optimizers_[player] =
        ppo::make_optimizer(t.pools_[player].latest().params, t.cfg_.ppo.learning_rate);
    load_optimizer(root / (player == 0 ? "opt_alpha.bin" : "opt_beta.bin"),
                   t.optimizers_[player]);
  }
  return t;
}

void Trainer::ensure_compatible(const RunConfig& requested, const RunConfig& stored) {
  if (requested.task != stored.task) {
    throw CheckpointError("checkpoint task does not match requested config");
  }
  for (int i = 0; i < 2; ++i) {
    if (requested.species[i] != stored.species[i]) {
      throw CheckpointError("checkpoint species do not match requested config");
    }
  }
  if (requested.policy.tactics_hidden != stored.policy.tactics_hidden ||
      requested.policy.value_hidden != stored.policy.value_hidden ||
      requested.policy.morph_hidden != stored.policy.morph_hidden) {
    throw CheckpointError("checkpoint network architecture does not match requested config");
  }
}

}  // namespace competevo::selfplay
