// Operator entry points: train / evaluate / replay / inspect-morph.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "competevo/config.hpp"
#include "competevo/errors.hpp"
#include "competevo/tournament.hpp"
#include "competevo/trainer.hpp"

namespace {

namespace fs = std::filesystem;
using namespace competevo;

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;

/// Relative paths resolve under $COMPETEVO_DIR when it is set.
std::string resolve_dir(const std::string& path) {
  if (path.empty() || fs::path(path).is_absolute()) return path;
  const char* root = std::getenv("COMPETEVO_DIR");
  if (root == nullptr || *root == '\0') return path;
  return (fs::path(root) / path).string();
}

struct PolicyRef {
  int player = 0;  // 0 alpha, 1 beta
  int version = -1;  // -1 = latest
};

PolicyRef parse_policy_ref(const std::string& ref, const RunConfig& cfg) {
  auto colon = ref.find(':');
  std::string pool = colon == std::string::npos ? ref : ref.substr(0, colon);
  std::string version = colon == std::string::npos ? "latest" : ref.substr(colon + 1);

  PolicyRef out;
  if (pool == "alpha" || pool == "a") {
    out.player = 0;
  } else if (pool == "beta" || pool == "b") {
    out.player = 1;
  } else if (pool == "evo" || pool == "fixed") {
    const bool want_evolvable = pool == "evo";
    const auto& flags = cfg.curriculum.evolvable;
    if (flags[0] == flags[1]) {
      throw ConfigError("policy ref \"" + pool + "\" is ambiguous: both players have evolvable=" +
                        (flags[0] ? "true" : "false"));
    }
    out.player = flags[0] == want_evolvable ? 0 : 1;
  } else {
    throw ConfigError("bad policy ref \"" + ref + "\": pool must be alpha|beta|evo|fixed");
  }
  if (version != "latest") {
    try {
      out.version = std::stoi(version);
    } catch (const std::exception&) {
      throw ConfigError("bad policy ref \"" + ref + "\": version must be an integer or latest");
    }
  }
  return out;
}

tour::Contender make_contender(const selfplay::Trainer& run, const PolicyRef& ref,
                               const std::string& label) {
  const auto& pool = run.pool(static_cast<selfplay::Player>(ref.player));
  const int version = ref.version < 0 ? pool.size() - 1 : ref.version;
  tour::Contender c;
  c.params = pool.at(version).params;
  c.x = run.morph_seed(static_cast<selfplay::Player>(ref.player));
  c.evolvable = run.config().curriculum.evolvable[ref.player];
  c.label = label + ":v" + std::to_string(version);
  return c;
}

std::ofstream open_out_file(const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open output file: " + path);
  return os;
}

// --- train ------------------------------------------------------------------

/// Keeps metrics records with generation < resume_generation; a resumed run
/// then reproduces the uninterrupted stream.
void truncate_metrics(const fs::path& file, int resume_generation) {
  if (!fs::exists(file)) return;
  std::ifstream in(file);
  std::vector<std::string> keep;
  std::string line;
  while (std::getline(in, line)) {
    auto pos = line.find("\"generation\":");
    if (pos != std::string::npos) {
      int gen = std::atoi(line.c_str() + pos + 13);
      if (gen >= resume_generation) continue;
    }
    keep.push_back(line);
  }
  in.close();
  std::ofstream out(file, std::ios::trunc);
  for (const auto& l : keep) out << l << "\n";
}

int cmd_train(const std::string& config_path, bool resume, double scale,
              std::optional<std::uint64_t> seed, std::optional<int> workers,
              const std::string& out_override, int checkpoint_every,
              std::optional<int> max_generations) {
  RunConfig cfg = config_path.empty() ? RunConfig{} : load_config_file(config_path);
  if (seed) cfg.seed = *seed;
  if (workers) cfg.workers = *workers;
  if (!out_override.empty()) cfg.out_dir = out_override;
  if (max_generations) cfg.curriculum.max_generations = *max_generations;
  if (scale != 1.0) apply_scale(cfg, scale);
  validate_config(cfg);
  const std::string out_dir = resolve_dir(cfg.out_dir);

  std::optional<selfplay::Trainer> run;
  if (resume && fs::exists(fs::path(out_dir) / "state.json")) {
    // Checkpoint state + requested settings; structure must match.
    run.emplace(selfplay::Trainer::load_checkpoint(out_dir, &cfg));
    std::cout << "resuming at generation " << run->generation() << "\n";
  } else {
    run.emplace(cfg);
  }

  fs::create_directories(out_dir);
  const fs::path metrics_path = fs::path(out_dir) / "metrics.jsonl";
  if (run->generation() == 0) {
    std::ofstream(metrics_path, std::ios::trunc);
  } else {
    truncate_metrics(metrics_path, run->generation());
  }

  std::ofstream metrics(metrics_path, std::ios::app);
  if (!metrics) throw IoError("cannot open " + metrics_path.string());

  run->run([&](selfplay::Trainer& t, const selfplay::GenerationMetrics& m) {
    metrics << selfplay::metrics_to_json_line(m) << "\n";
    metrics.flush();
    if ((m.generation + 1) % checkpoint_every == 0 ||
        t.generation() >= t.config().curriculum.max_generations) {
      t.save_checkpoint(out_dir);
    }
    const auto& a = m.players[0];
    const auto& b = m.players[1];
    std::printf("gen %4d  kappa=%.3f  %s  alpha W/L/D %d/%d/%d ret %.1f | beta %d/%d/%d ret %.1f"
                "  (%.1fs)\n",
                m.generation, m.kappa, m.warmup ? "warmup  " : "selfplay", a.wins, a.losses,
                a.draws, a.mean_blended_return, b.wins, b.losses, b.draws, b.mean_blended_return,
                m.wall_clock_sec);
    std::fflush(stdout);
    return true;
  });
  run->save_checkpoint(out_dir);
  std::cout << "done: " << run->generation() << " generations, checkpoint at " << out_dir << "\n";
  return kExitOk;
}

// --- evaluate ----------------------------------------------------------------

int cmd_evaluate(const std::string& dir, const std::vector<std::string>& pair, int rounds,
                 const std::string& mode_name, std::uint64_t seed, const std::string& out_path,
                 bool curve, int stride, const std::vector<std::string>& cross) {
  selfplay::Trainer run = selfplay::Trainer::load_checkpoint(resolve_dir(dir));
  const RunConfig& cfg = run.config();
  const tour::EvalMode mode = mode_name == "stochastic" ? tour::EvalMode::stochastic
                                                        : tour::EvalMode::deterministic_mean;
  std::ofstream file;
  std::ostream* os = &std::cout;
  if (!out_path.empty()) {
    file = open_out_file(resolve_dir(out_path));
    os = &file;
  }

  if (curve) {
    auto points = tour::win_rate_curve(
        run.pool(selfplay::Player::alpha), run.pool(selfplay::Player::beta),
        run.morph_seed(selfplay::Player::alpha), run.morph_seed(selfplay::Player::beta),
        cfg.curriculum.evolvable, cfg.task, stride, rounds, mode, seed, cfg.physics,
        cfg.morphology);
    tour::write_curve(*os, points);
    return kExitOk;
  }
  if (!cross.empty()) {
    std::vector<tour::Contender> contenders;
    for (const std::string& ref_text : cross) {
      PolicyRef ref = parse_policy_ref(ref_text, cfg);
      contenders.push_back(make_contender(run, ref, ref_text.substr(0, ref_text.find(':'))));
    }
    tour::CrossTable table = tour::cross_table(contenders, cfg.task, rounds, mode, seed,
                                               cfg.physics, cfg.morphology);
    tour::write_cross_table(*os, table);
    return kExitOk;
  }

  std::vector<std::string> pair_refs = pair;
  if (pair_refs.empty()) pair_refs = {"alpha:latest", "beta:latest"};
  if (pair_refs.size() != 2) throw ConfigError("--pair needs exactly two policy refs");
  tour::Contender a = make_contender(run, parse_policy_ref(pair_refs[0], cfg),
                                     pair_refs[0].substr(0, pair_refs[0].find(':')));
  tour::Contender b = make_contender(run, parse_policy_ref(pair_refs[1], cfg),
                                     pair_refs[1].substr(0, pair_refs[1].find(':')));
  tour::DuelSpec spec;
  spec.a = &a;
  spec.b = &b;
  spec.task = cfg.task;
  spec.rounds = rounds;
  spec.mode = mode;
  spec.seed = seed;
  *os << "label_a\tlabel_b\trounds\twins_a\twins_b\tdraws\twin_rate_a\twin_rate_b\t"
         "mean_episode_len\n";
  tour::write_win_stats(*os, a.label, b.label, tour::duel(spec, cfg.physics, cfg.morphology));
  return kExitOk;
}

// --- replay -------------------------------------------------------------------

int cmd_replay(const std::string& dir, const std::vector<std::string>& pair, std::uint64_t seed,
               const std::string& out_path, const std::string& mode_name) {
  selfplay::Trainer run = selfplay::Trainer::load_checkpoint(resolve_dir(dir));
  const RunConfig& cfg = run.config();
  std::vector<std::string> pair_refs = pair;
  if (pair_refs.empty()) pair_refs = {"alpha:latest", "beta:latest"};
  if (pair_refs.size() != 2) throw ConfigError("--pair needs exactly two policy refs");
  const tour::EvalMode mode = mode_name == "stochastic" ? tour::EvalMode::stochastic
                                                        : tour::EvalMode::deterministic_mean;

  tour::Contender a = make_contender(run, parse_policy_ref(pair_refs[0], cfg), "a");
  tour::Contender b = make_contender(run, parse_policy_ref(pair_refs[1], cfg), "b");
  Rng rng_a(derive_seed(seed, {0x6d726f66ULL, 0}));
  Rng rng_b(derive_seed(seed, {0x6d726f66ULL, 1}));
  std::array<morph::MorphVector, 2> morphs{
      tour::contender_morph(a, mode, rng_a, cfg.morphology),
      tour::contender_morph(b, mode, rng_b, cfg.morphology)};

  selfplay::EpisodeConfig ep;
  ep.task = cfg.task;
  ep.physics = &cfg.physics;
  ep.morph_cfg = &cfg.morphology;
  ep.seed = seed;
  const bool deterministic = mode == tour::EvalMode::deterministic_mean;
  ep.deterministic = {deterministic, deterministic};

  std::ofstream os = open_out_file(resolve_dir(out_path));
  selfplay::EpisodeSummary summary = selfplay::run_arena_episode(
      {&a.params, &b.params}, morphs, ep, nullptr, nullptr, &os);
  std::cout << "replay: " << summary.steps << " steps, result "
            << arena::result_name(summary.result) << ", trace written to " << out_path << "\n";
  return kExitOk;
}

// --- inspect-morph --------------------------------------------------------------

int cmd_inspect_morph(const std::string& dir, const std::string& pool_name,
                      const std::string& version) {
  selfplay::Trainer run = selfplay::Trainer::load_checkpoint(resolve_dir(dir));
  PolicyRef ref = parse_policy_ref(pool_name + ":" + version, run.config());
  const auto& pool = run.pool(static_cast<selfplay::Player>(ref.player));
  const int v = ref.version < 0 ? pool.size() - 1 : ref.version;
  const auto& entry = pool.at(v);

  policy::GaussianDist dist =
      policy::morph_dist(entry.params, run.morph_seed(static_cast<selfplay::Player>(ref.player)));
  morph::MorphVector mean =
      morph::clamp_morph(dist.mean, entry.params.species, run.config().morphology);

  std::printf("species=%s pool=%s version=%d evolvable=%s\n",
              morph::species_name(mean.species.name).c_str(), ref.player == 0 ? "alpha" : "beta",
              v, run.config().curriculum.evolvable[ref.player] ? "true" : "false");
  for (int leg = 0; leg < mean.species.leg_count; ++leg) {
    std::string line = "leg " + std::to_string(leg) + ":";
    for (int j = 0; j < morph::kParamsPerLeg; ++j) {
      const double value = mean.leg_param(leg, j);
      char buf[64];
      std::snprintf(buf, sizeof(buf), "  l%d=%.3f (%+.3f)", j + 1, value, value - 1.0);
      line += buf;
    }
    std::printf("%s\n", line.c_str());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"competevo: morphology/tactics co-evolution in 2D contact arenas"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "run (or resume) a self-play training run");
  std::string config_path;
  bool resume = false;
  double scale = 1.0;
  std::optional<std::uint64_t> seed_override;
  std::optional<int> workers_override;
  std::string out_override;
  int checkpoint_every = 1;
  train->add_option("--config", config_path, "JSON run config (defaults apply when omitted)");
  train->add_flag("--resume", resume, "continue from the checkpoint in the output directory");
  train->add_option("--scale", scale, "desk-scale knob: multiplies the batch size");
  std::uint64_t seed_value = 0;
  auto* seed_opt = train->add_option("--seed", seed_value, "master seed override");
  int workers_value = 0;
  auto* workers_opt = train->add_option("--workers", workers_value, "rollout worker override");
  train->add_option("--out", out_override, "output directory override");
  train->add_option("--checkpoint-every", checkpoint_every, "generations between checkpoints")
      ->check(CLI::PositiveNumber);
  int max_gen_value = 0;
  auto* max_gen_opt =
      train->add_option("--max-generations", max_gen_value, "max generation override");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "duels, win-rate curves, cross tables");
  std::string eval_dir;
  std::vector<std::string> pair;
  int rounds = 100;
  std::string mode_name = "deterministic";
  std::uint64_t eval_seed = 0;
  std::string eval_out;
  bool curve = false;
  int stride = 10;
  std::vector<std::string> cross;
  evaluate->add_option("--dir", eval_dir, "checkpoint directory")->required();
  evaluate->add_option("--pair", pair, "two policy refs, e.g. evo:latest fixed:latest")
      ->expected(2);
  evaluate->add_option("--rounds", rounds, "rounds per duel (default 100)");
  evaluate->add_option("--mode", mode_name, "deterministic|stochastic")
      ->check(CLI::IsMember({"deterministic", "stochastic"}));
  evaluate->add_option("--seed", eval_seed, "evaluation seed");
  evaluate->add_option("--out", eval_out, "write the table to this file instead of stdout");
  evaluate->add_flag("--curve", curve, "win-rate-vs-generation curve over both pools");
  evaluate->add_option("--stride", stride, "curve version stride")->check(CLI::PositiveNumber);
  evaluate->add_option("--cross", cross, "policy refs for an all-pairs cross table");

  // replay
  auto* replay = app.add_subcommand("replay", "export one episode as a text trace");
  std::string replay_dir, replay_out;
  std::vector<std::string> replay_pair;
  std::uint64_t replay_seed = 0;
  std::string replay_mode = "deterministic";
  replay->add_option("--dir", replay_dir, "checkpoint directory")->required();
  replay->add_option("--pair", replay_pair, "two policy refs")->expected(2);
  replay->add_option("--seed", replay_seed, "episode seed");
  replay->add_option("--out", replay_out, "trace output path")->required();
  replay->add_option("--mode", replay_mode, "deterministic|stochastic")
      ->check(CLI::IsMember({"deterministic", "stochastic"}));

  // inspect-morph
  auto* inspect = app.add_subcommand("inspect-morph", "print the evolved morph-head mean");
  std::string inspect_dir, inspect_pool = "alpha", inspect_version = "latest";
  inspect->add_option("--dir", inspect_dir, "checkpoint directory")->required();
  inspect->add_option("--pool", inspect_pool, "alpha|beta|evo|fixed");
  inspect->add_option("--version", inspect_version, "version number or latest");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      return cmd_train(config_path, resume, scale,
                       seed_opt->count() ? std::optional<std::uint64_t>(seed_value) : std::nullopt,
                       workers_opt->count() ? std::optional<int>(workers_value) : std::nullopt,
                       out_override, checkpoint_every,
                       max_gen_opt->count() ? std::optional<int>(max_gen_value) : std::nullopt);
    }
    if (*evaluate) {
      return cmd_evaluate(eval_dir, pair, rounds, mode_name, eval_seed, eval_out, curve, stride,
                          cross);
    }
    if (*replay) {
      return cmd_replay(replay_dir, replay_pair, replay_seed, replay_out, replay_mode);
    }
    if (*inspect) {
      return cmd_inspect_morph(inspect_dir, inspect_pool, inspect_version);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return kExitIo;
  } catch (const LookupError& e) {
    std::cerr << "lookup error: " << e.what() << "\n";
    return kExitIo;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitOther;
  }
  return kExitOther;
}
