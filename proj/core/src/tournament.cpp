#include "competevo/tournament.hpp"

#include <cstdio>
#include <ostream>

#include "competevo/errors.hpp"

namespace competevo::tour {

namespace {

constexpr std::uint64_t kTagRound = 0x726f756eULL;
constexpr std::uint64_t kTagMorph = 0x6d726f66ULL;

struct RoundResultTally {
  arena::RoundResult result;
  int steps;
};

RoundResultTally play_round(const Contender& left, const Contender& right,
                            const DuelSpec& spec, std::uint64_t round_seed,
                            const arena::PhysicsConfig& physics,
                            const morph::MorphConfig& morph_cfg) {
  Rng morph_rng_l(derive_seed(round_seed, {kTagMorph, 0}));
  Rng morph_rng_r(derive_seed(round_seed, {kTagMorph, 1}));
  std::array<morph::MorphVector, 2> morphs{
      contender_morph(left, spec.mode, morph_rng_l, morph_cfg),
      contender_morph(right, spec.mode, morph_rng_r, morph_cfg)};

  selfplay::EpisodeConfig ep;
  ep.task = spec.task;
  ep.physics = &physics;
  ep.morph_cfg = &morph_cfg;
  ep.seed = round_seed;
  ep.jitter = spec.jitter;
  const bool deterministic = spec.mode == EvalMode::deterministic_mean;
  ep.deterministic = {deterministic, deterministic};

  selfplay::EpisodeSummary summary = selfplay::run_arena_episode(
      {&left.params, &right.params}, morphs, ep, nullptr, nullptr, nullptr);
  return {summary.result, summary.steps};
}

}  // namespace

morph::MorphVector contender_morph(const Contender& c, EvalMode mode, Rng& rng,
                                   const morph::MorphConfig& morph_cfg) {
  if (!c.evolvable) return morph::identity_morph(c.params.species);
  policy::GaussianDist dist = policy::morph_dist(c.params, c.x);
  if (mode == EvalMode::deterministic_mean) {
    return morph::clamp_morph(dist.mean, c.params.species, morph_cfg);
  }
  return morph::clamp_morph(policy::sample(dist, rng), c.params.species, morph_cfg);
}

WinStats duel(const DuelSpec& spec, const arena::PhysicsConfig& physics,
              const morph::MorphConfig& morph_cfg) {
  if (spec.a == nullptr || spec.b == nullptr) throw LookupError("duel: missing contender");
  if (spec.rounds < 1) throw ContractViolation("duel: rounds must be >= 1");

  WinStats stats;
  stats.rounds = spec.rounds;
  long total_steps = 0;
  for (int r = 0; r < spec.rounds; ++r) {
    const std::uint64_t round_seed =
        derive_seed(spec.seed, {kTagRound, static_cast<std::uint64_t>(r)});
    const bool swapped = spec.alternate_sides && (r % 2 == 1);
    const Contender& left = swapped ? *spec.b : *spec.a;
    const Contender& right = swapped ? *spec.a : *spec.b;
    RoundResultTally round = play_round(left, right, spec, round_seed, physics, morph_cfg);
    total_steps += round.steps;

    arena::RoundResult result = round.result;
    if (swapped) {
      if (result == arena::RoundResult::alpha_wins) {
        result = arena::RoundResult::beta_wins;
      } else if (result == arena::RoundResult::beta_wins) {
        result = arena::RoundResult::alpha_wins;
      }
    }
    switch (result) {
      case arena::RoundResult::alpha_wins:
        stats.wins_a += 1;
        break;
      case arena::RoundResult::beta_wins:
        stats.wins_b += 1;
        break;
      default:
        stats.draws += 1;
        break;
    }
  }
  stats.win_rate_a = static_cast<double>(stats.wins_a) / spec.rounds;
  stats.win_rate_b = static_cast<double>(stats.wins_b) / spec.rounds;
  stats.mean_episode_len = static_cast<double>(total_steps) / spec.rounds;
  return stats;
}

std::vector<CurvePoint> win_rate_curve(const selfplay::PolicyPool& pool_a,
                                       const selfplay::PolicyPool& pool_b,
                                       const morph::InitialMorphSeed& x_a,
                                       const morph::InitialMorphSeed& x_b,
                                       std::array<bool, 2> evolvable, arena::TaskKind task,
                                       int stride, int rounds, EvalMode mode, std::uint64_t seed,
                                       const arena::PhysicsConfig& physics,
                                       const morph::MorphConfig& morph_cfg) {
  if (stride < 1) throw ContractViolation("win_rate_curve: stride must be >= 1");
  if (pool_a.size() == 0 || pool_b.size() == 0) {
    throw ContractViolation("win_rate_curve: empty pool");
  }
  const int max_version = std::min(pool_a.size(), pool_b.size()) - 1;
  std::vector<CurvePoint> curve;
  for (int v = 0; v <= max_version; v += stride) {
    Contender a{pool_a.at(v).params, x_a, evolvable[0], "alpha:v" + std::to_string(v)};
    Contender b{pool_b.at(v).params, x_b, evolvable[1], "beta:v" + std::to_string(v)};
    DuelSpec spec;
    spec.a = &a;
    spec.b = &b;
    spec.task = task;
    spec.rounds = rounds;
    spec.mode = mode;
    spec.seed = derive_seed(seed, {0x63757276ULL, static_cast<std::uint64_t>(v)});
    curve.push_back(CurvePoint{v, duel(spec, physics, morph_cfg)});
  }
  return curve;
}

CrossTable cross_table(std::span<const Contender> contenders, arena::TaskKind task, int rounds,
                       EvalMode mode, std::uint64_t seed, const arena::PhysicsConfig& physics,
                       const morph::MorphConfig& morph_cfg) {
  const int n = static_cast<int>(contenders.size());
  CrossTable table;
  table.labels.reserve(n);
  for (const Contender& c : contenders) table.labels.push_back(c.label);
  table.cells.assign(static_cast<std::size_t>(n) * n, WinStats{});

  for (int i = 0; i < n; ++i) {
    // Identical deterministic policies from mirrored starts can only draw.
    WinStats diag;
    diag.rounds = rounds;
    diag.draws = rounds;
    table.cells[static_cast<std::size_t>(i) * n + i] = diag;
    for (int j = i + 1; j < n; ++j) {
      DuelSpec spec;
      spec.a = &contenders[i];
      spec.b = &contenders[j];
      spec.task = task;
      spec.rounds = rounds;
      spec.mode = mode;
      spec.seed = derive_seed(
          seed, {0x63726f73ULL, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j)});
      WinStats stats = duel(spec, physics, morph_cfg);
      table.cells[static_cast<std::size_t>(i) * n + j] = stats;
      WinStats transposed = stats;
      std::swap(transposed.wins_a, transposed.wins_b);
      std::swap(transposed.win_rate_a, transposed.win_rate_b);
      table.cells[static_cast<std::size_t>(j) * n + i] = transposed;
    }
  }
  return table;
}

void write_win_stats(std::ostream& os, const std::string& label_a, const std::string& label_b,
                     const WinStats& stats) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%s\t%s\t%d\t%d\t%d\t%d\t%.4f\t%.4f\t%.2f", label_a.c_str(),
                label_b.c_str(), stats.rounds, stats.wins_a, stats.wins_b, stats.draws,
                stats.win_rate_a, stats.win_rate_b, stats.mean_episode_len);
  os << buf << "\n";
}

void write_curve(std::ostream& os, std::span<const CurvePoint> curve) {
  os << "generation\trounds\twins_a\twins_b\tdraws\twin_rate_a\twin_rate_b\tmean_episode_len\n";
  for (const CurvePoint& p : curve) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%d\t%d\t%d\t%d\t%d\t%.4f\t%.4f\t%.2f", p.generation,
                  p.stats.rounds, p.stats.wins_a, p.stats.wins_b, p.stats.draws,
                  p.stats.win_rate_a, p.stats.win_rate_b, p.stats.mean_episode_len);
    os << buf << "\n";
  }
}

void write_cross_table(std::ostream& os, const CrossTable& table) {
  const int n = static_cast<int>(table.labels.size());
  os << "win_rate_row_vs_col";
  for (const auto& label : table.labels) os << "\t" << label;
  os << "\n";
  for (int i = 0; i < n; ++i) {
    os << table.labels[i];
    for (int j = 0; j < n; ++j) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "\t%.4f", table.at(i, j).win_rate_a);
      os << buf;
    }
    os << "\n";
  }
  os << "\ncounts (wins/draws/losses of row vs col)\n";
  for (int i = 0; i < n; ++i) {
    os << table.labels[i];
    for (int j = 0; j < n; ++j) {
      const WinStats& s = table.at(i, j);
      char buf[48];
      std::snprintf(buf, sizeof(buf), "\t%d/%d/%d", s.wins_a, s.draws, s.wins_b);
      os << buf;
    }
    os << "\n";
  }
}

}  // namespace competevo::tour
