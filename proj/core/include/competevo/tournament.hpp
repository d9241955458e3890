#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "competevo/selfplay.hpp"

namespace competevo::tour {

enum class EvalMode { deterministic_mean, stochastic };

/// One side of a duel: a policy snapshot plus everything needed to realize
/// its morph (the fixed seed x and whether the morph head is in use).
struct Contender {
  policy::PolicyParams params;
  morph::InitialMorphSeed x;
  bool evolvable = false;
  std::string label;
};

struct DuelSpec {
  const Contender* a = nullptr;
  const Contender* b = nullptr;
  arena::TaskKind task{};
  int rounds = 100;
  EvalMode mode = EvalMode::deterministic_mean;
  std::uint64_t seed = 0;
  bool jitter = true;
  bool alternate_sides = true;  // odd rounds swap which side starts left
};

struct WinStats {
  int rounds = 0;
  int wins_a = 0;
  int wins_b = 0;
  int draws = 0;
  double win_rate_a = 0.0;
  double win_rate_b = 0.0;
  double mean_episode_len = 0.0;
};

/// The morph a contender fights with: clamped morph-head mean in
/// deterministic mode, a clamped sample in stochastic mode, identity when
/// not evolvable.
morph::MorphVector contender_morph(const Contender& c, EvalMode mode, Rng& rng,
                                   const morph::MorphConfig& morph_cfg);

/// Plays spec.rounds seeded episodes and tallies results. Round seeds derive
/// from spec.seed; with alternate_sides, odd rounds start the contenders on
/// swapped sides (results are mapped back, canceling start-side bias).
WinStats duel(const DuelSpec& spec, const arena::PhysicsConfig& physics,
              const morph::MorphConfig& morph_cfg);

struct CurvePoint {
  int generation = 0;
  WinStats stats;
};

/// Same-version duels down two pools at the given stride (version 0, stride,
/// 2*stride, ... up to the shortest pool).
std::vector<CurvePoint> win_rate_curve(const selfplay::PolicyPool& pool_a,
                                       const selfplay::PolicyPool& pool_b,
                                       const morph::InitialMorphSeed& x_a,
                                       const morph::InitialMorphSeed& x_b,
                                       std::array<bool, 2> evolvable, arena::TaskKind task,
                                       int stride, int rounds, EvalMode mode, std::uint64_t seed,
                                       const arena::PhysicsConfig& physics,
                                       const morph::MorphConfig& morph_cfg);

struct CrossTable {
  std::vector<std::string> labels;
  std::vector<WinStats> cells;  // row-major, cells[i * n + j] = duel(i, j)

  const WinStats& at(int row, int col) const { return cells[row * labels.size() + col]; }
};

/// All-pairs duels over the supplied contenders. Unordered pairs are played
/// once and mirrored into the transposed cell; diagonal entries are all-draw
/// by construction and are not played.
CrossTable cross_table(std::span<const Contender> contenders, arena::TaskKind task, int rounds,
                       EvalMode mode, std::uint64_t seed, const arena::PhysicsConfig& physics,
                       const morph::MorphConfig& morph_cfg);

/// Delimited text exports (consumed by the CLI).
void write_win_stats(std::ostream& os, const std::string& label_a, const std::string& label_b,
                     const WinStats& stats);
void write_curve(std::ostream& os, std::span<const CurvePoint> curve);
void write_cross_table(std::ostream& os, const CrossTable& table);

}  // namespace competevo::tour
