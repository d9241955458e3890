#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "competevo/rng.hpp"

namespace competevo::morph {

/// Per-leg encoding layout, shared by all species:
///   l1 = thigh-to-torso distance factor
///   l2 = thigh length factor
///   l3 = thigh girth factor
///   l4 = lower-leg length factor
///   l5 = lower-leg girth factor
/// A morph vector is leg-major: element 5*k + j is parameter j of leg k.
inline constexpr int kParamsPerLeg = 5;

enum class SpeciesName { ant, bug, spider };

struct Species {
  SpeciesName name{};
  int leg_count = 0;
  int param_count = 0;  // always 5 * leg_count

  friend bool operator==(const Species&, const Species&) = default;
};

/// Physical constants for the surrogate capability laws. All configurable
/// through the run config; defaults sized so an unscaled agent crosses the
/// run-to-goal arena well within the episode limit.
struct MorphConfig {
  double s_min = 0.5;       // scale-factor lower clamp bound
  double s_max = 2.0;       // scale-factor upper clamp bound
  double f0 = 10.0;         // per-leg thrust at girth 1
  double m0 = 0.25;         // per-leg mass at unit length*girth
  double r0 = 0.4;          // per-leg support reach at unit lengths
  double torso_mass = 1.0;
  double rho0 = 0.35;       // contact radius at unit torso offset
  double stab0 = 6.0;       // knockdown impulse threshold per unit reach
  double e0 = 0.01;         // energy cost per unit thrust
};

/// Flat vector of scale factors relative to the original design.
struct MorphVector {
  Species species{};
  std::vector<double> values;  // length species.param_count, leg-major

  double leg_param(int leg, int param) const { return values[leg * kParamsPerLeg + param]; }
};

/// Simulator-facing physical quantities derived from a MorphVector.
struct BodyProperties {
  Species species{};
  std::vector<double> leg_force;  // per-leg max thrust magnitude
  std::vector<double> leg_mass;
  std::vector<double> leg_reach;  // per-leg support radius
  double total_mass = 0.0;
  double contact_radius = 0.0;
  double stability = 0.0;     // knockdown impulse threshold
  double energy_coeff = 0.0;  // per-unit-thrust energy cost
};

/// Fixed randomized conditioning input of the morph sub-policy; drawn once
/// per run per player and held constant.
struct InitialMorphSeed {
  std::vector<double> x;  // length species.param_count
};

Species species_template(SpeciesName name);

/// Parses "ant"/"bug"/"spider"; throws InvalidSpeciesError otherwise.
Species species_template(std::string_view name);

std::string species_name(SpeciesName name);

/// All scale factors 1.0 (the unscaled original design).
MorphVector identity_morph(const Species& species);

/// Clamps every raw value into [s_min, s_max]. Throws DimensionError on a
/// length mismatch and InvalidValueError on non-finite input.
MorphVector clamp_morph(std::span<const double> raw, const Species& species,
                        const MorphConfig& cfg = {});

/// Maps a clamped morph to physical body properties:
///   leg_force_k  = f0 * (l3 + l5) / 2          (linear in girths)
///   leg_mass_k   = m0 * (l2*l3 + l4*l5) / 2    (length x girth per segment)
///   leg_reach_k  = r0 * (l1 + l2 + l4) / 3
///   total_mass   = torso_mass + sum leg_mass
///   contact_radius = rho0 * mean_k(l1_k)
///   stability    = stab0 * min_k(leg_reach_k)  (weakest support direction)
/// Throws InvalidMorphError on unclamped or non-finite input.
BodyProperties derive_body(const MorphVector& m, const MorphConfig& cfg = {});

/// Leg-major flat view / reconstruction; lossless round-trip.
std::vector<double> flatten(const MorphVector& m);
MorphVector restore(const Species& species, std::span<const double> raw);

/// Draws x uniformly from [0.9, 1.1] per element.
InitialMorphSeed draw_morph_seed(const Species& species, Rng& rng);

}  // namespace competevo::morph
