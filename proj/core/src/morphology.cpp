#include "competevo/morphology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "competevo/errors.hpp"

namespace competevo::morph {

Species species_template(SpeciesName name) {
  switch (name) {
    case SpeciesName::ant:
      return Species{SpeciesName::ant, 4, 20};
    case SpeciesName::bug:
      return Species{SpeciesName::bug, 6, 30};
    case SpeciesName::spider:
      return Species{SpeciesName::spider, 8, 40};
  }
  throw InvalidSpeciesError("unknown species enum value");
}

Species species_template(std::string_view name) {
  if (name == "ant") return species_template(SpeciesName::ant);
  if (name == "bug") return species_template(SpeciesName::bug);
  if (name == "spider") return species_template(SpeciesName::spider);
  throw InvalidSpeciesError("unknown species name: \"" + std::string(name) + "\"");
}

std::string species_name(SpeciesName name) {
  switch (name) {
    case SpeciesName::ant:
      return "ant";
    case SpeciesName::bug:
      return "bug";
    case SpeciesName::spider:
      return "spider";
  }
  return "?";
}

MorphVector identity_morph(const Species& species) {
  return MorphVector{species, std::vector<double>(species.param_count, 1.0)};
}

MorphVector clamp_morph(std::span<const double> raw, const Species& species,
                        const MorphConfig& cfg) {
  if (static_cast<int>(raw.size()) != species.param_count) {
    throw DimensionError("clamp_morph: got " + std::to_string(raw.size()) + " values, species " +
                         species_name(species.name) + " needs " +
                         std::to_string(species.param_count));
  }
  MorphVector m{species, std::vector<double>(raw.size())};
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!std::isfinite(raw[i])) {
      throw InvalidValueError("clamp_morph: non-finite value at index " + std::to_string(i));
    }
    m.values[i] = std::min(cfg.s_max, std::max(cfg.s_min, raw[i]));
  }
  return m;
}

BodyProperties derive_body(const MorphVector& m, const MorphConfig& cfg) {
  const Species& sp = m.species;
  if (static_cast<int>(m.values.size()) != sp.param_count) {
    throw InvalidMorphError("derive_body: value count does not match species");
  }
  for (double v : m.values) {
    if (!std::isfinite(v) || v < cfg.s_min || v > cfg.s_max) {
      throw InvalidMorphError("derive_body: morph value " + std::to_string(v) +
                              " outside clamp bounds");
    }
  }

  BodyProperties body;
  body.species = sp;
  body.leg_force.resize(sp.leg_count);
  body.leg_mass.resize(sp.leg_count);
  body.leg_reach.resize(sp.leg_count);

  double mass_sum = 0.0;
  double l1_sum = 0.0;
  double min_reach = std::numeric_limits<double>::infinity();
  for (int k = 0; k < sp.leg_count; ++k) {
    const double l1 = m.leg_param(k, 0);
    const double l2 = m.leg_param(k, 1);
    const double l3 = m.leg_param(k, 2);
    const double l4 = m.leg_param(k, 3);
    const double l5 = m.leg_param(k, 4);
    body.leg_force[k] = cfg.f0 * (l3 + l5) / 2.0;
    body.leg_mass[k] = cfg.m0 * (l2 * l3 + l4 * l5) / 2.0;
    body.leg_reach[k] = cfg.r0 * (l1 + l2 + l4) / 3.0;
    mass_sum += body.leg_mass[k];
    l1_sum += l1;
    min_reach = std::min(min_reach, body.leg_reach[k]);
  }
  body.total_mass = cfg.torso_mass + mass_sum;
  body.contact_radius = cfg.rho0 * (l1_sum / sp.leg_count);
  body.stability = cfg.stab0 * min_reach;
  body.energy_coeff = cfg.e0;
  return body;
}

std::vector<double> flatten(const MorphVector& m) { return m.values; }

MorphVector restore(const Species& species, std::span<const double> raw) {
  if (static_cast<int>(raw.size()) != species.param_count) {
    throw DimensionError("restore: length mismatch for species " + species_name(species.name));
  }
  return MorphVector{species, std::vector<double>(raw.begin(), raw.end())};
}

InitialMorphSeed draw_morph_seed(const Species& species, Rng& rng) {
  InitialMorphSeed seed;
  seed.x.resize(species.param_count);
  for (double& v : seed.x) v = rng.uniform(0.9, 1.1);
  return seed;
}

}  // namespace competevo::morph
