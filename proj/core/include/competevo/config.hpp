#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "competevo/morphology.hpp"
#include "competevo/physics.hpp"
#include "competevo/policy.hpp"
#include "competevo/ppo.hpp"
#include "competevo/selfplay.hpp"

namespace competevo {

/// Full run configuration. Defaults reproduce the reference setup: lr 0.0005,
/// clip 0.2, gamma 0.995, GAE lambda 0.95, batch 50000 / minibatch 2000,
/// T_t 1000, ~100 warm-up generations, 1000 max generations for run_to_goal
/// and 2000 for sumo.
struct RunConfig {
  arena::TaskKind task = arena::TaskKind::run_to_goal;
  std::array<morph::SpeciesName, 2> species{morph::SpeciesName::ant, morph::SpeciesName::ant};
  std::uint64_t seed = 0;
  int workers = 2;
  std::string out_dir = "runs/default";
  ppo::PpoConfig ppo;
  selfplay::SamplerConfig sampler;
  selfplay::CurriculumConfig curriculum;
  arena::PhysicsConfig physics;
  morph::MorphConfig morphology;
  policy::PolicyConfig policy;
};

/// Parses a JSON config document. Every key is optional (defaults above);
/// unknown keys are rejected with their path. When "selfplay.max_generations"
/// is omitted it defaults per task (1000 run_to_goal, 2000 sumo).
RunConfig parse_config_text(const std::string& json_text);
RunConfig load_config_file(const std::string& path);

/// Serializes the full effective configuration (pretty-printed JSON).
std::string config_to_json(const RunConfig& cfg);

/// Desk-scale knob: multiplies the batch size and caps the minibatch at it.
void apply_scale(RunConfig& cfg, double scale);

/// Validates cross-field invariants; throws ConfigError naming the field.
void validate_config(const RunConfig& cfg);

}  // namespace competevo
