#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "competevo/autodiff.hpp"
#include "competevo/morphology.hpp"
#include "competevo/physics.hpp"
#include "competevo/rng.hpp"

namespace competevo::policy {

struct NetworkArch {
  int input_dim = 0;
  std::vector<int> hidden;  // tanh activations throughout
  int output_dim = 0;
};

struct PolicyConfig {
  std::vector<int> tactics_hidden{64, 64};
  std::vector<int> value_hidden{64, 64};
  std::vector<int> morph_hidden{32};
  double tactics_logstd_init = -0.5;
  double morph_logstd_init = -1.0;
  double logstd_min = -5.0;
  double logstd_max = 1.0;
  double final_layer_scale = 0.01;   // tactics/value output layers
  double morph_final_scale = 0.001;  // keeps the initial morph mean near 1.0
};

/// Where one MLP's parameters live inside the flat parameter vector.
/// Layer l maps dims[l] -> dims[l+1]; weights are row-major (out x in),
/// each layer stores its weight block then its bias block.
struct MlpLayout {
  NetworkArch arch;
  std::vector<int> dims;
  std::vector<int> w_offsets;  // absolute offsets into the flat vector
  std::vector<int> b_offsets;
  int param_count = 0;

  int layer_count() const { return static_cast<int>(dims.size()) - 1; }
};

/// One player's combined policy: morph head (theta), tactics head (phi),
/// value net, per-head log-stds. All parameters live in one flat vector in
/// the serialized order: morph layers, tactics layers, value layers, morph
/// log-std, tactics log-std.
struct PolicyParams {
  morph::Species species{};
  arena::TaskKind task{};
  MlpLayout morph_head, tactics_head, value_net;
  int morph_logstd_ofs = 0;
  int tactics_logstd_ofs = 0;
  std::vector<double> flat;
  std::vector<double> obs_scale;  // fixed input normalization, not learned
  int version = 0;

  std::span<const double> morph_logstd() const {
    return {flat.data() + morph_logstd_ofs, static_cast<std::size_t>(species.param_count)};
  }
  std::span<const double> tactics_logstd() const {
    return {flat.data() + tactics_logstd_ofs, static_cast<std::size_t>(species.leg_count)};
  }
};

struct GaussianDist {
  std::vector<double> mean;
  std::vector<double> log_std;
};

/// Same shape as the policy's flat parameter vector.
struct Gradient {
  std::vector<double> flat;

  explicit Gradient(const PolicyParams& p) : flat(p.flat.size(), 0.0) {}
  Gradient() = default;
};

/// Deterministic init: LeCun-uniform hidden layers, small-scale output
/// layers; the morph head's output bias is 1.0 so the expected initial morph
/// is close to the identity morph.
PolicyParams init_policy(const morph::Species& species, arena::TaskKind task, std::uint64_t seed,
                         const PolicyConfig& cfg = {});

/// Plain forward pass (no tape). out.size() must equal arch.output_dim.
void mlp_forward(const PolicyParams& p, const MlpLayout& net, std::span<const double> input,
                 std::span<double> out);

/// Gaussian over raw morph values, conditioned on the fixed seed x.
GaussianDist morph_dist(const PolicyParams& p, const morph::InitialMorphSeed& x);

/// Gaussian over per-leg thrusts for one observation.
GaussianDist tactics_dist(const PolicyParams& p, std::span<const double> obs);

/// State-value estimate for one observation.
double value(const PolicyParams& p, std::span<const double> obs);

/// Diagonal-Gaussian log density of a (pre-clamp) sample.
double log_prob(const GaussianDist& d, std::span<const double> sample);

/// Closed-form entropy: sum_j (1/2 + 1/2 log 2pi + log sigma_j).
double entropy(const GaussianDist& d);

std::vector<double> sample(const GaussianDist& d, Rng& rng);

/// Value-net input for the morph-generation stage: the 12 kinematic slots
/// zero-padded, the morph-encoding slots carrying x.
std::vector<double> morph_stage_value_input(const PolicyParams& p, std::span<const double> x);

/// Applies the fixed observation scaling (used before tactics/value nets).
std::vector<double> scaled_obs(const PolicyParams& p, std::span<const double> obs);

// --- tape builders (exact reverse-mode gradients) --------------------------

/// Forward pass of one MLP on the tape. `input` must outlive backward();
/// gradients accumulate into `sink` when non-null.
ad::NodeId mlp_forward_tape(ad::Tape& tape, const PolicyParams& p, const MlpLayout& net,
                            std::span<const double> input, Gradient* sink);

/// Log-std block as a tape leaf.
ad::NodeId logstd_leaf_tape(ad::Tape& tape, const PolicyParams& p, bool morph_head,
                            Gradient* sink);

// --- serialization ----------------------------------------------------------

struct PolicyFileMeta {
  int version = 0;
  int generation = 0;
  double win_rate = 0.0;
};

/// Binary policy file: one ASCII descriptor line, then the flat parameter
/// vector and the morph seed x as little-endian IEEE-754 doubles.
void save_policy(std::ostream& os, const PolicyParams& p, const morph::InitialMorphSeed& x,
                 const PolicyFileMeta& meta, const PolicyConfig& cfg);
struct LoadedPolicy {
  PolicyParams params;
  morph::InitialMorphSeed x;
  PolicyFileMeta meta;
};
LoadedPolicy load_policy(std::istream& is);

}  // namespace competevo::policy
