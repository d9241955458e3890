#include "competevo/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "competevo/autodiff.hpp"
#include "competevo/errors.hpp"
#include "competevo/rng.hpp"

namespace competevo::ppo {

double anneal_factor(int t, int termination_generation) {
  if (termination_generation <= 0) {
    throw ConfigError("anneal_factor: termination generation must be > 0");
  }
  if (t < 0) throw ContractViolation("anneal_factor: negative generation index");
  const double tt = static_cast<double>(termination_generation);
  return std::max((tt - static_cast<double>(t)) / tt, 0.0);
}

double blend_rewards(double r_d, double r_s, double kappa) {
  if (!(kappa >= 0.0 && kappa <= 1.0)) {
    throw ContractViolation("blend_rewards: kappa outside [0,1]");
  }
  return kappa * r_d + (1.0 - kappa) * r_s;
}

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      double gamma, double lambda) {
  if (values.size() != rewards.size() + 1) {
    throw DimensionError("compute_gae: values must have length rewards+1");
  }
  if (!(gamma > 0.0 && gamma <= 1.0) || !(lambda > 0.0 && lambda <= 1.0)) {
    throw ConfigError("compute_gae: gamma and lambda must be in (0,1]");
  }
  const int n = static_cast<int>(rewards.size());
  GaeResult out;
  out.advantages.resize(n);
  out.returns.resize(n);
  double acc = 0.0;
  for (int t = n - 1; t >= 0; --t) {
    const double delta = rewards[t] + gamma * values[t + 1] - values[t];
    acc = delta + gamma * lambda * acc;
    out.advantages[t] = acc;
    out.returns[t] = acc + values[t];
  }
  return out;
}

void normalize_advantages(std::span<Sample> samples) {
  if (samples.size() < 2) return;
  double mean = 0.0;
  for (const Sample& s : samples) mean += s.advantage;
  mean /= static_cast<double>(samples.size());
  double var = 0.0;
  for (const Sample& s : samples) var += (s.advantage - mean) * (s.advantage - mean);
  const double stddev = std::sqrt(var / static_cast<double>(samples.size()));
  if (stddev > 0.0) {
    for (Sample& s : samples) s.advantage = (s.advantage - mean) / stddev;
  }
}

namespace {

struct SampleLoss {
  double surrogate = 0.0;
  double value_sq = 0.0;
  double entropy = 0.0;
  bool entropy_in_loss = true;
};

// Shared arithmetic of one sample's loss terms, used by the plain-eval path.
SampleLoss eval_sample(const policy::PolicyParams& p, const Sample& s, const PpoConfig& cfg,
                       bool morph_entropy_enabled) {
  const Transition& tr = *s.transition;
  SampleLoss out;

  policy::GaussianDist dist;
  std::vector<double> value_input;
  if (tr.stage == Stage::morph_generation) {
    morph::InitialMorphSeed x{tr.observation};
    dist = policy::morph_dist(p, x);
    value_input = policy::morph_stage_value_input(p, tr.observation);
    out.entropy_in_loss = morph_entropy_enabled;
  } else {
    dist = policy::tactics_dist(p, tr.observation);
    value_input = tr.observation;
  }
  const double lp = policy::log_prob(dist, tr.action);
  const double ratio = std::exp(lp - tr.log_prob_behavior);
  if (!std::isfinite(ratio)) throw NumericalError("ppo_loss: non-finite probability ratio");
  const double clipped = std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip);
  out.surrogate = -std::min(ratio * s.advantage, clipped * s.advantage);

  const double v = policy::value(p, value_input);
  out.value_sq = (v - s.ret) * (v - s.ret);
  out.entropy = policy::entropy(dist);
  return out;
}

}  // namespace

LossTerms ppo_loss(const policy::PolicyParams& p, std::span<const Sample> samples,
                   const PpoConfig& cfg, bool morph_entropy_enabled) {
  if (samples.empty()) throw ContractViolation("ppo_loss: empty sample set");
  LossTerms terms;
  for (const Sample& s : samples) {
    SampleLoss sl = eval_sample(p, s, cfg, morph_entropy_enabled);
    terms.surrogate += sl.surrogate;
    terms.value_mse += sl.value_sq;
    terms.entropy += sl.entropy;
    terms.total += sl.surrogate + cfg.vf_coeff * sl.value_sq -
                   (sl.entropy_in_loss ? cfg.ent_coeff * sl.entropy : 0.0);
  }
  const double inv = 1.0 / static_cast<double>(samples.size());
  terms.surrogate *= inv;
  terms.value_mse *= inv;
  terms.entropy *= inv;
  terms.total *= inv;
  return terms;
}

LossTerms ppo_loss_grad(const policy::PolicyParams& p, std::span<const Sample> samples,
                        const PpoConfig& cfg, policy::Gradient& grad,
                        bool morph_entropy_enabled) {
  if (samples.empty()) throw ContractViolation("ppo_loss_grad: empty sample set");
  if (grad.flat.size() != p.flat.size()) throw DimensionError("ppo_loss_grad: gradient shape");

  LossTerms terms;
  const double inv = 1.0 / static_cast<double>(samples.size());
  ad::Tape tape;
  std::vector<double> scaled;      // owned buffers must outlive backward()
  std::vector<double> morph_vobs;

  for (const Sample& s : samples) {
    const Transition& tr = *s.transition;
    tape.reset();

    const bool morph_stage = tr.stage == Stage::morph_generation;
    ad::NodeId mean, logstd, vout;
    if (morph_stage) {
      mean = policy::mlp_forward_tape(tape, p, p.morph_head, tr.observation, &grad);
      logstd = policy::logstd_leaf_tape(tape, p, true, &grad);
      morph_vobs = policy::scaled_obs(p, policy::morph_stage_value_input(p, tr.observation));
      vout = policy::mlp_forward_tape(tape, p, p.value_net, morph_vobs, &grad);
    } else {
      scaled = policy::scaled_obs(p, tr.observation);
      mean = policy::mlp_forward_tape(tape, p, p.tactics_head, scaled, &grad);
      logstd = policy::logstd_leaf_tape(tape, p, false, &grad);
      vout = policy::mlp_forward_tape(tape, p, p.value_net, scaled, &grad);
    }

    ad::NodeId lp = tape.gaussian_log_prob(mean, logstd, tr.action);
    ad::NodeId ratio = tape.exp_of(tape.add_const(lp, -tr.log_prob_behavior));
    ad::NodeId surr_a = tape.scale(ratio, s.advantage);
    ad::NodeId surr_b = tape.scale(tape.clamp_of(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip),
                                   s.advantage);
    ad::NodeId surrogate = tape.scale(tape.min_of(surr_a, surr_b), -1.0);

    ad::NodeId verr = tape.square(tape.add_const(vout, -s.ret));
    ad::NodeId ent = tape.gaussian_entropy(logstd);

    const bool ent_in_loss = morph_stage ? morph_entropy_enabled : true;
    ad::NodeId loss = tape.add(surrogate, tape.scale(verr, cfg.vf_coeff));
    if (ent_in_loss && cfg.ent_coeff != 0.0) {
      loss = tape.add(loss, tape.scale(ent, -cfg.ent_coeff));
    }
    tape.backward(loss, inv);

    terms.surrogate += tape.scalar(surrogate);
    terms.value_mse += tape.scalar(verr);
    terms.entropy += tape.scalar(ent);
    terms.total += tape.scalar(loss);
  }
  terms.surrogate *= inv;
  terms.value_mse *= inv;
  terms.entropy *= inv;
  terms.total *= inv;
  return terms;
}

OptimizerState make_optimizer(const policy::PolicyParams& p, double lr) {
  OptimizerState opt;
  opt.m.assign(p.flat.size(), 0.0);
  opt.v.assign(p.flat.size(), 0.0);
  opt.lr = lr;
  return opt;
}

void adam_step(OptimizerState& opt, std::span<double> params, std::span<const double> grad) {
  if (params.size() != grad.size() || params.size() != opt.m.size()) {
    throw DimensionError("adam_step: shape mismatch");
  }
  for (double g : grad) {
    if (!std::isfinite(g)) throw NumericalError("adam_step: non-finite gradient");
  }
  opt.step += 1;
  const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
  const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    opt.m[i] = opt.beta1 * opt.m[i] + (1.0 - opt.beta1) * grad[i];
    opt.v[i] = opt.beta2 * opt.v[i] + (1.0 - opt.beta2) * grad[i] * grad[i];
    const double m_hat = opt.m[i] / bc1;
    const double v_hat = opt.v[i] / bc2;
    params[i] -= opt.lr * m_hat / (std::sqrt(v_hat) + opt.eps);
  }
}

double clip_gradient(std::span<double> grad, double max_norm) {
  double sq = 0.0;
  for (double g : grad) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (double& g : grad) g *= scale;
  }
  return norm;
}

policy::PolicyParams update(const policy::PolicyParams& p, const RolloutBatch& batch,
                            const PpoConfig& cfg, OptimizerState& opt, std::uint64_t shuffle_seed,
                            int new_version, bool morph_entropy_enabled, UpdateStats* stats) {
  if (batch.trajectories.empty() || batch.total_transitions == 0) {
    throw ContractViolation("update: empty batch");
  }

  // GAE per trajectory, then one flat sample list.
  std::vector<Sample> samples;
  samples.reserve(batch.total_transitions);
  std::vector<double> rewards, values;
  for (const Trajectory& traj : batch.trajectories) {
    const int n = static_cast<int>(traj.transitions.size());
    if (n == 0) continue;
    rewards.resize(n);
    values.resize(n + 1);
    for (int t = 0; t < n; ++t) {
      rewards[t] = traj.transitions[t].reward;
      values[t] = traj.transitions[t].value_estimate;
    }
    values[n] = 0.0;  // episodes end on a true terminal
    GaeResult gae = compute_gae(rewards, values, cfg.gamma, cfg.gae_lambda);
    for (int t = 0; t < n; ++t) {
      samples.push_back(Sample{&traj.transitions[t], gae.advantages[t], gae.returns[t]});
    }
  }

  normalize_advantages(samples);

  policy::PolicyParams out = p;
  policy::Gradient grad(out);
  std::vector<int> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Sample> minibatch;
  UpdateStats local;

  for (int epoch = 0; epoch < cfg.update_epochs; ++epoch) {
    Rng rng(derive_seed(shuffle_seed, {0x73687566ULL, static_cast<std::uint64_t>(epoch)}));
    rng.shuffle(std::span<int>(order));
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.minibatch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.minibatch_size));
      minibatch.clear();
      for (std::size_t i = start; i < end; ++i) minibatch.push_back(samples[order[i]]);

      std::fill(grad.flat.begin(), grad.flat.end(), 0.0);
      LossTerms terms = ppo_loss_grad(out, minibatch, cfg, grad, morph_entropy_enabled);
      local.mean_grad_norm += clip_gradient(grad.flat, cfg.grad_clip);
      adam_step(opt, out.flat, grad.flat);
      local.mean_loss += terms.total;
      local.mean_entropy += terms.entropy;
      local.minibatches += 1;
    }
  }

  if (local.minibatches > 0) {
    local.mean_loss /= local.minibatches;
    local.mean_entropy /= local.minibatches;
    local.mean_grad_norm /= local.minibatches;
  }
  if (stats != nullptr) *stats = local;
  out.version = new_version;
  return out;
}

}  // namespace competevo::ppo
