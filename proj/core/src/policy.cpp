#include "competevo/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "competevo/binio.hpp"
#include "competevo/errors.hpp"

namespace competevo::policy {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178032973640562;

MlpLayout make_layout(int input_dim, const std::vector<int>& hidden, int output_dim,
                      int& cursor) {
  MlpLayout net;
  net.arch = NetworkArch{input_dim, hidden, output_dim};
  net.dims.push_back(input_dim);
  for (int h : hidden) net.dims.push_back(h);
  net.dims.push_back(output_dim);
  for (int l = 0; l + 1 < static_cast<int>(net.dims.size()); ++l) {
    net.w_offsets.push_back(cursor);
    cursor += net.dims[l + 1] * net.dims[l];
    net.b_offsets.push_back(cursor);
    cursor += net.dims[l + 1];
  }
  net.param_count = cursor - net.w_offsets.front();
  return net;
}

std::vector<double> build_obs_scale(const morph::Species& species) {
  // Fixed feature normalization so raw world-scale observations land in a
  // comfortable range for tanh layers. Order matches the observation layout.
  std::vector<double> s = {0.2, 0.2, 0.1, 0.1, 1.0, 1.0, 0.1, 0.2, 0.2, 0.1, 0.1, 1.0};
  s.resize(s.size() + species.param_count, 1.0);
  return s;
}

/// Allocates the flat vector and computes all offsets; values left zero.
PolicyParams make_shell(const morph::Species& species, arena::TaskKind task,
                        const PolicyConfig& cfg) {
  PolicyParams p;
  p.species = species;
  p.task = task;
  const int obs_dim = arena::observation_dim(species);
  int cursor = 0;
  p.morph_head = make_layout(species.param_count, cfg.morph_hidden, species.param_count, cursor);
  p.tactics_head = make_layout(obs_dim, cfg.tactics_hidden, species.leg_count, cursor);
  p.value_net = make_layout(obs_dim, cfg.value_hidden, 1, cursor);
  p.morph_logstd_ofs = cursor;
  cursor += species.param_count;
  p.tactics_logstd_ofs = cursor;
  cursor += species.leg_count;
  p.flat.assign(cursor, 0.0);
  p.obs_scale = build_obs_scale(species);
  return p;
}

void init_mlp(PolicyParams& p, const MlpLayout& net, Rng& rng, double final_scale,
              double final_bias) {
  for (int l = 0; l < net.layer_count(); ++l) {
    const int fan_in = net.dims[l];
    const int fan_out = net.dims[l + 1];
    const bool last = l == net.layer_count() - 1;
    const double s = last ? final_scale : std::sqrt(3.0 / fan_in);
    double* w = p.flat.data() + net.w_offsets[l];
    for (int i = 0; i < fan_out * fan_in; ++i) w[i] = rng.uniform(-s, s);
    double* b = p.flat.data() + net.b_offsets[l];
    for (int i = 0; i < fan_out; ++i) b[i] = last ? final_bias : 0.0;
  }
}

std::string join_dims(const std::vector<int>& dims) {
  std::string s;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i > 0) s += ',';
    s += std::to_string(dims[i]);
  }
  return s;
}

std::vector<int> parse_dims(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  return out;
}

}  // namespace

PolicyParams init_policy(const morph::Species& species, arena::TaskKind task, std::uint64_t seed,
                         const PolicyConfig& cfg) {
  PolicyParams p = make_shell(species, task, cfg);
  Rng rng(derive_seed(seed, {0x706f6c69ULL, static_cast<std::uint64_t>(species.name),
                             static_cast<std::uint64_t>(task)}));
  init_mlp(p, p.morph_head, rng, cfg.morph_final_scale, 1.0);
  init_mlp(p, p.tactics_head, rng, cfg.final_layer_scale, 0.0);
  init_mlp(p, p.value_net, rng, cfg.final_layer_scale, 0.0);

  const double morph_ls = std::clamp(cfg.morph_logstd_init, cfg.logstd_min, cfg.logstd_max);
  const double tact_ls = std::clamp(cfg.tactics_logstd_init, cfg.logstd_min, cfg.logstd_max);
  for (int i = 0; i < species.param_count; ++i) p.flat[p.morph_logstd_ofs + i] = morph_ls;
  for (int i = 0; i < species.leg_count; ++i) p.flat[p.tactics_logstd_ofs + i] = tact_ls;
  p.version = 0;
  return p;
}

void mlp_forward(const PolicyParams& p, const MlpLayout& net, std::span<const double> input,
                 std::span<double> out) {
  if (static_cast<int>(input.size()) != net.dims.front()) {
    throw DimensionError("mlp_forward: input dim " + std::to_string(input.size()) + ", expected " +
                         std::to_string(net.dims.front()));
  }
  if (static_cast<int>(out.size()) != net.dims.back()) {
    throw DimensionError("mlp_forward: output dim mismatch");
  }
  std::vector<double> cur(input.begin(), input.end());
  std::vector<double> nxt;
  for (int l = 0; l < net.layer_count(); ++l) {
    const int in_dim = net.dims[l];
    const int out_dim = net.dims[l + 1];
    const bool last = l == net.layer_count() - 1;
    nxt.assign(out_dim, 0.0);
    const double* w = p.flat.data() + net.w_offsets[l];
    const double* b = p.flat.data() + net.b_offsets[l];
    for (int i = 0; i < out_dim; ++i) {
      double acc = b[i];
      const double* row = w + static_cast<std::size_t>(i) * in_dim;
      for (int j = 0; j < in_dim; ++j) acc += row[j] * cur[j];
      nxt[i] = last ? acc : std::tanh(acc);
    }
    cur.swap(nxt);
  }
  std::copy(cur.begin(), cur.end(), out.begin());
}

GaussianDist morph_dist(const PolicyParams& p, const morph::InitialMorphSeed& x) {
  GaussianDist d;
  d.mean.resize(p.species.param_count);
  mlp_forward(p, p.morph_head, x.x, d.mean);
  auto ls = p.morph_logstd();
  d.log_std.assign(ls.begin(), ls.end());
  return d;
}

GaussianDist tactics_dist(const PolicyParams& p, std::span<const double> obs) {
  GaussianDist d;
  d.mean.resize(p.species.leg_count);
  std::vector<double> scaled = scaled_obs(p, obs);
  mlp_forward(p, p.tactics_head, scaled, d.mean);
  auto ls = p.tactics_logstd();
  d.log_std.assign(ls.begin(), ls.end());
  return d;
}

double value(const PolicyParams& p, std::span<const double> obs) {
  double v = 0.0;
  std::vector<double> scaled = scaled_obs(p, obs);
  mlp_forward(p, p.value_net, scaled, {&v, 1});
  return v;
}

double log_prob(const GaussianDist& d, std::span<const double> sample) {
  if (sample.size() != d.mean.size()) throw DimensionError("log_prob: sample length mismatch");
  double lp = 0.0;
  for (std::size_t j = 0; j < sample.size(); ++j) {
    const double sigma = std::exp(d.log_std[j]);
    const double z = (sample[j] - d.mean[j]) / sigma;
    lp += -0.5 * z * z - d.log_std[j] - kHalfLog2Pi;
  }
  return lp;
}

double entropy(const GaussianDist& d) {
  double h = 0.0;
  for (double l : d.log_std) h += 0.5 + kHalfLog2Pi + l;
  return h;
}

std::vector<double> sample(const GaussianDist& d, Rng& rng) {
  std::vector<double> s(d.mean.size());
  for (std::size_t j = 0; j < s.size(); ++j) {
    s[j] = d.mean[j] + std::exp(d.log_std[j]) * rng.normal();
  }
  return s;
}

std::vector<double> morph_stage_value_input(const PolicyParams& p, std::span<const double> x) {
  if (static_cast<int>(x.size()) != p.species.param_count) {
    throw DimensionError("morph_stage_value_input: x length mismatch");
  }
  std::vector<double> obs(arena::kObsFixedDim, 0.0);
  obs.insert(obs.end(), x.begin(), x.end());
  return obs;
}

std::vector<double> scaled_obs(const PolicyParams& p, std::span<const double> obs) {
  if (obs.size() != p.obs_scale.size()) {
    throw DimensionError("scaled_obs: observation dim " + std::to_string(obs.size()) +
                         ", expected " + std::to_string(p.obs_scale.size()));
  }
  std::vector<double> out(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) out[i] = obs[i] * p.obs_scale[i];
  return out;
}

ad::NodeId mlp_forward_tape(ad::Tape& tape, const PolicyParams& p, const MlpLayout& net,
                            std::span<const double> input, Gradient* sink) {
  ad::NodeId x = tape.leaf(input, nullptr);
  for (int l = 0; l < net.layer_count(); ++l) {
    const int in_dim = net.dims[l];
    const int out_dim = net.dims[l + 1];
    auto wspan = std::span<const double>(p.flat.data() + net.w_offsets[l],
                                         static_cast<std::size_t>(out_dim) * in_dim);
    auto bspan = std::span<const double>(p.flat.data() + net.b_offsets[l],
                                         static_cast<std::size_t>(out_dim));
    ad::NodeId w = tape.leaf(wspan, sink ? sink->flat.data() + net.w_offsets[l] : nullptr);
    ad::NodeId b = tape.leaf(bspan, sink ? sink->flat.data() + net.b_offsets[l] : nullptr);
    x = tape.affine(w, b, x, out_dim, in_dim);
    if (l != net.layer_count() - 1) x = tape.tanh_of(x);
  }
  return x;
}

ad::NodeId logstd_leaf_tape(ad::Tape& tape, const PolicyParams& p, bool morph_head,
                            Gradient* sink) {
  const int ofs = morph_head ? p.morph_logstd_ofs : p.tactics_logstd_ofs;
  const int n = morph_head ? p.species.param_count : p.species.leg_count;
  auto span = std::span<const double>(p.flat.data() + ofs, static_cast<std::size_t>(n));
  return tape.leaf(span, sink ? sink->flat.data() + ofs : nullptr);
}

void save_policy(std::ostream& os, const PolicyParams& p, const morph::InitialMorphSeed& x,
                 const PolicyFileMeta& meta, const PolicyConfig& cfg) {
  char wr[32];
  std::snprintf(wr, sizeof(wr), "%.17g", meta.win_rate);
  os << "competevo-policy v1"
     << " species=" << morph::species_name(p.species.name) << " task=" << arena::task_name(p.task)
     << " version=" << meta.version << " generation=" << meta.generation << " winrate=" << wr
     << " morph_hidden=" << join_dims(cfg.morph_hidden)
     << " tactics_hidden=" << join_dims(cfg.tactics_hidden)
     << " value_hidden=" << join_dims(cfg.value_hidden) << " params=" << p.flat.size()
     << " x=" << x.x.size() << "\n";
  binio::write_f64le(os, p.flat);
  binio::write_f64le(os, x.x);
  if (!os) throw IoError("save_policy: stream write failed");
}

LoadedPolicy load_policy(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw CheckpointError("policy file: missing descriptor line");
  std::stringstream ss(header);
  std::string magic, fmt;
  ss >> magic >> fmt;
  if (magic != "competevo-policy" || fmt != "v1") {
    throw CheckpointError("policy file: bad descriptor \"" + header + "\"");
  }
  std::map<std::string, std::string> kv;
  std::string tok;
  while (ss >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) throw CheckpointError("policy file: bad token \"" + tok + "\"");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  for (const char* key : {"species", "task", "version", "generation", "winrate", "morph_hidden",
                          "tactics_hidden", "value_hidden", "params", "x"}) {
    if (!kv.count(key)) {
      throw CheckpointError(std::string("policy file: missing field \"") + key + "\"");
    }
  }

  PolicyConfig cfg;
  cfg.morph_hidden = parse_dims(kv["morph_hidden"]);
  cfg.tactics_hidden = parse_dims(kv["tactics_hidden"]);
  cfg.value_hidden = parse_dims(kv["value_hidden"]);

  LoadedPolicy out;
  morph::Species species = morph::species_template(kv["species"]);
  out.params = make_shell(species, arena::parse_task(kv["task"]), cfg);
  out.meta.version = std::stoi(kv["version"]);
  out.meta.generation = std::stoi(kv["generation"]);
  out.meta.win_rate = std::stod(kv["winrate"]);
  out.params.version = out.meta.version;

  const std::size_t n_params = std::stoull(kv["params"]);
  const std::size_t n_x = std::stoull(kv["x"]);
  if (n_params != out.params.flat.size()) {
    throw CheckpointError("policy file: parameter count " + std::to_string(n_params) +
                          " does not match architecture (" +
                          std::to_string(out.params.flat.size()) + ")");
  }
  if (n_x != static_cast<std::size_t>(species.param_count)) {
    throw CheckpointError("policy file: x length mismatch");
  }
  binio::read_f64le(is, out.params.flat);
  out.x.x.resize(n_x);
  binio::read_f64le(is, out.x.x);
  return out;
}

}  // namespace competevo::policy
