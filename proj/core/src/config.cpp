#include "competevo/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "competevo/errors.hpp"

namespace competevo {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& path, const std::set<std::string>& known) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!known.count(it.key())) {
      throw ConfigError("unknown config key \"" + (path.empty() ? it.key() : path + "." + it.key()) +
                        "\"");
    }
  }
}

template <typename T>
void read_field(const json& obj, const std::string& path, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config key \"" + path + "." + key + "\": " + e.what());
  }
}

void parse_ppo(const json& obj, ppo::PpoConfig& cfg) {
  reject_unknown(obj, "ppo",
                 {"learning_rate", "clip", "gamma", "lambda", "batch_size", "minibatch_size",
                  "update_epochs", "vf_coeff", "ent_coeff", "grad_clip"});
  read_field(obj, "ppo", "learning_rate", cfg.learning_rate);
  read_field(obj, "ppo", "clip", cfg.clip);
  read_field(obj, "ppo", "gamma", cfg.gamma);
  read_field(obj, "ppo", "lambda", cfg.gae_lambda);
  read_field(obj, "ppo", "batch_size", cfg.batch_size);
  read_field(obj, "ppo", "minibatch_size", cfg.minibatch_size);
  read_field(obj, "ppo", "update_epochs", cfg.update_epochs);
  read_field(obj, "ppo", "vf_coeff", cfg.vf_coeff);
  read_field(obj, "ppo", "ent_coeff", cfg.ent_coeff);
  read_field(obj, "ppo", "grad_clip", cfg.grad_clip);
}

void parse_selfplay(const json& obj, selfplay::SamplerConfig& sampler,
                    selfplay::CurriculumConfig& curriculum, bool& max_gen_set) {
  reject_unknown(obj, "selfplay",
                 {"delta", "n_opponents", "warmup_generations", "termination_generation",
                  "max_generations"});
  read_field(obj, "selfplay", "delta", sampler.delta);
  read_field(obj, "selfplay", "n_opponents", sampler.n_opponents);
  read_field(obj, "selfplay", "warmup_generations", curriculum.warmup_generations);
  read_field(obj, "selfplay", "termination_generation", curriculum.termination_generation);
  if (obj.contains("max_generations")) {
    max_gen_set = true;
    read_field(obj, "selfplay", "max_generations", curriculum.max_generations);
  }
}

void parse_physics(const json& obj, arena::PhysicsConfig& cfg) {
  reject_unknown(obj, "physics",
                 {"dt", "episode_len", "friction", "stun_steps", "jitter", "goal_x",
                  "start_x_goal", "dohyo_radius", "start_x_sumo", "w_prog", "w_push", "w_center",
                  "w_approach"});
  read_field(obj, "physics", "dt", cfg.dt);
  read_field(obj, "physics", "episode_len", cfg.episode_len);
  read_field(obj, "physics", "friction", cfg.friction);
  read_field(obj, "physics", "stun_steps", cfg.stun_steps);
  read_field(obj, "physics", "jitter", cfg.jitter);
  read_field(obj, "physics", "goal_x", cfg.goal_x);
  read_field(obj, "physics", "start_x_goal", cfg.start_x_goal);
  read_field(obj, "physics", "dohyo_radius", cfg.dohyo_radius);
  read_field(obj, "physics", "start_x_sumo", cfg.start_x_sumo);
  read_field(obj, "physics", "w_prog", cfg.w_prog);
  read_field(obj, "physics", "w_push", cfg.w_push);
  read_field(obj, "physics", "w_center", cfg.w_center);
  read_field(obj, "physics", "w_approach", cfg.w_approach);
}

void parse_morphology(const json& obj, morph::MorphConfig& cfg) {
  reject_unknown(obj, "morphology",
                 {"s_min", "s_max", "f0", "m0", "r0", "torso_mass", "rho0", "stab0", "e0"});
  read_field(obj, "morphology", "s_min", cfg.s_min);
  read_field(obj, "morphology", "s_max", cfg.s_max);
  read_field(obj, "morphology", "f0", cfg.f0);
  read_field(obj, "morphology", "m0", cfg.m0);
  read_field(obj, "morphology", "r0", cfg.r0);
  read_field(obj, "morphology", "torso_mass", cfg.torso_mass);
  read_field(obj, "morphology", "rho0", cfg.rho0);
  read_field(obj, "morphology", "stab0", cfg.stab0);
  read_field(obj, "morphology", "e0", cfg.e0);
}

void parse_policy(const json& obj, policy::PolicyConfig& cfg) {
  reject_unknown(obj, "policy",
                 {"tactics_hidden", "value_hidden", "morph_hidden", "tactics_logstd_init",
                  "morph_logstd_init", "logstd_min", "logstd_max", "final_layer_scale",
                  "morph_final_scale"});
  read_field(obj, "policy", "tactics_hidden", cfg.tactics_hidden);
  read_field(obj, "policy", "value_hidden", cfg.value_hidden);
  read_field(obj, "policy", "morph_hidden", cfg.morph_hidden);
  read_field(obj, "policy", "tactics_logstd_init", cfg.tactics_logstd_init);
  read_field(obj, "policy", "morph_logstd_init", cfg.morph_logstd_init);
  read_field(obj, "policy", "logstd_min", cfg.logstd_min);
  read_field(obj, "policy", "logstd_max", cfg.logstd_max);
  read_field(obj, "policy", "final_layer_scale", cfg.final_layer_scale);
  read_field(obj, "policy", "morph_final_scale", cfg.morph_final_scale);
}

}  // namespace

RunConfig parse_config_text(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
  reject_unknown(doc, "",
                 {"task", "species", "evolvable", "seed", "workers", "out_dir", "ppo", "selfplay",
                  "physics", "morphology", "policy"});

  RunConfig cfg;
  bool max_gen_set = false;
  if (doc.contains("task")) cfg.task = arena::parse_task(doc.at("task").get<std::string>());
  if (doc.contains("species")) {
    auto names = doc.at("species").get<std::vector<std::string>>();
    if (names.size() != 2) throw ConfigError("config key \"species\" must list two species");
    cfg.species = {morph::species_template(names[0]).name, morph::species_template(names[1]).name};
  }
  if (doc.contains("evolvable")) {
    auto flags = doc.at("evolvable").get<std::vector<bool>>();
    if (flags.size() != 2) throw ConfigError("config key \"evolvable\" must list two flags");
    cfg.curriculum.evolvable = {flags[0], flags[1]};
  }
  read_field(doc, "", "seed", cfg.seed);
  read_field(doc, "", "workers", cfg.workers);
  read_field(doc, "", "out_dir", cfg.out_dir);
  if (doc.contains("ppo")) parse_ppo(doc.at("ppo"), cfg.ppo);
  if (doc.contains("selfplay")) {
    parse_selfplay(doc.at("selfplay"), cfg.sampler, cfg.curriculum, max_gen_set);
  }
  if (doc.contains("physics")) parse_physics(doc.at("physics"), cfg.physics);
  if (doc.contains("morphology")) parse_morphology(doc.at("morphology"), cfg.morphology);
  if (doc.contains("policy")) parse_policy(doc.at("policy"), cfg.policy);

  if (!max_gen_set) {
    cfg.curriculum.max_generations = cfg.task == arena::TaskKind::sumo ? 2000 : 1000;
  }
  validate_config(cfg);
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string config_to_json(const RunConfig& cfg) {
  json doc;
  doc["task"] = arena::task_name(cfg.task);
  doc["species"] = {morph::species_name(cfg.species[0]), morph::species_name(cfg.species[1])};
  doc["evolvable"] = {cfg.curriculum.evolvable[0], cfg.curriculum.evolvable[1]};
  doc["seed"] = cfg.seed;
  doc["workers"] = cfg.workers;
  doc["out_dir"] = cfg.out_dir;
  doc["ppo"] = {{"learning_rate", cfg.ppo.learning_rate},
                {"clip", cfg.ppo.clip},
                {"gamma", cfg.ppo.gamma},
                {"lambda", cfg.ppo.gae_lambda},
                {"batch_size", cfg.ppo.batch_size},
                {"minibatch_size", cfg.ppo.minibatch_size},
                {"update_epochs", cfg.ppo.update_epochs},
                {"vf_coeff", cfg.ppo.vf_coeff},
                {"ent_coeff", cfg.ppo.ent_coeff},
                {"grad_clip", cfg.ppo.grad_clip}};
  doc["selfplay"] = {{"delta", cfg.sampler.delta},
                     {"n_opponents", cfg.sampler.n_opponents},
                     {"warmup_generations", cfg.curriculum.warmup_generations},
                     {"termination_generation", cfg.curriculum.termination_generation},
                     {"max_generations", cfg.curriculum.max_generations}};
  doc["physics"] = {{"dt", cfg.physics.dt},
                    {"episode_len", cfg.physics.episode_len},
                    {"friction", cfg.physics.friction},
                    {"stun_steps", cfg.physics.stun_steps},
                    {"jitter", cfg.physics.jitter},
                    {"goal_x", cfg.physics.goal_x},
                    {"start_x_goal", cfg.physics.start_x_goal},
                    {"dohyo_radius", cfg.physics.dohyo_radius},
                    {"start_x_sumo", cfg.physics.start_x_sumo},
                    {"w_prog", cfg.physics.w_prog},
                    {"w_push", cfg.physics.w_push},
                    {"w_center", cfg.physics.w_center},
                    {"w_approach", cfg.physics.w_approach}};
  doc["morphology"] = {{"s_min", cfg.morphology.s_min},
                       {"s_max", cfg.morphology.s_max},
                       {"f0", cfg.morphology.f0},
                       {"m0", cfg.morphology.m0},
                       {"r0", cfg.morphology.r0},
                       {"torso_mass", cfg.morphology.torso_mass},
                       {"rho0", cfg.morphology.rho0},
                       {"stab0", cfg.morphology.stab0},
                       {"e0", cfg.morphology.e0}};
  doc["policy"] = {{"tactics_hidden", cfg.policy.tactics_hidden},
                   {"value_hidden", cfg.policy.value_hidden},
                   {"morph_hidden", cfg.policy.morph_hidden},
                   {"tactics_logstd_init", cfg.policy.tactics_logstd_init},
                   {"morph_logstd_init", cfg.policy.morph_logstd_init},
                   {"logstd_min", cfg.policy.logstd_min},
                   {"logstd_max", cfg.policy.logstd_max},
                   {"final_layer_scale", cfg.policy.final_layer_scale},
                   {"morph_final_scale", cfg.policy.morph_final_scale}};
  return doc.dump(2) + "\n";
}

void apply_scale(RunConfig& cfg, double scale) {
  if (!(scale > 0.0)) throw ConfigError("--scale must be positive");
  cfg.ppo.batch_size = std::max(1, static_cast<int>(std::lround(cfg.ppo.batch_size * scale)));
  cfg.ppo.minibatch_size = std::min(cfg.ppo.minibatch_size, cfg.ppo.batch_size);
}

void validate_config(const RunConfig& cfg) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("invalid config: ") + what);
  };
  require(cfg.workers >= 1, "workers must be >= 1");
  require(cfg.ppo.learning_rate > 0.0, "ppo.learning_rate must be > 0");
  require(cfg.ppo.clip > 0.0, "ppo.clip must be > 0");
  require(cfg.ppo.gamma > 0.0 && cfg.ppo.gamma <= 1.0, "ppo.gamma must be in (0,1]");
  require(cfg.ppo.gae_lambda > 0.0 && cfg.ppo.gae_lambda <= 1.0, "ppo.lambda must be in (0,1]");
  require(cfg.ppo.batch_size >= 1, "ppo.batch_size must be >= 1");
  require(cfg.ppo.minibatch_size >= 1, "ppo.minibatch_size must be >= 1");
  require(cfg.ppo.update_epochs >= 1, "ppo.update_epochs must be >= 1");
  require(cfg.ppo.vf_coeff >= 0.0, "ppo.vf_coeff must be >= 0");
  require(cfg.ppo.ent_coeff >= 0.0, "ppo.ent_coeff must be >= 0");
  require(cfg.sampler.delta >= 0.0 && cfg.sampler.delta <= 1.0, "selfplay.delta must be in [0,1]");
  require(cfg.sampler.n_opponents >= 1, "selfplay.n_opponents must be >= 1");
  require(cfg.curriculum.termination_generation > 0,
          "selfplay.termination_generation must be > 0");
  require(cfg.curriculum.max_generations >= 1, "selfplay.max_generations must be >= 1");
  require(cfg.curriculum.warmup_generations >= 0 &&
              cfg.curriculum.warmup_generations <= cfg.curriculum.max_generations,
          "selfplay.warmup_generations must be in [0, max_generations]");
  require(cfg.physics.dt > 0.0, "physics.dt must be > 0");
  require(cfg.physics.episode_len >= 1, "physics.episode_len must be >= 1");
  require(cfg.physics.friction >= 0.0, "physics.friction must be >= 0");
  require(cfg.physics.stun_steps >= 0, "physics.stun_steps must be >= 0");
  require(cfg.physics.jitter >= 0.0, "physics.jitter must be >= 0");
  require(cfg.physics.goal_x > 0.0, "physics.goal_x must be > 0");
  require(cfg.physics.start_x_goal > 0.0 && cfg.physics.start_x_goal < cfg.physics.goal_x,
          "physics.start_x_goal must be in (0, goal_x)");
  require(cfg.physics.dohyo_radius > 0.0, "physics.dohyo_radius must be > 0");
  require(cfg.physics.start_x_sumo > 0.0 && cfg.physics.start_x_sumo < cfg.physics.dohyo_radius,
          "physics.start_x_sumo must be in (0, dohyo_radius)");
  require(cfg.morphology.s_min > 0.0, "morphology.s_min must be > 0");
  require(cfg.morphology.s_min <= 1.0 && cfg.morphology.s_max >= 1.0,
          "morphology clamp bounds must bracket 1.0");
  require(cfg.morphology.s_min < cfg.morphology.s_max, "morphology.s_min must be < s_max");
  require(cfg.morphology.f0 > 0.0 && cfg.morphology.m0 > 0.0 && cfg.morphology.r0 > 0.0 &&
              cfg.morphology.torso_mass > 0.0 && cfg.morphology.rho0 > 0.0 &&
              cfg.morphology.stab0 > 0.0 && cfg.morphology.e0 >= 0.0,
          "morphology constants must be positive");
  require(cfg.policy.logstd_min <= cfg.policy.logstd_max, "policy.logstd bounds inverted");
  for (int h : cfg.policy.tactics_hidden) require(h >= 1, "policy.tactics_hidden must be >= 1");
  for (int h : cfg.policy.value_hidden) require(h >= 1, "policy.value_hidden must be >= 1");
  for (int h : cfg.policy.morph_hidden) require(h >= 1, "policy.morph_hidden must be >= 1");
}

}  // namespace competevo
