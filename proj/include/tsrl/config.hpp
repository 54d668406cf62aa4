#pragma once

#include <tsrl/algo.hpp>
#include <tsrl/env_pointmass.hpp>
#include <tsrl/env_walker.hpp>

#include <cstring>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

namespace tsrl {

/// Everything a run needs; every field has a default so an empty config file
/// is valid. Serializes to a flat `section.key = value` text file and back,
/// losslessly.
struct RunConfig {
  // run
  std::uint64_t seed = 1;
  int iterations = 1000;
  int workers = 1;
  int checkpoint_interval = 200;

  // env
  std::string profile = "ctx-pointmass";  // or "terrain-walker"
  std::string reward_profile = "quadruped";  // or "biped"
  int n_envs = 256;
  int history = 5;
  double dt = 0.02;
  int substeps = 4;
  int max_episode_steps = 1000;
  int command_resample_steps = 250;
  bool stagger_episodes = true;
  PointmassConfig pointmass;
  WalkerConfig walker;
  std::vector<TerrainKind> terrain_kinds{TerrainKind::Slope, TerrainKind::RoughSlope,
                                         TerrainKind::Stairs,
                                         TerrainKind::DiscreteObstacles};

  // networks
  int latent_dim = 32;
  NetworkHiddens hiddens;

  AlgoConfig algo;
  RewardConfig reward;  // quadruped profile by default
  DomainRandomization rand;
  CurriculumConfig curriculum;

  EnvCommonConfig env_common() const {
    EnvCommonConfig c;
    c.dt = dt;
    c.substeps = substeps;
    c.max_episode_steps = max_episode_steps;
    c.command_resample_steps = command_resample_steps;
    c.rand = rand;
    c.curriculum = curriculum;
    c.reward = reward;
    c.history = history;
    c.stagger_episodes = stagger_episodes;
    return c;
  }

  void validate() const {
    if (profile != "ctx-pointmass" && profile != "terrain-walker")
      throw std::invalid_argument("env.profile must be ctx-pointmass or terrain-walker");
    if (reward_profile != "quadruped" && reward_profile != "biped")
      throw std::invalid_argument("env.reward_profile must be quadruped or biped");
    if (n_envs < 1) throw std::invalid_argument("env.n_envs must be >= 1");
    if (iterations < 0) throw std::invalid_argument("run.iterations must be >= 0");
    if (history < 0) throw std::invalid_argument("env.history must be >= 0");
    if (latent_dim < 1) throw std::invalid_argument("nn.latent_dim must be >= 1");
    if (algo.clip_range <= 0) throw std::invalid_argument("algo.clip_range must be > 0");
    if (algo.ppo_epochs < 0 || algo.rec_epochs < 0)
      throw std::invalid_argument("epoch counts must be >= 0");
    if (algo.minibatches < 1 || algo.rec_minibatches < 1)
      throw std::invalid_argument("minibatch counts must be >= 1");
    if (terrain_kinds.empty() && profile == "terrain-walker")
      throw std::invalid_argument("env.terrain.kinds must not be empty");
  }
};

namespace detail {

struct ConfigKey {
  const char* name;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

inline std::string fmt_double(double v) { return strfmt("%.17g", v); }

inline double parse_double(const std::string& s) {
  size_t pos = 0;
  double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("bad number: " + s);
  return v;
}

inline long long parse_int(const std::string& s) {
  size_t pos = 0;
  long long v = std::stoll(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("bad integer: " + s);
  return v;
}

inline bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw std::invalid_argument("bad boolean: " + s);
}

inline std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    size_t a = item.find_first_not_of(" \t");
    size_t b = item.find_last_not_of(" \t");
    if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
  }
  return out;
}

inline std::string join_int_list(const std::vector<int>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s;
}

inline std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  for (const auto& item : split_csv(s)) out.push_back(static_cast<int>(parse_int(item)));
  return out;
}

#define TSRL_KEY_D(keyname, field)                                        \
  {keyname, [](const RunConfig& c) { return fmt_double(c.field); },       \
   [](RunConfig& c, const std::string& v) { c.field = parse_double(v); }}
#define TSRL_KEY_I(keyname, field)                                       \
  {keyname, [](const RunConfig& c) { return std::to_string(c.field); },  \
   [](RunConfig& c, const std::string& v) { c.field = static_cast<int>(parse_int(v)); }}
#define TSRL_KEY_B(keyname, field)                                          \
  {keyname, [](const RunConfig& c) { return c.field ? "true" : "false"; }, \
   [](RunConfig& c, const std::string& v) { c.field = parse_bool(v); }}
#define TSRL_KEY_IL(keyname, field)                                        \
  {keyname, [](const RunConfig& c) { return join_int_list(c.field); },     \
   [](RunConfig& c, const std::string& v) { c.field = parse_int_list(v); }}

inline const std::vector<ConfigKey>& config_registry() {
  static const std::vector<ConfigKey> keys = {
      {"run.seed",
       [](const RunConfig& c) { return std::to_string(c.seed); },
       [](RunConfig& c, const std::string& v) {
         c.seed = static_cast<std::uint64_t>(std::stoull(v));
       }},
      TSRL_KEY_I("run.iterations", iterations),
      TSRL_KEY_I("run.workers", workers),
      TSRL_KEY_I("run.checkpoint_interval", checkpoint_interval),

      {"env.profile", [](const RunConfig& c) { return c.profile; },
       [](RunConfig& c, const std::string& v) { c.profile = v; }},
      {"env.reward_profile",
       [](const RunConfig& c) { return c.reward_profile; },
       [](RunConfig& c, const std::string& v) {
         c.reward_profile = v;
         // profile picks the weight set; later reward.* keys override
         if (v == "quadruped")
           c.reward = quadruped_reward_config();
         else if (v == "biped")
           c.reward = biped_reward_config();
         else
           throw std::invalid_argument("bad reward profile: " + v);
       }},
      TSRL_KEY_I("env.n_envs", n_envs),
      TSRL_KEY_I("env.history", history),
      TSRL_KEY_D("env.dt", dt),
      TSRL_KEY_I("env.substeps", substeps),
      TSRL_KEY_I("env.max_episode_steps", max_episode_steps),
      TSRL_KEY_I("env.command_resample_steps", command_resample_steps),
      TSRL_KEY_B("env.stagger_episodes", stagger_episodes),

      TSRL_KEY_D("env.pointmass.nominal_mass", pointmass.nominal_mass),
      TSRL_KEY_D("env.pointmass.motor_scale", pointmass.motor_scale),
      TSRL_KEY_D("env.pointmass.accel_noise_std", pointmass.accel_noise_std),
      TSRL_KEY_D("env.pointmass.initial_speed", pointmass.initial_speed),

      TSRL_KEY_D("env.walker.noise_scale", walker.noise_scale),
      TSRL_KEY_D("env.walker.kp_hip", walker.kp_hip),
      TSRL_KEY_D("env.walker.kd_hip", walker.kd_hip),
      TSRL_KEY_D("env.walker.kp_len", walker.kp_len),
      TSRL_KEY_D("env.walker.kd_len", walker.kd_len),
      TSRL_KEY_D("env.walker.action_scale", walker.action_scale),
      TSRL_KEY_D("env.walker.base_mass", walker.base_mass),

      {"env.terrain.kinds",
       [](const RunConfig& c) {
         std::string s;
         for (size_t i = 0; i < c.terrain_kinds.size(); ++i) {
           if (i) s += ",";
           s += terrain_kind_name(c.terrain_kinds[i]);
         }
         return s;
       },
       [](RunConfig& c, const std::string& v) {
         c.terrain_kinds.clear();
         for (const auto& name : split_csv(v))
           c.terrain_kinds.push_back(terrain_kind_from_name(name));
       }},

      TSRL_KEY_I("nn.latent_dim", latent_dim),
      TSRL_KEY_IL("nn.encoder_hidden", hiddens.encoder),
      TSRL_KEY_IL("nn.policy_hidden", hiddens.policy),
      TSRL_KEY_IL("nn.critic_hidden", hiddens.critic),
      TSRL_KEY_IL("nn.estimator_hidden", hiddens.estimator),

      {"algo.mode",
       [](const RunConfig& c) { return std::string(train_mode_name(c.algo.mode)); },
       [](RunConfig& c, const std::string& v) { c.algo.mode = train_mode_from_name(v); }},
      TSRL_KEY_D("algo.clip_range", algo.clip_range),
      TSRL_KEY_D("algo.entropy_coef", algo.entropy_coef),
      TSRL_KEY_D("algo.gamma", algo.gamma),
      TSRL_KEY_D("algo.gae_lambda", algo.gae_lambda),
      TSRL_KEY_D("algo.desired_kl", algo.desired_kl),
      TSRL_KEY_I("algo.ppo_epochs", algo.ppo_epochs),
      TSRL_KEY_I("algo.minibatches", algo.minibatches),
      TSRL_KEY_D("algo.lr_init", algo.lr_init),
      TSRL_KEY_D("algo.lr_min", algo.lr_min),
      TSRL_KEY_D("algo.lr_max", algo.lr_max),
      TSRL_KEY_D("algo.lr_rec", algo.lr_rec),
      TSRL_KEY_I("algo.rec_epochs", algo.rec_epochs),
      TSRL_KEY_I("algo.rec_minibatches", algo.rec_minibatches),
      TSRL_KEY_D("algo.grad_clip", algo.grad_clip),
      TSRL_KEY_D("algo.log_std_min", algo.log_std_min),
      TSRL_KEY_D("algo.log_std_max", algo.log_std_max),
      TSRL_KEY_B("algo.adaptive_lr", algo.adaptive_lr_enabled),
      TSRL_KEY_B("algo.normalize_advantages", algo.normalize_advantages),
      TSRL_KEY_B("algo.critic_to_encoder", algo.critic_to_encoder),
      TSRL_KEY_B("algo.recompute_student_latent", algo.recompute_student_latent),
      TSRL_KEY_B("algo.estimator_enabled", algo.estimator_enabled),
      TSRL_KEY_D("algo.two_stage_split", algo.two_stage_split),
      TSRL_KEY_I("algo.steps_per_iter", algo.steps_per_iter),

      TSRL_KEY_D("reward.lin_tracking", reward.lin_tracking),
      TSRL_KEY_D("reward.ang_tracking", reward.ang_tracking),
      TSRL_KEY_D("reward.lin_vel_z", reward.lin_vel_z),
      TSRL_KEY_D("reward.ang_vel_xy", reward.ang_vel_xy),
      TSRL_KEY_D("reward.joint_accel", reward.joint_accel),
      TSRL_KEY_D("reward.joint_power", reward.joint_power),
      TSRL_KEY_D("reward.joint_torque", reward.joint_torque),
      TSRL_KEY_D("reward.base_height", reward.base_height),
      TSRL_KEY_D("reward.action_rate", reward.action_rate),
      TSRL_KEY_D("reward.action_smoothness", reward.action_smoothness),
      TSRL_KEY_D("reward.collision", reward.collision),
      TSRL_KEY_D("reward.joint_limit", reward.joint_limit),
      TSRL_KEY_D("reward.feet_regulation", reward.feet_regulation),
      TSRL_KEY_D("reward.orientation_xy", reward.orientation_xy),
      TSRL_KEY_D("reward.feet_distance", reward.feet_distance),
      TSRL_KEY_D("reward.feet_contact_force", reward.feet_contact_force),
      TSRL_KEY_D("reward.feet_velocity", reward.feet_velocity),
      TSRL_KEY_D("reward.desired_height", reward.desired_height),
      TSRL_KEY_D("reward.gait_period", reward.gait_period),
      TSRL_KEY_D("reward.stance_fraction", reward.stance_fraction),
      TSRL_KEY_B("reward.smoothness_printed_sign", reward.smoothness_printed_sign),

      TSRL_KEY_B("rand.enabled", rand.enabled),
      TSRL_KEY_D("rand.link_mass_min", rand.link_mass_min),
      TSRL_KEY_D("rand.link_mass_max", rand.link_mass_max),
      TSRL_KEY_D("rand.payload_min", rand.payload_min),
      TSRL_KEY_D("rand.payload_max", rand.payload_max),
      TSRL_KEY_D("rand.com_x_min", rand.com_x_min),
      TSRL_KEY_D("rand.com_x_max", rand.com_x_max),
      TSRL_KEY_D("rand.com_y_min", rand.com_y_min),
      TSRL_KEY_D("rand.com_y_max", rand.com_y_max),
      TSRL_KEY_D("rand.com_z_min", rand.com_z_min),
      TSRL_KEY_D("rand.com_z_max", rand.com_z_max),
      TSRL_KEY_D("rand.friction_min", rand.friction_min),
      TSRL_KEY_D("rand.friction_max", rand.friction_max),
      TSRL_KEY_D("rand.restitution_min", rand.restitution_min),
      TSRL_KEY_D("rand.restitution_max", rand.restitution_max),
      TSRL_KEY_D("rand.kp_scale_min", rand.kp_scale_min),
      TSRL_KEY_D("rand.kp_scale_max", rand.kp_scale_max),
      TSRL_KEY_D("rand.kd_scale_min", rand.kd_scale_min),
      TSRL_KEY_D("rand.kd_scale_max", rand.kd_scale_max),
      TSRL_KEY_D("rand.action_delay_min", rand.action_delay_min),
      TSRL_KEY_D("rand.action_delay_max", rand.action_delay_max),
      TSRL_KEY_D("rand.accel_bias_min", rand.accel_bias_min),
      TSRL_KEY_D("rand.accel_bias_max", rand.accel_bias_max),

      TSRL_KEY_D("curriculum.promote_threshold", curriculum.promote_threshold),
      TSRL_KEY_D("curriculum.demote_ratio", curriculum.demote_ratio),
      TSRL_KEY_D("curriculum.command_increment", curriculum.command_increment),
      TSRL_KEY_D("curriculum.initial_command_range", curriculum.initial_command_range),
      TSRL_KEY_D("curriculum.max_command_range", curriculum.max_command_range),
      TSRL_KEY_D("curriculum.initial_yaw_range", curriculum.initial_yaw_range),
  };
  return keys;
}

#undef TSRL_KEY_D
#undef TSRL_KEY_I
#undef TSRL_KEY_B
#undef TSRL_KEY_IL

}  // namespace detail

inline std::string serialize_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& k : detail::config_registry()) {
    out += k.name;
    out += " = ";
    out += k.get(cfg);
    out += "\n";
  }
  return out;
}

inline std::uint64_t config_hash(const RunConfig& cfg) {
  return fnv1a(serialize_config(cfg));
}

/// Parses `key = value` lines into cfg. `#` starts a comment; unknown keys
/// are an error naming the key. env.reward_profile is applied before any
/// explicit reward.* overrides regardless of file order.
inline void parse_config_text(const std::string& text, RunConfig& cfg) {
  const auto& registry = detail::config_registry();
  auto find_key = [&](const std::string& name) -> const detail::ConfigKey* {
    for (const auto& k : registry)
      if (name == k.name) return &k;
    return nullptr;
  };

  std::vector<std::pair<std::string, std::string>> pairs;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    size_t a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(strfmt("config line %d: missing '='", lineno));
    auto trim = [](std::string s) {
      size_t x = s.find_first_not_of(" \t\r");
      size_t y = s.find_last_not_of(" \t\r");
      return x == std::string::npos ? std::string() : s.substr(x, y - x + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (!find_key(key))
      throw std::invalid_argument("unknown config key: " + key);
    pairs.emplace_back(key, value);
  }

  for (const auto& [key, value] : pairs)
    if (key == "env.reward_profile") find_key(key)->set(cfg, value);
  for (const auto& [key, value] : pairs) {
    if (key == "env.reward_profile") continue;
    try {
      find_key(key)->set(cfg, value);
    } catch (const std::exception& e) {
      throw std::invalid_argument(strfmt("config key %s: %s", key.c_str(), e.what()));
    }
  }
}

inline RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  parse_config_text(text, cfg);
  cfg.validate();
  return cfg;
}

}  // namespace tsrl
