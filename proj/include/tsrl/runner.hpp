#pragma once

#include <tsrl/checkpoint.hpp>
#include <tsrl/config.hpp>
#include <tsrl/eval.hpp>
#include <tsrl/metrics.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

namespace tsrl {

inline bool estimator_targets_with_feet(const RunConfig& cfg) {
  return cfg.algo.mode == TrainMode::EstimatorNet && cfg.profile == "terrain-walker";
}

inline int estimator_output_dim(const RunConfig& cfg) {
  if (!cfg.algo.estimator_active()) return 0;
  return 2 + (estimator_targets_with_feet(cfg) ? WalkerEnv::kFeet : 0);
}

/// Environments for a run; terrain kinds are assigned round-robin on the
/// walker profile. Each env gets its own derived seed.
inline std::vector<std::unique_ptr<EnvBase>> make_envs(const RunConfig& cfg,
                                                       std::uint64_t seed,
                                                       int n_envs = -1) {
  if (n_envs < 0) n_envs = cfg.n_envs;
  EnvCommonConfig common = cfg.env_common();
  Rng master(seed ^ 0x5851f42d4c957f2dull);
  std::vector<std::unique_ptr<EnvBase>> envs;
  envs.reserve(n_envs);
  for (int i = 0; i < n_envs; ++i) {
    std::uint64_t s = master.next_u64();
    if (cfg.profile == "ctx-pointmass") {
      envs.push_back(std::make_unique<PointmassEnv>(common, cfg.pointmass, s));
    } else {
      TerrainKind kind = cfg.terrain_kinds[i % cfg.terrain_kinds.size()];
      envs.push_back(std::make_unique<WalkerEnv>(common, cfg.walker, kind, s));
    }
  }
  return envs;
}

inline NetworkSet make_networks(const RunConfig& cfg) {
  auto probe = make_envs(cfg, cfg.seed, 1);
  int obs_dim = probe[0]->obs_dim();
  int priv_dim = probe[0]->priv_dim();
  int hist_dim = (cfg.history + 1) * obs_dim;
  int action_dim = probe[0]->action_dim();
  return NetworkSet::create(obs_dim, priv_dim, hist_dim, action_dim,
                            cfg.latent_dim, estimator_output_dim(cfg),
                            cfg.hiddens, cfg.seed ^ 0x9e3779b97f4a7c15ull);
}

struct RunResult {
  bool ok = false;
  std::string error;
  std::vector<IterationRow> rows;
  std::string final_checkpoint;
  std::string metrics_path;
  LatentAudit audit;
};

/// End-to-end training: builds envs + networks, iterates
/// collect -> update, streams metrics.csv, writes periodic and final
/// checkpoints. On a non-finite abort a post-mortem checkpoint is written
/// and the result carries the error.
inline RunResult run_training(const RunConfig& cfg, const std::string& out_dir) {
  namespace fs = std::filesystem;
  cfg.validate();
  fs::create_directories(out_dir);

  RunResult result;
  std::string cfg_text = serialize_config(cfg);
  {
    std::ofstream os(out_dir + "/config.txt");
    os << cfg_text;
  }
  CheckpointHeader header;
  header.config_hash = fnv1a(cfg_text);
  header.env_profile = cfg.profile;
  header.mode = train_mode_name(cfg.algo.mode);

  auto envs = make_envs(cfg, cfg.seed);
  NetworkSet nets = make_networks(cfg);

  AlgoConfig algo = cfg.algo;
  algo.normalize_advantages = cfg.algo.normalize_advantages;
  Trainer trainer(algo, cfg.seed ^ 0xda3e39cb94b95bdbull);

  Rng action_master(cfg.seed ^ 0x853c49e6748fea9bull);
  std::vector<Rng> action_rngs;
  action_rngs.reserve(envs.size());
  for (size_t i = 0; i < envs.size(); ++i) action_rngs.emplace_back(action_master.next_u64());

  CollectConfig collect;
  collect.steps_per_iter = algo.steps_per_iter;
  collect.gamma = algo.gamma;
  collect.gae_lambda = algo.gae_lambda;
  collect.normalize_advantages = algo.normalize_advantages;
  collect.workers = cfg.workers;
  collect.estimator_targets_with_feet = estimator_targets_with_feet(cfg);

  result.metrics_path = out_dir + "/metrics.csv";
  MetricsWriter metrics(result.metrics_path);
  save_checkpoint(out_dir + "/checkpoint_init.ckpt", nets, header);

  int current_phase = trainer.phase_for_iteration(0, cfg.iterations);
  std::vector<GroupTag> groups =
      trainer.assign_groups(static_cast<int>(envs.size()), current_phase);

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    auto t0 = std::chrono::steady_clock::now();
    int phase = trainer.phase_for_iteration(iter, cfg.iterations);
    if (phase != current_phase) {
      current_phase = phase;
      groups = trainer.assign_groups(static_cast<int>(envs.size()), phase);
      for (auto& e : envs) e->reset();
      log_msg(LogLevel::Info, strfmt("entering phase %d at iteration %d", phase, iter));
    }

    try {
      RolloutBatch batch = collect_rollouts(nets, envs, groups, collect, action_rngs);
      UpdateReport rep = trainer.update(nets, batch, phase);

      IterationRow row;
      row.iteration = iter;
      row.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
      row.phase = phase;
      row.mean_reward_teacher = batch.mean_reward_teacher;
      row.mean_reward_student = batch.mean_reward_student;
      row.tracking_teacher = batch.tracking_teacher;
      row.tracking_student = batch.tracking_student;
      row.terrain_level = batch.mean_terrain_level;
      row.ppo_loss_teacher = rep.ppo_loss_teacher;
      row.ppo_loss_student = rep.ppo_loss_student;
      row.value_loss = rep.value_loss;
      row.rec_loss = rep.rec_loss;
      row.est_loss = rep.est_loss;
      row.kl = rep.mean_kl;
      row.lr = rep.current_lr;
      row.entropy = rep.entropy;
      metrics.write(row);
      result.rows.push_back(row);
    } catch (const std::exception& e) {
      std::string pm = out_dir + "/checkpoint_postmortem.ckpt";
      save_checkpoint(pm, nets, header);
      result.ok = false;
      result.error = strfmt("iteration %d aborted: %s (post-mortem checkpoint: %s)",
                            iter, e.what(), pm.c_str());
      log_msg(LogLevel::Error, result.error);
      result.audit = nets.audit;
      return result;
    }

    if (cfg.checkpoint_interval > 0 && (iter + 1) % cfg.checkpoint_interval == 0)
      save_checkpoint(strfmt("%s/checkpoint_%06d.ckpt", out_dir.c_str(), iter + 1),
                      nets, header);
    if (log_level() >= LogLevel::Info && (iter % 50 == 0 || iter == cfg.iterations - 1))
      log_msg(LogLevel::Info,
              strfmt("iter %d/%d tracking t=%.3f s=%.3f lr=%.2e", iter,
                     cfg.iterations, result.rows.back().tracking_teacher,
                     result.rows.back().tracking_student,
                     result.rows.back().lr));
  }

  result.final_checkpoint = out_dir + "/checkpoint_final.ckpt";
  save_checkpoint(result.final_checkpoint, nets, header);
  result.ok = true;
  result.audit = nets.audit;
  return result;
}

/// Routing assertions over one tiny iteration: an update driven only by the
/// reconstruction loss must leave theta, theta^t and phi bitwise unchanged,
/// and a PPO/value-only update must leave theta^s bitwise unchanged.
inline bool gradient_routing_check(std::string* message,
                                   std::uint64_t seed = 20240101) {
  auto params_equal = [](const NetworkParams& a, const NetworkParams& b) {
    for (size_t l = 0; l < a.layers.size(); ++l) {
      if (std::memcmp(a.layers[l].W.data(), b.layers[l].W.data(),
                      sizeof(double) * a.layers[l].W.size()) != 0)
        return false;
      if (std::memcmp(a.layers[l].b.data(), b.layers[l].b.data(),
                      sizeof(double) * a.layers[l].b.size()) != 0)
        return false;
    }
    return a.policy_log_std.size() == b.policy_log_std.size() &&
           std::memcmp(a.policy_log_std.data(), b.policy_log_std.data(),
                       sizeof(double) * a.policy_log_std.size()) == 0;
  };

  RunConfig cfg;
  cfg.n_envs = 4;
  cfg.max_episode_steps = 60;
  cfg.latent_dim = 4;
  cfg.hiddens.encoder = {12};
  cfg.hiddens.policy = {12};
  cfg.hiddens.critic = {12};
  cfg.seed = seed;
  cfg.algo.steps_per_iter = 8;

  for (int variant = 0; variant < 2; ++variant) {
    AlgoConfig algo = cfg.algo;
    if (variant == 0) {
      algo.ppo_epochs = 0;
      algo.rec_epochs = 1;
    } else {
      algo.ppo_epochs = 1;
      algo.rec_epochs = 0;
    }
    auto envs = make_envs(cfg, seed);
    NetworkSet nets = make_networks(cfg);
    Trainer trainer(algo, seed ^ 1);
    std::vector<GroupTag> groups = trainer.assign_groups(cfg.n_envs, 1);
    Rng am(seed ^ 2);
    std::vector<Rng> rngs;
    for (int i = 0; i < cfg.n_envs; ++i) rngs.emplace_back(am.next_u64());
    CollectConfig cc;
    cc.steps_per_iter = algo.steps_per_iter;
    RolloutBatch batch = collect_rollouts(nets, envs, groups, cc, rngs);

    NetworkParams policy0 = nets.policy, enc_t0 = nets.enc_teacher,
                  enc_s0 = nets.enc_student, critic0 = nets.critic;
    trainer.update(nets, batch, 1);

    if (variant == 0) {
      if (!params_equal(nets.policy, policy0) ||
          !params_equal(nets.enc_teacher, enc_t0) ||
          !params_equal(nets.critic, critic0)) {
        if (message) *message = "reconstruction-only update leaked into theta/theta^t/phi";
        return false;
      }
      if (params_equal(nets.enc_student, enc_s0)) {
        if (message) *message = "reconstruction-only update did not move theta^s";
        return false;
      }
    } else {
      if (!params_equal(nets.enc_student, enc_s0)) {
        if (message) *message = "PPO/value update leaked into theta^s";
        return false;
      }
    }
  }
  if (message) *message = "gradient routing intact";
  return true;
}

}  // namespace tsrl
