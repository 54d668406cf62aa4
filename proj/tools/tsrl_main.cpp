// Command-line front end: train / eval / gradcheck / export-latents.

#include <CLI11.hpp>

#include <tsrl/gradcheck.hpp>
#include <tsrl/runner.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace tsrl;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read file: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

RunConfig load_config(const std::string& path) {
  RunConfig cfg;
  if (!path.empty()) parse_config_text(read_file(path), cfg);
  return cfg;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct LoadedNets {
  NetworkSet nets;
  CheckpointHeader header;
};

LoadedNets load_nets(const std::string& path) {
  LoadedNets l;
  l.header = load_checkpoint(path, l.nets);
  return l;
}

/// Builds a per-terrain env set matched to a checkpoint and verifies the
/// network shapes fit the env.
std::vector<std::unique_ptr<EnvBase>> eval_envs_for(
    const RunConfig& cfg, const NetworkSet& nets, TerrainKind kind, int n_envs,
    int level, std::uint64_t seed) {
  RunConfig c = cfg;
  c.terrain_kinds = {kind};
  auto envs = make_envs(c, seed, n_envs);
  if (envs[0]->obs_dim() != nets.obs_dim || envs[0]->priv_dim() != nets.priv_dim)
    throw std::runtime_error(
        strfmt("checkpoint/net shape mismatch: env obs=%d priv=%d, nets obs=%d priv=%d",
               envs[0]->obs_dim(), envs[0]->priv_dim(), nets.obs_dim, nets.priv_dim));
  for (auto& e : envs)
    if (auto* w = dynamic_cast<WalkerEnv*>(e.get())) w->set_terrain_level(level);
  return envs;
}

int cmd_train(const std::string& config_path, std::uint64_t seed_override,
              bool has_seed, const std::string& mode_override,
              const std::string& out_dir, int iter_override, int envs_override,
              int workers_override) {
  RunConfig cfg;
  try {
    cfg = load_config(config_path);
    if (has_seed) cfg.seed = seed_override;
    if (!mode_override.empty()) cfg.algo.mode = train_mode_from_name(mode_override);
    if (iter_override >= 0) cfg.iterations = iter_override;
    if (envs_override > 0) cfg.n_envs = envs_override;
    if (workers_override > 0) cfg.workers = workers_override;
    cfg.validate();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "invalid config: %s\n", e.what());
    return 2;
  }

  auto t0 = std::chrono::steady_clock::now();
  RunResult res = run_training(cfg, out_dir);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!res.ok) {
    std::fprintf(stderr, "training aborted: %s\n", res.error.c_str());
    return 3;
  }
  std::printf("trained %d iterations in %.1f s (mode %s)\n", cfg.iterations, secs,
              train_mode_name(cfg.algo.mode));
  std::printf("metrics: %s\n", res.metrics_path.c_str());
  std::printf("checkpoint: %s\n", res.final_checkpoint.c_str());
  if (!res.rows.empty()) {
    const IterationRow& last = res.rows.back();
    std::printf("final tracking: teacher %.3f student %.3f\n",
                last.tracking_teacher, last.tracking_student);
  }
  return 0;
}

int cmd_eval(const std::vector<std::string>& checkpoints, const std::string& suite,
             const std::string& config_path, const std::string& out_dir,
             int n_envs, int episodes, double delta, int trials, int samples,
             int level, bool force, std::uint64_t seed,
             const std::vector<std::string>& runs) {
  fs::create_directories(out_dir);

  if (suite == "curves") {
    std::ofstream os(out_dir + "/curves.csv");
    os << "mode,seed,iteration,terrain_level,tracking_reward\n";
    for (const auto& run : runs) {
      RunConfig rc;
      parse_config_text(read_file(run + "/config.txt"), rc);
      auto rows = read_csv(run + "/metrics.csv");
      for (size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        // columns: iteration, wall_ms, phase, rew_t, rew_s, track_t, track_s, level, ...
        double track_t = std::strtod(r[5].c_str(), nullptr);
        double track_s = std::strtod(r[6].c_str(), nullptr);
        double track = std::isnan(track_t) ? track_s : track_t;
        os << train_mode_name(rc.algo.mode) << ',' << rc.seed << ',' << r[0]
           << ',' << r[7] << ',' << strfmt("%.17g", track) << "\n";
      }
    }
    std::printf("wrote %s/curves.csv from %zu runs\n", out_dir.c_str(), runs.size());
    return 0;
  }

  if (checkpoints.empty()) {
    std::fprintf(stderr, "eval: --checkpoint required\n");
    return 2;
  }
  std::vector<LoadedNets> loaded;
  try {
    for (const auto& p : checkpoints) loaded.push_back(load_nets(p));
  } catch (const std::exception& e) {
    std::fprintf(stderr, "checkpoint load failed: %s\n", e.what());
    return 2;
  }

  RunConfig cfg;
  try {
    cfg = load_config(config_path);
    if (config_path.empty()) cfg.profile = loaded[0].header.env_profile;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "invalid config: %s\n", e.what());
    return 2;
  }
  if (cfg.profile != loaded[0].header.env_profile) {
    if (!force) {
      std::fprintf(stderr,
                   "env profile mismatch: checkpoint trained on '%s', config says '%s' "
                   "(use --force to override)\n",
                   loaded[0].header.env_profile.c_str(), cfg.profile.c_str());
      return 2;
    }
    std::fprintf(stderr, "warning: forcing profile '%s' despite checkpoint '%s'\n",
                 cfg.profile.c_str(), loaded[0].header.env_profile.c_str());
  }

  std::vector<TerrainKind> kinds = cfg.profile == "terrain-walker"
                                       ? cfg.terrain_kinds
                                       : std::vector<TerrainKind>{TerrainKind::Flat};

  DeployEncoder deploy =
      deploy_encoder_for_mode(train_mode_from_name(loaded[0].header.mode));

  if (suite == "tracking") {
    std::ofstream os(out_dir + "/tracking.csv");
    os << "terrain,mean_error,std,seeds\n";
    std::printf("%-14s %12s %10s\n", "terrain", "mean_error", "std");
    for (TerrainKind k : kinds) {
      Vec per_seed(static_cast<int>(loaded.size()));
      for (size_t s = 0; s < loaded.size(); ++s) {
        auto envs = eval_envs_for(cfg, loaded[s].nets, k, n_envs, level, seed + s);
        per_seed[static_cast<int>(s)] =
            eval_tracking(loaded[s].nets, deploy, envs, episodes).mean_error;
      }
      double mean = per_seed.mean();
      double sd = loaded.size() > 1
                      ? std::sqrt((per_seed.array() - mean).square().sum() /
                                  per_seed.size())
                      : 0.0;
      os << terrain_kind_name(k) << ',' << strfmt("%.17g", mean) << ','
         << strfmt("%.17g", sd) << ',' << loaded.size() << "\n";
      std::printf("%-14s %12.4f %10.4f\n", terrain_kind_name(k), mean, sd);
    }
    return 0;
  }

  if (suite == "push") {
    std::ofstream os(out_dir + "/survival.csv");
    os << "terrain,survival_pct,trials,seeds\n";
    std::printf("%-14s %12s\n", "terrain", "survival_%");
    for (TerrainKind k : kinds) {
      Vec per_seed(static_cast<int>(loaded.size()));
      for (size_t s = 0; s < loaded.size(); ++s) {
        auto envs = eval_envs_for(cfg, loaded[s].nets, k, n_envs, level, seed + s);
        per_seed[static_cast<int>(s)] =
            eval_push_survival(loaded[s].nets, deploy, envs, delta, trials,
                               cfg.max_episode_steps, seed + 17 * s);
      }
      double mean = per_seed.mean();
      os << terrain_kind_name(k) << ',' << strfmt("%.17g", mean) << ',' << trials
         << ',' << loaded.size() << "\n";
      std::printf("%-14s %12.2f\n", terrain_kind_name(k), mean);
    }
    return 0;
  }

  if (suite == "latents") {
    std::vector<std::unique_ptr<EnvBase>> envs;
    std::vector<std::string> labels;
    for (TerrainKind k : kinds) {
      auto kenvs = eval_envs_for(cfg, loaded[0].nets, k, n_envs, level,
                                 seed + static_cast<int>(k));
      for (auto& e : kenvs) {
        envs.push_back(std::move(e));
        labels.push_back(terrain_kind_name(k));
      }
    }
    std::ofstream os(out_dir + "/latents.csv");
    int per_env = (samples + static_cast<int>(envs.size()) - 1) /
                  static_cast<int>(envs.size());
    long rows = export_latents(loaded[0].nets, envs, labels, per_env, os);
    std::printf("wrote %ld latent rows to %s/latents.csv\n", rows, out_dir.c_str());
    return 0;
  }

  std::fprintf(stderr, "unknown suite: %s\n", suite.c_str());
  return 2;
}

int cmd_gradcheck(int trials, std::uint64_t seed) {
  auto t0 = std::chrono::steady_clock::now();
  GradCheckSuiteResult res = gradcheck_suite(trials, seed);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (trials == 0)
    std::fprintf(stderr, "warning: zero trials requested, vacuous pass\n");
  std::printf("finite differences: %d/%d configurations passed (%.2f s)\n",
              res.passed, res.trials, secs);
  for (const auto& f : res.failures)
    std::printf("  FAIL seed=%llu at %s (rel err %.3e)\n",
                static_cast<unsigned long long>(f.config_seed), f.site.c_str(),
                f.rel_err);

  std::string msg;
  bool routing = gradient_routing_check(&msg, seed ^ 0xabcddcba);
  std::printf("gradient routing: %s\n", msg.c_str());
  return (res.pass() && routing) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"teacher-student PPO training engine"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "run a training experiment");
  std::string config_path, mode_override, out_dir = "run_out";
  std::uint64_t seed = 0;
  bool has_seed = false;
  int iterations = -1, n_envs = 0, workers = 0;
  train->add_option("--config", config_path, "config file (key = value lines)");
  train->add_option("--seed", seed)->each([&](const std::string&) { has_seed = true; });
  train->add_option("--mode", mode_override,
                    "concurrent|two_stage|baseline|oracle|estimator_net");
  train->add_option("--out", out_dir, "output directory");
  train->add_option("--iterations", iterations);
  train->add_option("--n-envs", n_envs);
  train->add_option("--workers", workers);

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate checkpoints");
  std::vector<std::string> checkpoints;
  std::string suite = "tracking", eval_config, eval_out = "eval_out", runs_csv;
  int eval_envs = 16, episodes = 2, trials = 32, samples = 1000, level = 0;
  double delta = 0.5;
  std::uint64_t eval_seed = 7;
  bool force = false;
  eval->add_option("--checkpoint", checkpoints, "checkpoint path(s), repeat for seeds");
  eval->add_option("--suite", suite, "tracking|push|latents|curves");
  eval->add_option("--config", eval_config);
  eval->add_option("--out", eval_out);
  eval->add_option("--n-envs", eval_envs);
  eval->add_option("--episodes", episodes);
  eval->add_option("--delta", delta, "push velocity change, m/s");
  eval->add_option("--trials", trials);
  eval->add_option("--samples", samples);
  eval->add_option("--level", level, "terrain difficulty for eval");
  eval->add_option("--seed", eval_seed);
  eval->add_option("--runs", runs_csv, "comma-separated run dirs (curves suite)");
  eval->add_flag("--force", force, "ignore env profile mismatch");

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "finite-difference self verification");
  int gc_trials = 120;
  std::uint64_t gc_seed = 12345;
  gc->add_option("--trials", gc_trials);
  gc->add_option("--seed", gc_seed);

  // export-latents
  auto* exl = app.add_subcommand("export-latents", "dump encoder latents to csv");
  std::string exl_checkpoint, exl_out = "eval_out";
  int exl_samples = 1000, exl_envs = 8, exl_level = 0;
  std::uint64_t exl_seed = 7;
  exl->add_option("--checkpoint", exl_checkpoint)->required();
  exl->add_option("--samples", exl_samples);
  exl->add_option("--out", exl_out);
  exl->add_option("--n-envs", exl_envs);
  exl->add_option("--level", exl_level);
  exl->add_option("--seed", exl_seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed())
      return cmd_train(config_path, seed, has_seed, mode_override, out_dir,
                       iterations, n_envs, workers);
    if (eval->parsed())
      return cmd_eval(checkpoints, suite, eval_config, eval_out, eval_envs,
                      episodes, delta, trials, samples, level, force, eval_seed,
                      split_list(runs_csv));
    if (gc->parsed()) return cmd_gradcheck(gc_trials, gc_seed);
    if (exl->parsed())
      return cmd_eval({exl_checkpoint}, "latents", "", exl_out, exl_envs, 1, 0.0,
                      1, exl_samples, exl_level, false, exl_seed, {});
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
