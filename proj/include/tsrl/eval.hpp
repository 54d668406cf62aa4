#pragma once

#include <tsrl/algo.hpp>
#include <tsrl/env.hpp>
#include <tsrl/networks.hpp>
#include <tsrl/rollout.hpp>

#include <memory>
#include <ostream>
#include <string>
#include <vector>

namespace tsrl {

/// Which encoder feeds the policy at deployment. The privileged one is only
/// meaningful for oracle-style checkpoints; everything else deploys the
/// proprioceptive encoder.
enum class DeployEncoder { Privileged, Proprioceptive };

inline DeployEncoder deploy_encoder_for_mode(TrainMode mode) {
  return mode == TrainMode::Oracle ? DeployEncoder::Privileged
                                   : DeployEncoder::Proprioceptive;
}

namespace detail {

/// Deterministic (mean) actions for a set of envs; optionally returns the
/// latents used.
inline Mat eval_actions(const NetworkSet& nets, DeployEncoder deploy,
                        const std::vector<std::unique_ptr<EnvBase>>& envs,
                        Mat* latents_out = nullptr) {
  const int N = static_cast<int>(envs.size());
  Mat obs(N, nets.obs_dim), priv(N, nets.priv_dim), hist(N, nets.hist_dim);
  for (int i = 0; i < N; ++i) {
    obs.row(i) = envs[i]->privileged_state().proprio.flatten();
    priv.row(i) = envs[i]->privileged_state().flatten();
    hist.row(i) = envs[i]->history().flatten();
  }
  Mat z = (deploy == DeployEncoder::Privileged) ? nets.encode_teacher(priv)
                                                : nets.encode_student(hist);
  Mat est(N, nets.est_dim);
  if (nets.estimator_enabled()) est = nets.estimate(hist);
  if (latents_out) *latents_out = z;
  Mat x = hcat({&obs, &z, &est});
  return nets.policy_mean(x);
}

}  // namespace detail

struct TrackingStat {
  double mean_error = 0.0;
  double std_across_envs = 0.0;
  long samples = 0;
};

/// Mean ||v_cmd_xy - v_xy|| under the deterministic policy, averaged over
/// steps, envs and episodes.
inline TrackingStat eval_tracking(const NetworkSet& nets, DeployEncoder deploy,
                                  std::vector<std::unique_ptr<EnvBase>>& envs,
                                  int episodes_per_env) {
  const int N = static_cast<int>(envs.size());
  std::vector<int> episodes_done(N, 0);
  std::vector<double> env_err_sum(N, 0.0);
  std::vector<long> env_steps(N, 0);

  for (auto& e : envs) e->reset();
  int active = N;
  while (active > 0) {
    Mat acts = detail::eval_actions(nets, deploy, envs);
    for (int i = 0; i < N; ++i) {
      if (episodes_done[i] >= episodes_per_env) continue;
      StepResult res = envs[i]->step(acts.row(i).transpose());
      env_err_sum[i] += envs[i]->tracking_error();
      env_steps[i] += 1;
      if (res.termination != Termination::Running) {
        episodes_done[i] += 1;
        if (episodes_done[i] >= episodes_per_env)
          active -= 1;
        else
          envs[i]->reset();
      }
    }
  }

  TrackingStat stat;
  double total = 0.0;
  long steps = 0;
  Vec per_env(N);
  for (int i = 0; i < N; ++i) {
    total += env_err_sum[i];
    steps += env_steps[i];
    per_env[i] = env_steps[i] > 0 ? env_err_sum[i] / env_steps[i] : 0.0;
  }
  stat.mean_error = steps > 0 ? total / steps : 0.0;
  stat.samples = steps;
  double m = per_env.mean();
  stat.std_across_envs = std::sqrt((per_env.array() - m).square().sum() / N);
  return stat;
}

/// Survival fraction under an impulsive velocity change of magnitude
/// push_delta in a uniformly random planar direction at a random mid-episode
/// step.
inline double eval_push_survival(const NetworkSet& nets, DeployEncoder deploy,
                                 std::vector<std::unique_ptr<EnvBase>>& envs,
                                 double push_delta, int n_trials,
                                 int max_episode_steps, std::uint64_t seed) {
  if (push_delta < 0.0)
    throw std::invalid_argument("eval_push_survival: push_delta must be >= 0");
  const int N = static_cast<int>(envs.size());
  Rng rng(seed);
  int survived = 0, done_trials = 0;

  while (done_trials < n_trials) {
    int wave = std::min(N, n_trials - done_trials);
    std::vector<int> push_step(wave);
    std::vector<double> push_dir(wave);
    std::vector<bool> finished(wave, false);
    for (int i = 0; i < wave; ++i) {
      envs[i]->reset();
      push_step[i] = static_cast<int>(
          rng.uniform_int(max_episode_steps / 4, 3 * max_episode_steps / 4));
      push_dir[i] = rng.uniform(0.0, 2.0 * M_PI);
    }
    int remaining = wave;
    int t = 0;
    while (remaining > 0) {
      Mat acts = detail::eval_actions(nets, deploy, envs);
      for (int i = 0; i < wave; ++i) {
        if (finished[i]) continue;
        if (t == push_step[i] && push_delta > 0.0) {
          Vec delta(2);
          delta << push_delta * std::cos(push_dir[i]),
              push_delta * std::sin(push_dir[i]);
          envs[i]->apply_velocity_delta(delta);
        }
        StepResult res = envs[i]->step(acts.row(i).transpose());
        if (res.termination != Termination::Running) {
          finished[i] = true;
          remaining -= 1;
          if (res.termination == Termination::TimeOut) survived += 1;
        }
      }
      t += 1;
    }
    done_trials += wave;
  }
  return 100.0 * survived / n_trials;
}

/// Unit-norm proprioceptive latents with their terrain label, for external
/// projection tooling.
inline long export_latents(const NetworkSet& nets,
                           std::vector<std::unique_ptr<EnvBase>>& envs,
                           const std::vector<std::string>& labels,
                           int samples_per_env, std::ostream& os) {
  const int N = static_cast<int>(envs.size());
  os << "terrain";
  for (int j = 0; j < nets.latent_dim; ++j) os << ",z" << j;
  os << "\n";

  for (auto& e : envs) e->reset();
  long written = 0;
  std::vector<int> count(N, 0);
  int remaining = N;
  while (remaining > 0) {
    Mat z;
    Mat acts = detail::eval_actions(nets, DeployEncoder::Proprioceptive, envs, &z);
    for (int i = 0; i < N; ++i) {
      if (count[i] >= samples_per_env) continue;
      os << labels[i];
      for (int j = 0; j < nets.latent_dim; ++j)
        os << ',' << strfmt("%.17g", z(i, j));
      os << "\n";
      written += 1;
      count[i] += 1;
      if (count[i] >= samples_per_env) { remaining -= 1; continue; }
      StepResult res = envs[i]->step(acts.row(i).transpose());
      if (res.termination != Termination::Running) envs[i]->reset();
    }
  }
  return written;
}

}  // namespace tsrl
