#pragma once

#include <tsrl/env.hpp>
#include <tsrl/networks.hpp>

#include <memory>
#include <utility>
#include <vector>

namespace tsrl {

enum class GroupTag { Teacher, Student };

/// Flat trajectory storage for one iteration, env-major: row = env * T + t.
/// Latents are the ones used at collection time; teacher rows carry the
/// privileged encoding, student rows the proprioceptive one.
struct RolloutBatch {
  int n_envs = 0;
  int steps = 0;

  Mat obs;             // N x obs_dim
  Mat priv;            // N x priv_dim
  Mat hist;            // N x hist_dim
  Mat latents;         // N x latent_dim
  Mat est_pred;        // N x est_dim (0 cols when disabled)
  Mat est_targets;     // N x est_dim
  Mat actions;         // N x action_dim
  Mat behavior_means;  // N x action_dim
  Vec behavior_log_std;  // shared across the batch (params fixed while collecting)
  Vec behavior_log_probs;
  Vec values;
  Vec rewards;
  Vec tracking_terms;  // lin-tracking reward term per row
  std::vector<Termination> terminations;
  Vec timeout_values;      // critic bootstrap for TimeOut rows
  Vec trailing_bootstrap;  // per env, value after the last collected step
  std::vector<GroupTag> group_by_env;

  Vec advantages;  // normalized per group unless disabled
  Vec returns;
  bool advantages_normalized = false;

  std::vector<int> teacher_rows, student_rows;

  int rows() const { return n_envs * steps; }
  GroupTag row_group(int r) const { return group_by_env[r / steps]; }

  // per-group iteration statistics
  double mean_reward_teacher = 0.0, mean_reward_student = 0.0;
  double tracking_teacher = 0.0, tracking_student = 0.0;
  double mean_terrain_level = 0.0;
};

/// Single-sequence GAE with time-limit-aware bootstrapping:
///   delta_t = r_t + gamma * next_v - V_t
/// where next_v is V_{t+1} while running, the stored critic value of the
/// terminal state on TimeOut, and 0 on FallOver. The recursion cuts at every
/// episode end.
inline std::pair<Vec, Vec> compute_gae(const Vec& rewards, const Vec& values,
                                       const std::vector<Termination>& terminations,
                                       const Vec& timeout_values,
                                       double trailing_bootstrap, double gamma,
                                       double lambda) {
  const int T = static_cast<int>(rewards.size());
  Vec adv = Vec::Zero(T), ret = Vec::Zero(T);
  double gae = 0.0;
  for (int t = T - 1; t >= 0; --t) {
    double next_v;
    bool done = terminations[t] != Termination::Running;
    if (!done)
      next_v = (t == T - 1) ? trailing_bootstrap : values[t + 1];
    else if (terminations[t] == Termination::TimeOut)
      next_v = timeout_values.size() > 0 ? timeout_values[t] : 0.0;
    else
      next_v = 0.0;
    double delta = rewards[t] + gamma * next_v - values[t];
    gae = delta + gamma * lambda * (done ? 0.0 : 1.0) * gae;
    adv[t] = gae;
    ret[t] = adv[t] + values[t];
  }
  return {adv, ret};
}

struct CollectConfig {
  int steps_per_iter = 24;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  bool normalize_advantages = true;
  int workers = 1;
  bool estimator_targets_with_feet = false;
};

namespace detail {

inline Mat gather_rows(const Mat& m, const std::vector<int>& rows) {
  Mat out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (size_t i = 0; i < rows.size(); ++i) out.row(i) = m.row(rows[i]);
  return out;
}

inline Vec gather(const Vec& v, const std::vector<int>& rows) {
  Vec out(static_cast<Eigen::Index>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) out[i] = v[rows[i]];
  return out;
}

}  // namespace detail

/// Vectorized collection across environments. Network evaluation is batched
/// and single-threaded; env stepping fans out over `workers` with per-env
/// RNG streams and per-slot writes, so the batch is identical for any worker
/// count.
inline RolloutBatch collect_rollouts(const NetworkSet& nets,
                                     std::vector<std::unique_ptr<EnvBase>>& envs,
                                     const std::vector<GroupTag>& groups,
                                     const CollectConfig& cfg,
                                     std::vector<Rng>& action_rngs) {
  const int N = static_cast<int>(envs.size());
  const int T = cfg.steps_per_iter;
  if (N == 0 || static_cast<int>(groups.size()) != N ||
      static_cast<int>(action_rngs.size()) != N)
    throw std::invalid_argument("collect_rollouts: env/group/rng size mismatch");

  RolloutBatch b;
  b.n_envs = N;
  b.steps = T;
  b.group_by_env = groups;
  const int R = N * T;
  b.obs.resize(R, nets.obs_dim);
  b.priv.resize(R, nets.priv_dim);
  b.hist.resize(R, nets.hist_dim);
  b.latents.resize(R, nets.latent_dim);
  b.est_pred.resize(R, nets.est_dim);
  b.est_targets.resize(R, nets.est_dim);
  b.actions.resize(R, nets.action_dim);
  b.behavior_means.resize(R, nets.action_dim);
  b.behavior_log_std = nets.policy.policy_log_std;
  b.behavior_log_probs.resize(R);
  b.values.resize(R);
  b.rewards.resize(R);
  b.tracking_terms.resize(R);
  b.terminations.assign(R, Termination::Running);
  b.timeout_values = Vec::Zero(R);
  b.trailing_bootstrap = Vec::Zero(N);

  std::vector<int> teacher_envs, student_envs;
  for (int i = 0; i < N; ++i)
    (groups[i] == GroupTag::Teacher ? teacher_envs : student_envs).push_back(i);

  // single-row critic value for terminal bootstraps
  auto state_value = [&](const EnvBase& env, GroupTag g) {
    Mat s = env.privileged_state().flatten().transpose();
    Mat z = (g == GroupTag::Teacher)
                ? nets.encode_teacher(s)
                : nets.encode_student(env.history().flatten().transpose());
    Mat xv = hcat({&s, &z});
    return nets.value(xv)[0];
  };

  Mat obs_t(N, nets.obs_dim), priv_t(N, nets.priv_dim), hist_t(N, nets.hist_dim);
  Mat z_t(N, nets.latent_dim);

  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < N; ++i) {
      obs_t.row(i) = envs[i]->privileged_state().proprio.flatten();
      priv_t.row(i) = envs[i]->privileged_state().flatten();
      hist_t.row(i) = envs[i]->history().flatten();
    }

    if (!teacher_envs.empty()) {
      Mat zt = nets.encode_teacher(detail::gather_rows(priv_t, teacher_envs));
      for (size_t k = 0; k < teacher_envs.size(); ++k)
        z_t.row(teacher_envs[k]) = zt.row(k);
    }
    if (!student_envs.empty()) {
      Mat zs = nets.encode_student(detail::gather_rows(hist_t, student_envs));
      for (size_t k = 0; k < student_envs.size(); ++k)
        z_t.row(student_envs[k]) = zs.row(k);
    }
    if (!z_t.allFinite()) {
      for (int i = 0; i < N; ++i)
        if (!z_t.row(i).allFinite())
          throw std::runtime_error(
              strfmt("collect_rollouts: non-finite latent from env %d", i));
    }

    Mat est_t(N, nets.est_dim);
    if (nets.estimator_enabled()) est_t = nets.estimate(hist_t);

    Mat x_pol = hcat({&obs_t, &z_t, &est_t});
    Mat means = nets.policy_mean(x_pol);
    if (!means.allFinite()) {
      for (int i = 0; i < N; ++i)
        if (!means.row(i).allFinite())
          throw std::runtime_error(
              strfmt("collect_rollouts: non-finite action mean from env %d", i));
    }

    Mat acts(N, nets.action_dim);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < nets.action_dim; ++j)
        acts(i, j) = means(i, j) +
                     std::exp(b.behavior_log_std[j]) * action_rngs[i].normal();
    Vec logp = gaussian_log_prob_rows(means, b.behavior_log_std, acts);

    Mat x_val = hcat({&priv_t, &z_t});
    Vec vals = nets.value(x_val);

    for (int i = 0; i < N; ++i) {
      int r = i * T + t;
      b.obs.row(r) = obs_t.row(i);
      b.priv.row(r) = priv_t.row(i);
      b.hist.row(r) = hist_t.row(i);
      b.latents.row(r) = z_t.row(i);
      if (nets.est_dim > 0) {
        b.est_pred.row(r) = est_t.row(i);
        b.est_targets.row(r) =
            envs[i]->estimator_target(cfg.estimator_targets_with_feet);
      }
      b.actions.row(r) = acts.row(i);
      b.behavior_means.row(r) = means.row(i);
      b.behavior_log_probs[r] = logp[i];
      b.values[r] = vals[i];
    }

    parallel_for(N, cfg.workers, [&](int i) {
      int r = i * T + t;
      StepResult res = envs[i]->step(acts.row(i).transpose());
      b.rewards[r] = res.reward;
      b.tracking_terms[r] = res.terms.lin_tracking;
      b.terminations[r] = res.termination;
      if (res.termination == Termination::TimeOut)
        b.timeout_values[r] = state_value(*envs[i], groups[i]);
      if (res.termination != Termination::Running) envs[i]->finish_episode();
    });
  }

  // bootstrap values for sequences still running at the batch boundary
  for (int i = 0; i < N; ++i) {
    obs_t.row(i) = envs[i]->privileged_state().proprio.flatten();
    priv_t.row(i) = envs[i]->privileged_state().flatten();
    hist_t.row(i) = envs[i]->history().flatten();
  }
  if (!teacher_envs.empty()) {
    Mat zt = nets.encode_teacher(detail::gather_rows(priv_t, teacher_envs));
    for (size_t k = 0; k < teacher_envs.size(); ++k)
      z_t.row(teacher_envs[k]) = zt.row(k);
  }
  if (!student_envs.empty()) {
    Mat zs = nets.encode_student(detail::gather_rows(hist_t, student_envs));
    for (size_t k = 0; k < student_envs.size(); ++k)
      z_t.row(student_envs[k]) = zs.row(k);
  }
  {
    Mat x_val = hcat({&priv_t, &z_t});
    b.trailing_bootstrap = nets.value(x_val);
  }

  b.advantages.resize(R);
  b.returns.resize(R);
  for (int i = 0; i < N; ++i) {
    Vec rew = b.rewards.segment(i * T, T);
    Vec val = b.values.segment(i * T, T);
    std::vector<Termination> term(b.terminations.begin() + i * T,
                                  b.terminations.begin() + (i + 1) * T);
    Vec tov = b.timeout_values.segment(i * T, T);
    auto [adv, ret] = compute_gae(rew, val, term, tov, b.trailing_bootstrap[i],
                                  cfg.gamma, cfg.gae_lambda);
    b.advantages.segment(i * T, T) = adv;
    b.returns.segment(i * T, T) = ret;
  }

  for (int r = 0; r < R; ++r)
    (b.row_group(r) == GroupTag::Teacher ? b.teacher_rows : b.student_rows)
        .push_back(r);

  if (cfg.normalize_advantages) {
    for (const auto* rows : {&b.teacher_rows, &b.student_rows}) {
      if (rows->empty()) continue;
      Vec a = detail::gather(b.advantages, *rows);
      double mean = a.mean();
      double var = (a.array() - mean).square().sum() / a.size();
      double sd = std::sqrt(var);
      for (int r : *rows) b.advantages[r] = (b.advantages[r] - mean) / (sd + 1e-8);
    }
    b.advantages_normalized = true;
  }

  // per-group stats
  double rt = 0, rs = 0, trt = 0, trs = 0;
  for (int r : b.teacher_rows) { rt += b.rewards[r]; trt += b.tracking_terms[r]; }
  for (int r : b.student_rows) { rs += b.rewards[r]; trs += b.tracking_terms[r]; }
  int nt = static_cast<int>(b.teacher_rows.size());
  int ns = static_cast<int>(b.student_rows.size());
  b.mean_reward_teacher = nt ? rt / nt : std::nan("");
  b.mean_reward_student = ns ? rs / ns : std::nan("");
  b.tracking_teacher = nt ? trt / nt : std::nan("");
  b.tracking_student = ns ? trs / ns : std::nan("");
  double lvl = 0;
  for (const auto& e : envs) lvl += e->curriculum().terrain_level;
  b.mean_terrain_level = lvl / N;

  return b;
}

}  // namespace tsrl
