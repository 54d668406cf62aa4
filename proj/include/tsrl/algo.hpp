#pragma once

#include <tsrl/networks.hpp>
#include <tsrl/rollout.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace tsrl {

enum class TrainMode { Concurrent, TwoStage, Baseline, Oracle, EstimatorNet };

inline const char* train_mode_name(TrainMode m) {
  switch (m) {
    case TrainMode::Concurrent: return "concurrent";
    case TrainMode::TwoStage: return "two_stage";
    case TrainMode::Baseline: return "baseline";
    case TrainMode::Oracle: return "oracle";
    case TrainMode::EstimatorNet: return "estimator_net";
  }
  return "?";
}

inline TrainMode train_mode_from_name(const std::string& s) {
  if (s == "concurrent") return TrainMode::Concurrent;
  if (s == "two_stage") return TrainMode::TwoStage;
  if (s == "baseline") return TrainMode::Baseline;
  if (s == "oracle") return TrainMode::Oracle;
  if (s == "estimator_net") return TrainMode::EstimatorNet;
  throw std::invalid_argument("unknown training mode: " + s);
}

struct AlgoConfig {
  double clip_range = 0.2;
  double entropy_coef = 0.01;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double desired_kl = 0.01;
  int ppo_epochs = 5;
  int minibatches = 4;
  double lr_init = 1e-3;   // adaptive
  double lr_min = 1e-5, lr_max = 1e-2;
  double lr_rec = 1e-3;    // alpha_ts
  int rec_epochs = 5;
  int rec_minibatches = 4;
  double grad_clip = 1.0;
  // exploration noise bounds; unbounded log-std collapse makes the KL
  // criterion hypersensitive at small batch sizes
  double log_std_min = -1.6;
  double log_std_max = 1.0;
  TrainMode mode = TrainMode::Concurrent;
  bool adaptive_lr_enabled = true;
  bool normalize_advantages = true;
  bool critic_to_encoder = false;        // route value-loss grads into theta^t
  bool recompute_student_latent = false; // refresh z^s per epoch (no grad)
  bool estimator_enabled = false;        // implied by EstimatorNet
  double two_stage_split = 0.6;          // fraction of iterations in phase 1
  int steps_per_iter = 24;

  bool estimator_active() const {
    return estimator_enabled || mode == TrainMode::EstimatorNet;
  }
};

struct UpdateReport {
  double ppo_loss_teacher = std::nan("");
  double ppo_loss_student = std::nan("");
  double value_loss = std::nan("");
  double rec_loss = std::nan("");
  double est_loss = std::nan("");
  double mean_kl = std::nan("");
  double entropy = std::nan("");
  double current_lr = 0.0;
  double grad_norm_policy = 0.0;
  double grad_norm_enc_teacher = 0.0;
  double grad_norm_enc_student = 0.0;
  double grad_norm_critic = 0.0;
  double grad_norm_estimator = 0.0;
};

inline double ppo_ratio(double new_log_prob, double old_log_prob) {
  return std::exp(new_log_prob - old_log_prob);
}

/// Mean clipped surrogate over one group's rows (the objective being
/// maximized, before the entropy bonus).
inline double ppo_clip_objective(const Vec& ratios, const Vec& advantages,
                                 double clip_range) {
  if (ratios.size() == 0)
    throw std::invalid_argument("ppo_clip_objective: empty group");
  double s = 0.0;
  for (int i = 0; i < ratios.size(); ++i) {
    double r = ratios[i], a = advantages[i];
    s += std::min(r * a, std::clamp(r, 1.0 - clip_range, 1.0 + clip_range) * a);
  }
  return s / ratios.size();
}

/// KL-banded learning-rate adaptation.
inline double adaptive_lr(double current_lr, double measured_kl,
                          double desired_kl = 0.01, double lr_min = 1e-5,
                          double lr_max = 1e-2) {
  double lr = current_lr;
  if (measured_kl > 2.0 * desired_kl)
    lr /= 1.5;
  else if (measured_kl < 0.5 * desired_kl)
    lr *= 1.5;
  return std::clamp(lr, lr_min, lr_max);
}

/// Raised when a loss or gradient goes non-finite; the runner writes a
/// post-mortem checkpoint and exits nonzero.
struct TrainAbort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Trainer {
 public:
  Trainer(const AlgoConfig& cfg, std::uint64_t seed)
      : cfg_(cfg), lr_(cfg.lr_init), rng_(seed) {}

  const AlgoConfig& config() const { return cfg_; }
  double current_lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

  /// TwoStage flips from teacher-only RL to student distillation at the
  /// configured split; every other mode is single-phase.
  int phase_for_iteration(int iteration, int total_iterations) const {
    if (cfg_.mode != TrainMode::TwoStage) return 1;
    int boundary = static_cast<int>(total_iterations * cfg_.two_stage_split);
    return iteration < boundary ? 1 : 2;
  }

  /// Which encoder drives each environment. Group assignment is static per
  /// run so curriculum statistics stay comparable.
  std::vector<GroupTag> assign_groups(int n_envs, int phase) const {
    std::vector<GroupTag> g(n_envs, GroupTag::Student);
    switch (cfg_.mode) {
      case TrainMode::Concurrent:
        for (int i = 0; i < n_envs / 2; ++i) g[i] = GroupTag::Teacher;
        break;
      case TrainMode::TwoStage:
        if (phase == 1) std::fill(g.begin(), g.end(), GroupTag::Teacher);
        break;
      case TrainMode::Oracle:
        std::fill(g.begin(), g.end(), GroupTag::Teacher);
        break;
      case TrainMode::Baseline:
      case TrainMode::EstimatorNet:
        break;  // all student
    }
    return g;
  }

  /// Does PPO differentiate through the proprioceptive encoder? Only in the
  /// end-to-end ablations; the architecture proper trains theta^s by
  /// reconstruction alone.
  bool student_encoder_policy_gradient() const {
    return cfg_.mode == TrainMode::Baseline || cfg_.mode == TrainMode::EstimatorNet;
  }

  struct PpoMinibatchResult {
    NetworkParams grad_policy, grad_enc_teacher, grad_enc_student, grad_critic;
    bool has_enc_teacher = false, has_enc_student = false;
    double objective_teacher = std::nan("");
    double objective_student = std::nan("");
    double value_loss = 0.0;
    double kl = 0.0;
    double max_ratio_deviation = 0.0;  // max |r - 1| over the minibatch
    int n_teacher = 0, n_student = 0;
  };

  /// Gradients (descent orientation) of the summed PPO objective and the
  /// value loss over one set of batch rows. Exposed so tests can compare
  /// clipped against unclipped gradients and check routing.
  PpoMinibatchResult compute_ppo_gradients(const NetworkSet& nets,
                                           const RolloutBatch& batch,
                                           const std::vector<int>& rows,
                                           bool clip_enabled = true) const {
    PpoMinibatchResult out;
    out.grad_policy = nets.policy.zeros_like();
    out.grad_critic = nets.critic.zeros_like();

    std::vector<int> rows_t, rows_s;
    for (int r : rows)
      (batch.row_group(r) == GroupTag::Teacher ? rows_t : rows_s).push_back(r);
    out.n_teacher = static_cast<int>(rows_t.size());
    out.n_student = static_cast<int>(rows_s.size());

    double kl_weighted = 0.0;

    // ---- policy surrogate per group ----
    struct GroupPass {
      const std::vector<int>* rows;
      bool through_encoder;
      bool teacher;
    };
    std::vector<GroupPass> passes;
    if (!rows_t.empty()) passes.push_back({&rows_t, true, true});
    if (!rows_s.empty())
      passes.push_back({&rows_s, student_encoder_policy_gradient(), false});

    for (const auto& pass : passes) {
      const auto& idx = *pass.rows;
      const int n = static_cast<int>(idx.size());
      Mat obs = detail::gather_rows(batch.obs, idx);
      Mat acts = detail::gather_rows(batch.actions, idx);
      Mat est = detail::gather_rows(batch.est_pred, idx);
      Vec old_lp = detail::gather(batch.behavior_log_probs, idx);
      Vec adv = detail::gather(batch.advantages, idx);

      MlpCache enc_cache;
      Mat z;
      if (pass.through_encoder) {
        if (pass.teacher)
          z = nets.encode_teacher(detail::gather_rows(batch.priv, idx), &enc_cache);
        else
          z = nets.encode_student(detail::gather_rows(batch.hist, idx), &enc_cache);
      } else if (cfg_.recompute_student_latent && !pass.teacher) {
        // refreshed feature, still no gradient into theta^s
        z = nets.encode_student(detail::gather_rows(batch.hist, idx));
      } else {
        z = detail::gather_rows(batch.latents, idx);
      }

      MlpCache pol_cache;
      Mat x = hcat({&obs, &z, &est});
      Mat means = nets.policy_mean(x, &pol_cache);
      const Vec& log_std = nets.policy.policy_log_std;
      Vec lp = gaussian_log_prob_rows(means, log_std, acts);

      // objective J = mean(min(r A, clip(r) A)) + c_e * entropy
      double obj = 0.0;
      Vec dJ_dlp = Vec::Zero(n);
      for (int i = 0; i < n; ++i) {
        double r = ppo_ratio(lp[i], old_lp[i]);
        out.max_ratio_deviation = std::max(out.max_ratio_deviation, std::abs(r - 1.0));
        double v1 = r * adv[i];
        if (clip_enabled) {
          double v2 = std::clamp(r, 1.0 - cfg_.clip_range, 1.0 + cfg_.clip_range) * adv[i];
          obj += std::min(v1, v2);
          if (v1 <= v2) dJ_dlp[i] = v1 / n;  // d(r A)/d lp = r A
        } else {
          obj += v1;
          dJ_dlp[i] = v1 / n;
        }
      }
      obj /= n;
      double entropy = gaussian_entropy(log_std);
      obj += cfg_.entropy_coef * entropy;

      if (pass.teacher)
        out.objective_teacher = obj;
      else
        out.objective_student = obj;

      // backprop through the Gaussian head
      Mat dMeans(n, nets.action_dim);
      Vec dLogStd = Vec::Constant(nets.action_dim, cfg_.entropy_coef);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < nets.action_dim; ++j) {
          double sig = std::exp(log_std[j]);
          double zz = (acts(i, j) - means(i, j)) / sig;
          dMeans(i, j) = dJ_dlp[i] * zz / sig;
          dLogStd[j] += dJ_dlp[i] * (zz * zz - 1.0);
        }
      }

      MlpGrads pol_grads = mlp_backward(nets.policy, nets.policy_spec, pol_cache, dMeans);
      for (size_t l = 0; l < out.grad_policy.layers.size(); ++l) {
        out.grad_policy.layers[l].W -= pol_grads.params.layers[l].W;  // ascent
        out.grad_policy.layers[l].b -= pol_grads.params.layers[l].b;
      }
      out.grad_policy.policy_log_std -= dLogStd;

      if (pass.through_encoder) {
        Mat dz = pol_grads.input.middleCols(nets.obs_dim, nets.latent_dim);
        if (pass.teacher) {
          MlpGrads eg = mlp_backward(nets.enc_teacher, nets.enc_teacher_spec,
                                     enc_cache, dz);
          out.grad_enc_teacher = eg.params;
          for (auto& l : out.grad_enc_teacher.layers) { l.W *= -1.0; l.b *= -1.0; }
          out.has_enc_teacher = true;
        } else {
          MlpGrads eg = mlp_backward(nets.enc_student, nets.enc_student_spec,
                                     enc_cache, dz);
          out.grad_enc_student = eg.params;
          for (auto& l : out.grad_enc_student.layers) { l.W *= -1.0; l.b *= -1.0; }
          out.has_enc_student = true;
        }
      }

      // analytic KL(behavior || current), averaged over rows
      Mat old_means = detail::gather_rows(batch.behavior_means, idx);
      Mat old_log_stds = batch.behavior_log_std.transpose().replicate(n, 1);
      kl_weighted += n * gaussian_mean_kl_rows(old_means, old_log_stds, means, log_std);
    }
    out.kl = rows.empty() ? 0.0 : kl_weighted / rows.size();

    // ---- value regression over all rows (both groups pooled) ----
    {
      const int n = static_cast<int>(rows.size());
      Mat priv = detail::gather_rows(batch.priv, rows);
      Mat z = detail::gather_rows(batch.latents, rows);
      Vec ret = detail::gather(batch.returns, rows);

      MlpCache enc_cache;
      std::vector<int> local_teacher;  // positions within `rows`
      if (cfg_.critic_to_encoder) {
        // recompute teacher latents with a cache so value grads can reach
        // theta^t
        std::vector<int> rt;
        for (int i = 0; i < n; ++i)
          if (batch.row_group(rows[i]) == GroupTag::Teacher) {
            local_teacher.push_back(i);
            rt.push_back(rows[i]);
          }
        if (!rt.empty()) {
          Mat zt = nets.encode_teacher(detail::gather_rows(batch.priv, rt), &enc_cache);
          for (size_t k = 0; k < local_teacher.size(); ++k)
            z.row(local_teacher[k]) = zt.row(k);
        }
      }

      MlpCache val_cache;
      Mat xv = hcat({&priv, &z});
      Vec v = nets.value(xv, &val_cache);
      Vec diff = v - ret;
      out.value_loss = diff.squaredNorm() / n;

      Mat dV = (2.0 / n) * diff;
      MlpGrads vg = mlp_backward(nets.critic, nets.critic_spec, val_cache,
                                 Mat(dV));
      out.grad_critic = vg.params;

      if (cfg_.critic_to_encoder && !local_teacher.empty()) {
        Mat dz_all = vg.input.middleCols(nets.priv_dim, nets.latent_dim);
        Mat dz(static_cast<Eigen::Index>(local_teacher.size()), nets.latent_dim);
        for (size_t k = 0; k < local_teacher.size(); ++k)
          dz.row(k) = dz_all.row(local_teacher[k]);
        MlpGrads eg = mlp_backward(nets.enc_teacher, nets.enc_teacher_spec,
                                   enc_cache, dz);
        if (!out.has_enc_teacher) {
          out.grad_enc_teacher = eg.params;
          out.has_enc_teacher = true;
        } else {
          out.grad_enc_teacher.axpy(1.0, eg.params);
        }
      }
    }
    return out;
  }

  /// One full update from a collected batch (Algorithm-level steps 5-10).
  UpdateReport update(NetworkSet& nets, const RolloutBatch& batch, int phase = 1) {
    UpdateReport rep;
    rep.entropy = gaussian_entropy(nets.policy.policy_log_std);

    if (cfg_.mode == TrainMode::TwoStage && phase == 2) {
      distill_update(nets, batch, rep);
      rep.current_lr = lr_;
      return rep;
    }

    ppo_update(nets, batch, rep);
    if (cfg_.mode == TrainMode::Concurrent && !batch.student_rows.empty())
      reconstruction_update(nets, batch, rep);
    if (cfg_.estimator_active() && nets.estimator_enabled())
      estimator_update(nets, batch, rep);
    rep.current_lr = lr_;
    return rep;
  }

  /// Mean squared latent mismatch on student rows; targets come from the
  /// privileged encoder and are treated as constants.
  double reconstruction_loss(const NetworkSet& nets, const RolloutBatch& batch,
                             const std::vector<int>& student_rows) const {
    if (student_rows.empty())
      throw std::invalid_argument("reconstruction_loss: no student rows");
    Mat zs = nets.encode_student(detail::gather_rows(batch.hist, student_rows));
    Mat zt = nets.encode_teacher(detail::gather_rows(batch.priv, student_rows));
    return (zs - zt).squaredNorm() / student_rows.size();
  }

  double estimator_loss(const NetworkSet& nets, const RolloutBatch& batch,
                        const std::vector<int>& rows) const {
    if (!nets.estimator_enabled())
      throw std::invalid_argument("estimator_loss: estimator head disabled");
    Mat pred = nets.estimate(detail::gather_rows(batch.hist, rows));
    Mat tgt = detail::gather_rows(batch.est_targets, rows);
    return (pred - tgt).squaredNorm() / rows.size();
  }

 private:
  static void check_finite(double v, const char* what) {
    if (!std::isfinite(v))
      throw TrainAbort(std::string("non-finite ") + what + " during update");
  }

  std::vector<std::vector<int>> minibatch_partition(std::vector<int> idx,
                                                    int n_minibatches) {
    std::shuffle(idx.begin(), idx.end(), rng_.engine());
    std::vector<std::vector<int>> chunks;
    int n = static_cast<int>(idx.size());
    n_minibatches = std::max(1, std::min(n_minibatches, n));
    int base = n / n_minibatches, rem = n % n_minibatches;
    int at = 0;
    for (int k = 0; k < n_minibatches; ++k) {
      int sz = base + (k < rem ? 1 : 0);
      chunks.emplace_back(idx.begin() + at, idx.begin() + at + sz);
      at += sz;
    }
    return chunks;
  }

  void ppo_update(NetworkSet& nets, const RolloutBatch& batch, UpdateReport& rep) {
    std::vector<int> all_rows(batch.rows());
    std::iota(all_rows.begin(), all_rows.end(), 0);

    double sum_kl = 0, sum_lt = 0, sum_ls = 0, sum_vl = 0;
    int n_mb = 0, n_lt = 0, n_ls = 0;

    for (int epoch = 0; epoch < cfg_.ppo_epochs; ++epoch) {
      auto chunks = minibatch_partition(all_rows, cfg_.minibatches);
      for (auto& chunk : chunks) {
        PpoMinibatchResult g = compute_ppo_gradients(nets, batch, chunk);
        check_finite(g.value_loss, "value loss");
        if (g.n_teacher > 0) check_finite(g.objective_teacher, "teacher PPO objective");
        if (g.n_student > 0) check_finite(g.objective_student, "student PPO objective");

        if (cfg_.adaptive_lr_enabled)
          lr_ = adaptive_lr(lr_, g.kl, cfg_.desired_kl, cfg_.lr_min, cfg_.lr_max);

        rep.grad_norm_policy = clip_grad_norm(g.grad_policy, cfg_.grad_clip);
        adam_step(nets.policy, g.grad_policy, nets.opt_policy, lr_, "policy");
        for (int j = 0; j < nets.policy.policy_log_std.size(); ++j)
          nets.policy.policy_log_std[j] = std::clamp(
              nets.policy.policy_log_std[j], cfg_.log_std_min, cfg_.log_std_max);
        if (g.has_enc_teacher) {
          rep.grad_norm_enc_teacher = clip_grad_norm(g.grad_enc_teacher, cfg_.grad_clip);
          adam_step(nets.enc_teacher, g.grad_enc_teacher, nets.opt_enc_teacher,
                    lr_, "privileged encoder");
        }
        if (g.has_enc_student) {
          rep.grad_norm_enc_student = clip_grad_norm(g.grad_enc_student, cfg_.grad_clip);
          adam_step(nets.enc_student, g.grad_enc_student, nets.opt_enc_student,
                    lr_, "proprioceptive encoder");
        }
        rep.grad_norm_critic = clip_grad_norm(g.grad_critic, cfg_.grad_clip);
        adam_step(nets.critic, g.grad_critic, nets.opt_critic, lr_, "critic");

        sum_kl += g.kl;
        sum_vl += g.value_loss;
        if (g.n_teacher > 0) { sum_lt += g.objective_teacher; n_lt++; }
        if (g.n_student > 0) { sum_ls += g.objective_student; n_ls++; }
        n_mb++;
      }
    }
    if (n_mb > 0) {
      rep.mean_kl = sum_kl / n_mb;
      rep.value_loss = sum_vl / n_mb;
      if (n_lt > 0) rep.ppo_loss_teacher = sum_lt / n_lt;
      if (n_ls > 0) rep.ppo_loss_student = sum_ls / n_ls;
    }
  }

  void reconstruction_update(NetworkSet& nets, const RolloutBatch& batch,
                             UpdateReport& rep) {
    // targets are fixed for the whole reconstruction loop (theta^t does not
    // move inside it)
    Mat targets_all(batch.rows(), nets.latent_dim);
    {
      Mat zt = nets.encode_teacher(
          detail::gather_rows(batch.priv, batch.student_rows));
      for (size_t k = 0; k < batch.student_rows.size(); ++k)
        targets_all.row(batch.student_rows[k]) = zt.row(k);
    }

    double first_epoch_loss = 0.0;
    int first_epoch_mb = 0;
    for (int epoch = 0; epoch < cfg_.rec_epochs; ++epoch) {
      auto chunks = minibatch_partition(batch.student_rows, cfg_.rec_minibatches);
      for (auto& chunk : chunks) {
        int n = static_cast<int>(chunk.size());
        MlpCache cache;
        Mat zs = nets.encode_student(detail::gather_rows(batch.hist, chunk), &cache);
        Mat zt(n, nets.latent_dim);
        for (int i = 0; i < n; ++i) zt.row(i) = targets_all.row(chunk[i]);
        double loss = (zs - zt).squaredNorm() / n;
        check_finite(loss, "reconstruction loss");
        if (epoch == 0) { first_epoch_loss += loss; first_epoch_mb++; }

        Mat dz = (2.0 / n) * (zs - zt);
        MlpGrads eg = mlp_backward(nets.enc_student, nets.enc_student_spec, cache, dz);
        rep.grad_norm_enc_student = clip_grad_norm(eg.params, cfg_.grad_clip);
        adam_step(nets.enc_student, eg.params, nets.opt_enc_student, cfg_.lr_rec,
                  "proprioceptive encoder");
      }
    }
    if (first_epoch_mb > 0) rep.rec_loss = first_epoch_loss / first_epoch_mb;
  }

  void estimator_update(NetworkSet& nets, const RolloutBatch& batch,
                        UpdateReport& rep) {
    std::vector<int> all_rows(batch.rows());
    std::iota(all_rows.begin(), all_rows.end(), 0);
    double first_epoch_loss = 0.0;
    int first_epoch_mb = 0;
    for (int epoch = 0; epoch < cfg_.rec_epochs; ++epoch) {
      auto chunks = minibatch_partition(all_rows, cfg_.rec_minibatches);
      for (auto& chunk : chunks) {
        int n = static_cast<int>(chunk.size());
        MlpCache cache;
        Mat pred = nets.estimate(detail::gather_rows(batch.hist, chunk), &cache);
        Mat tgt = detail::gather_rows(batch.est_targets, chunk);
        double loss = (pred - tgt).squaredNorm() / n;
        check_finite(loss, "estimator loss");
        if (epoch == 0) { first_epoch_loss += loss; first_epoch_mb++; }

        Mat dp = (2.0 / n) * (pred - tgt);
        MlpGrads eg = mlp_backward(nets.estimator, nets.estimator_spec, cache, dp);
        rep.grad_norm_estimator = clip_grad_norm(eg.params, cfg_.grad_clip);
        adam_step(nets.estimator, eg.params, nets.opt_estimator, cfg_.lr_rec,
                  "estimator");
      }
    }
    if (first_epoch_mb > 0) rep.est_loss = first_epoch_loss / first_epoch_mb;
  }

  /// TwoStage phase 2: theta and theta^t stay frozen; the student encoder
  /// learns from the latent reconstruction target plus an action-imitation
  /// term toward the frozen teacher's mean action (weight 1.0 each).
  void distill_update(NetworkSet& nets, const RolloutBatch& batch,
                      UpdateReport& rep) {
    const auto& rows = batch.student_rows;
    if (rows.empty()) throw TrainAbort("two-stage phase 2 without student rows");

    Mat zt_all = nets.encode_teacher(detail::gather_rows(batch.priv, rows));
    Mat obs_all = detail::gather_rows(batch.obs, rows);
    Mat est_all = detail::gather_rows(batch.est_pred, rows);
    Mat x_teacher = hcat({&obs_all, &zt_all, &est_all});
    Mat mean_teacher = nets.policy_mean(x_teacher);

    std::vector<int> local(rows.size());
    std::iota(local.begin(), local.end(), 0);

    double first_epoch_loss = 0.0;
    int first_epoch_mb = 0;
    for (int epoch = 0; epoch < cfg_.rec_epochs; ++epoch) {
      auto chunks = minibatch_partition(local, cfg_.rec_minibatches);
      for (auto& chunk : chunks) {
        int n = static_cast<int>(chunk.size());
        std::vector<int> batch_rows(n);
        for (int i = 0; i < n; ++i) batch_rows[i] = rows[chunk[i]];

        MlpCache enc_cache;
        Mat zs = nets.encode_student(detail::gather_rows(batch.hist, batch_rows),
                                     &enc_cache);
        Mat zt(n, nets.latent_dim), mt(n, nets.action_dim);
        for (int i = 0; i < n; ++i) {
          zt.row(i) = zt_all.row(chunk[i]);
          mt.row(i) = mean_teacher.row(chunk[i]);
        }
        Mat obs = detail::gather_rows(batch.obs, batch_rows);
        Mat est = detail::gather_rows(batch.est_pred, batch_rows);

        MlpCache pol_cache;
        Mat x = hcat({&obs, &zs, &est});
        Mat ms = nets.policy_mean(x, &pol_cache);

        double rec = (zs - zt).squaredNorm() / n;
        double imit = (ms - mt).squaredNorm() / n;
        check_finite(rec + imit, "distillation loss");
        if (epoch == 0) { first_epoch_loss += rec; first_epoch_mb++; }

        // both terms reach theta^s only: the imitation term via the frozen
        // policy's input gradient
        Mat dMs = (2.0 / n) * (ms - mt);
        MlpGrads pol_grads = mlp_backward(nets.policy, nets.policy_spec,
                                          pol_cache, dMs);
        Mat dz = (2.0 / n) * (zs - zt) +
                 pol_grads.input.middleCols(nets.obs_dim, nets.latent_dim);
        MlpGrads eg = mlp_backward(nets.enc_student, nets.enc_student_spec,
                                   enc_cache, dz);
        rep.grad_norm_enc_student = clip_grad_norm(eg.params, cfg_.grad_clip);
        adam_step(nets.enc_student, eg.params, nets.opt_enc_student, cfg_.lr_rec,
                  "proprioceptive encoder");
      }
    }
    if (first_epoch_mb > 0) rep.rec_loss = first_epoch_loss / first_epoch_mb;
  }

  AlgoConfig cfg_;
  double lr_;
  Rng rng_;
};

}  // namespace tsrl
