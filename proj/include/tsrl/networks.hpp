#pragma once

#include <tsrl/adam.hpp>
#include <tsrl/gaussian.hpp>
#include <tsrl/mlp.hpp>

#include <cmath>
#include <vector>

namespace tsrl {

struct NetworkHiddens {
  std::vector<int> encoder{256, 128};
  std::vector<int> policy{256, 128, 64};
  std::vector<int> critic{256, 128, 64};
  std::vector<int> estimator{256, 128};
};

/// Running check that every latent leaving an encoder sits on the unit
/// sphere. Cheap enough to stay on permanently; the acceptance suite reads
/// the counters.
struct LatentAudit {
  long long count = 0;
  long long violations = 0;
  double worst_dev = 0.0;

  void check(const Mat& z) {
    for (int i = 0; i < z.rows(); ++i) {
      double dev = std::abs(z.row(i).norm() - 1.0);
      count += 1;
      if (dev > worst_dev) worst_dev = dev;
      if (dev > 1e-6) violations += 1;
    }
  }
};

/// The four (optionally five) networks of the architecture: privileged and
/// proprioceptive encoders feeding one shared policy/critic pair, plus the
/// optional velocity-estimator head.
struct NetworkSet {
  int obs_dim = 0, priv_dim = 0, hist_dim = 0, action_dim = 0, latent_dim = 0;
  int est_dim = 0;  // 0 disables the estimator head
  MlpSpec enc_teacher_spec, enc_student_spec, policy_spec, critic_spec,
      estimator_spec;
  NetworkParams enc_teacher, enc_student, policy, critic, estimator;
  AdamState opt_enc_teacher, opt_enc_student, opt_policy, opt_critic,
      opt_estimator;
  mutable LatentAudit audit;

  bool estimator_enabled() const { return est_dim > 0; }
  int policy_input_dim() const { return obs_dim + latent_dim + est_dim; }
  int critic_input_dim() const { return priv_dim + latent_dim; }

  static NetworkSet create(int obs_dim, int priv_dim, int hist_dim,
                           int action_dim, int latent_dim, int est_dim,
                           const NetworkHiddens& hiddens, std::uint64_t seed) {
    NetworkSet n;
    n.obs_dim = obs_dim;
    n.priv_dim = priv_dim;
    n.hist_dim = hist_dim;
    n.action_dim = action_dim;
    n.latent_dim = latent_dim;
    n.est_dim = est_dim;

    n.enc_teacher_spec = {priv_dim, hiddens.encoder, latent_dim,
                          Activation::Elu, /*normalize=*/true};
    n.enc_student_spec = {hist_dim, hiddens.encoder, latent_dim,
                          Activation::Elu, true};
    n.policy_spec = {n.policy_input_dim(), hiddens.policy, action_dim,
                     Activation::Elu, false};
    n.critic_spec = {n.critic_input_dim(), hiddens.critic, 1, Activation::Elu,
                     false};

    Rng rng(seed);
    n.enc_teacher = mlp_init(n.enc_teacher_spec, rng);
    n.enc_student = mlp_init(n.enc_student_spec, rng);
    n.policy = mlp_init(n.policy_spec, rng, /*output_gain=*/0.01,
                        /*with_log_std=*/true);  // log_std starts at log(1)
    n.critic = mlp_init(n.critic_spec, rng);
    if (est_dim > 0) {
      n.estimator_spec = {hist_dim, hiddens.estimator, est_dim, Activation::Elu,
                          false};
      n.estimator = mlp_init(n.estimator_spec, rng);
      n.opt_estimator = AdamState::for_params(n.estimator);
    }
    n.opt_enc_teacher = AdamState::for_params(n.enc_teacher);
    n.opt_enc_student = AdamState::for_params(n.enc_student);
    n.opt_policy = AdamState::for_params(n.policy);
    n.opt_critic = AdamState::for_params(n.critic);
    return n;
  }

  Mat encode_teacher(const Mat& priv, MlpCache* cache = nullptr) const {
    Mat z = mlp_forward(enc_teacher, enc_teacher_spec, priv, cache);
    audit.check(z);
    return z;
  }

  Mat encode_student(const Mat& hist, MlpCache* cache = nullptr) const {
    Mat z = mlp_forward(enc_student, enc_student_spec, hist, cache);
    audit.check(z);
    return z;
  }

  Mat policy_mean(const Mat& input, MlpCache* cache = nullptr) const {
    return mlp_forward(policy, policy_spec, input, cache);
  }

  Vec value(const Mat& input, MlpCache* cache = nullptr) const {
    return mlp_forward(critic, critic_spec, input, cache).col(0);
  }

  Mat estimate(const Mat& hist, MlpCache* cache = nullptr) const {
    return mlp_forward(estimator, estimator_spec, hist, cache);
  }
};

}  // namespace tsrl
