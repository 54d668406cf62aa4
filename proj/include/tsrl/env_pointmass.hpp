#pragma once

#include <tsrl/env.hpp>

#include <cmath>

namespace tsrl {

/// 2-D point mass with hidden dynamics context. The teacher encoder sees the
/// true velocity and the context vector; the deployed observation carries
/// only the command, the previous action and a biased, noisy accelerometer,
/// so velocity and context must be inferred from history. Dynamics:
///   v' = v + dt * (gain * K * a - drag * v) / mass
struct PointmassConfig {
  double nominal_mass = 4.0;   // kg
  double motor_scale = 20.0;   // N per action unit (K)
  double accel_noise_std = 0.1;
  double initial_speed = 0.3;  // reset velocity magnitude bound
};

class PointmassEnv : public EnvBase {
 public:
  PointmassEnv(const EnvCommonConfig& common, const PointmassConfig& cfg,
               std::uint64_t seed)
      : common_(common), cfg_(cfg), rng_(seed) {
    curriculum_.command_range = common_.curriculum.initial_command_range;
    curriculum_.yaw_range = common_.curriculum.initial_yaw_range;
    reset();
    if (common_.stagger_episodes)
      steps_ = static_cast<int>(rng_.uniform_int(0, common_.max_episode_steps - 1));
  }

  int action_dim() const override { return 2; }
  int obs_dim() const override { return 7; }  // command 3 + prev action 2 + accel 2
  int priv_dim() const override { return obs_dim() + 2 + 4; }

  void reset() override {
    rand_ = SampledRandomization::draw(common_.rand, rng_);
    mass_ = cfg_.nominal_mass * rand_.link_mass_scale + rand_.payload;
    drag_ = rand_.friction;
    gain_ = rand_.kp_scale;
    bias_ = rand_.accel_bias;

    pos_.setZero(2);
    vel_ = Vec::NullaryExpr(2, [&]() {
      return rng_.uniform(-cfg_.initial_speed, cfg_.initial_speed);
    });
    prev_action_ = Vec::Zero(2);
    prev_prev_action_ = Vec::Zero(2);
    delayed_action_ = Vec::Zero(2);
    accel_meas_ = Vec::Zero(2);
    command_ = sample_command(rng_, curriculum_, /*vy=*/true, /*yaw=*/false);
    steps_ = 0;
    ep_tracking_sum_ = 0.0;
    ep_traveled_ = 0.0;
    ep_commanded_ = 0.0;

    refresh_state();
    history_ = ObsHistory(common_.history, obs_dim());
    history_.fill(state_.proprio.flatten());
  }

  StepResult step(const Vec& action) override {
    if (action.size() != action_dim() || !action.allFinite())
      throw std::invalid_argument("PointmassEnv::step: bad action");

    Vec v_start = vel_;
    Vec force = Vec::Zero(2);
    const double h = common_.dt / common_.substeps;
    for (int s = 0; s < common_.substeps; ++s) {
      // queued action: the old command stays applied while the delay lasts
      const Vec& a = (s * h < rand_.action_delay) ? delayed_action_ : action;
      force = gain_ * cfg_.motor_scale * a;
      vel_ += h * (force - drag_ * vel_) / mass_;
      pos_ += h * vel_;
    }
    accel_meas_ = (vel_ - v_start) / common_.dt;
    for (int i = 0; i < 2; ++i)
      accel_meas_[i] += bias_ + cfg_.accel_noise_std * rng_.normal();

    steps_ += 1;
    StepResult out;
    RewardInputs in;
    in.cmd_xy = command_.head(2);
    in.v_xy = vel_;
    in.omega_xy = Vec();
    in.gravity_xy = Vec();
    in.base_height = common_.reward.desired_height;  // no height DOF
    // the thruster is the "joint": torque = applied force, velocity = base
    // velocity, so the torque/power/accel penalties act as usual
    in.joint_torques = force;
    in.joint_velocities = vel_;
    in.joint_accels = (vel_ - v_start) / common_.dt;
    out.terms = compute_reward_terms(in, action, prev_action_, prev_prev_action_,
                                     common_.reward);
    out.reward = out.terms.weighted_total(common_.reward, common_.dt);

    tracking_error_ = (in.cmd_xy - in.v_xy).norm();
    ep_tracking_sum_ += out.terms.lin_tracking;
    double cn = command_.head(2).norm();
    ep_commanded_ += cn * common_.dt;
    if (cn > 1e-9)
      ep_traveled_ += std::max(0.0, vel_.dot(command_.head(2)) / cn) * common_.dt;

    prev_prev_action_ = prev_action_;
    prev_action_ = action;
    delayed_action_ = action;

    if (steps_ % common_.command_resample_steps == 0 &&
        steps_ < common_.max_episode_steps)
      command_ = sample_command(rng_, curriculum_, true, false);

    if (!vel_.allFinite() || !pos_.allFinite()) {
      log_msg(LogLevel::Error, "pointmass env produced non-finite state");
      vel_.setZero();
      out.termination = Termination::FallOver;
    } else if (steps_ >= common_.max_episode_steps) {
      out.termination = Termination::TimeOut;
    }

    refresh_state();
    history_.push(state_.proprio.flatten());
    return out;
  }

  void finish_episode() override {
    EpisodeSummary ep;
    ep.mean_lin_tracking = steps_ > 0 ? ep_tracking_sum_ / steps_ : 0.0;
    ep.distance_traveled = ep_traveled_;
    ep.commanded_distance = ep_commanded_;
    curriculum_ = curriculum_update(curriculum_, ep, common_.curriculum,
                                    /*max_level=*/0);
    reset();
  }

  const PrivilegedState& privileged_state() const override { return state_; }
  const ObsHistory& history() const override { return history_; }

  Vec estimator_target(bool) const override { return vel_; }

  void apply_velocity_delta(const Vec& delta) override {
    vel_ += delta.head(2);
    refresh_state();
  }

  const CurriculumState& curriculum() const override { return curriculum_; }
  const SampledRandomization& sampled_randomization() const override {
    return rand_;
  }
  int episode_steps() const override { return steps_; }
  double tracking_error() const override { return tracking_error_; }

 private:
  void refresh_state() {
    state_.proprio.command = command_;
    state_.proprio.previous_action = prev_action_;
    state_.proprio.accel = accel_meas_;
    state_.base_lin_velocity = vel_;
    Vec ctx(4);
    ctx << mass_, drag_, gain_, bias_;
    state_.hidden_context = ctx;
  }

  EnvCommonConfig common_;
  PointmassConfig cfg_;
  Rng rng_;

  Vec pos_{Vec::Zero(2)}, vel_{Vec::Zero(2)};
  Vec prev_action_{Vec::Zero(2)}, prev_prev_action_{Vec::Zero(2)};
  Vec delayed_action_{Vec::Zero(2)};
  Vec accel_meas_{Vec::Zero(2)};
  Vec command_{Vec::Zero(3)};
  double mass_ = 4.0, drag_ = 1.0, gain_ = 1.0, bias_ = 0.0;
  int steps_ = 0;
  double tracking_error_ = 0.0;
  double ep_tracking_sum_ = 0.0, ep_traveled_ = 0.0, ep_commanded_ = 0.0;

  SampledRandomization rand_;
  CurriculumState curriculum_;
  PrivilegedState state_;
  ObsHistory history_;
};

}  // namespace tsrl
