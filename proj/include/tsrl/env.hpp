#pragma once

#include <tsrl/common.hpp>
#include <tsrl/curriculum.hpp>
#include <tsrl/rewards.hpp>

#include <vector>

namespace tsrl {

/// What the deployed policy sees. Deliberately excludes base linear velocity
/// and any terrain information; fields an env does not produce stay empty and
/// drop out of the flattened vector.
struct ProprioObs {
  Vec angular_velocity;
  Vec projected_gravity;
  Vec joint_positions;
  Vec joint_velocities;
  Vec command;          // (v_x^cmd, v_y^cmd, omega_z^cmd)
  Vec previous_action;
  Vec accel;            // noisy accelerometer signal (ctx-pointmass)

  int dim() const {
    return static_cast<int>(angular_velocity.size() + projected_gravity.size() +
                            joint_positions.size() + joint_velocities.size() +
                            command.size() + previous_action.size() +
                            accel.size());
  }

  Vec flatten() const {
    Vec out(dim());
    int o = 0;
    auto put = [&](const Vec& v) {
      out.segment(o, v.size()) = v;
      o += static_cast<int>(v.size());
    };
    put(angular_velocity);
    put(projected_gravity);
    put(joint_positions);
    put(joint_velocities);
    put(command);
    put(previous_action);
    put(accel);
    return out;
  }
};

/// Simulator-side state handed to the privileged encoder and the critic.
/// `proprio` is the very observation the student group receives at the same
/// step, noise included.
struct PrivilegedState {
  ProprioObs proprio;
  Vec base_lin_velocity;
  Vec terrain_heights;       // sampled around the base, relative to it
  Vec contact_forces;        // stacked per foot
  Vec joint_torques;
  Vec joint_accelerations;
  Vec hidden_context;        // randomized dynamics params (ctx-pointmass)

  int dim() const {
    return proprio.dim() +
           static_cast<int>(base_lin_velocity.size() + terrain_heights.size() +
                            contact_forces.size() + joint_torques.size() +
                            joint_accelerations.size() + hidden_context.size());
  }

  Vec flatten() const {
    Vec out(dim());
    int o = 0;
    auto put = [&](const Vec& v) {
      out.segment(o, v.size()) = v;
      o += static_cast<int>(v.size());
    };
    put(proprio.flatten());
    put(base_lin_velocity);
    put(terrain_heights);
    put(contact_forces);
    put(joint_torques);
    put(joint_accelerations);
    put(hidden_context);
    return out;
  }
};

/// Ring buffer of the last H+1 observations, newest first in the flattened
/// view. Before H steps have elapsed the reset observation pads the tail.
class ObsHistory {
 public:
  ObsHistory() = default;
  ObsHistory(int horizon, int obs_dim) : horizon_(horizon), obs_dim_(obs_dim) {
    frames_.assign(horizon_ + 1, Vec::Zero(obs_dim_));
  }

  void fill(const Vec& obs) {
    for (auto& f : frames_) f = obs;
  }

  void push(const Vec& obs) {
    head_ = (head_ + 1) % static_cast<int>(frames_.size());
    frames_[head_] = obs;
  }

  /// frame(0) is the current observation, frame(k) is k steps back.
  const Vec& frame(int k) const {
    int n = static_cast<int>(frames_.size());
    return frames_[((head_ - k) % n + n) % n];
  }

  Vec flatten() const {
    Vec out(static_cast<int>(frames_.size()) * obs_dim_);
    for (int k = 0; k < static_cast<int>(frames_.size()); ++k)
      out.segment(k * obs_dim_, obs_dim_) = frame(k);
    return out;
  }

  int horizon() const { return horizon_; }
  int obs_dim() const { return obs_dim_; }
  int flat_dim() const { return (horizon_ + 1) * obs_dim_; }

 private:
  int horizon_ = 0;
  int obs_dim_ = 0;
  int head_ = 0;
  std::vector<Vec> frames_;
};

/// Per-episode randomization ranges (sampled once at reset).
struct DomainRandomization {
  bool enabled = true;
  double link_mass_min = 0.8, link_mass_max = 1.2;     // x nominal
  double payload_min = -1.0, payload_max = 3.0;        // kg
  double com_x_min = -0.075, com_x_max = 0.075;        // m
  double com_y_min = -0.05, com_y_max = 0.05;
  double com_z_min = -0.05, com_z_max = 0.05;
  double friction_min = 0.2, friction_max = 1.7;
  double restitution_min = 0.25, restitution_max = 0.75;
  double kp_scale_min = 0.8, kp_scale_max = 1.2;
  double kd_scale_min = 0.8, kd_scale_max = 1.2;
  double action_delay_min = 0.0, action_delay_max = 0.020;  // s
  double accel_bias_min = -0.3, accel_bias_max = 0.3;       // m/s^2, pointmass
};

struct SampledRandomization {
  double link_mass_scale = 1.0;
  double payload = 0.0;
  double com_x = 0.0, com_y = 0.0, com_z = 0.0;
  double friction = 1.0;
  double restitution = 0.5;
  double kp_scale = 1.0;
  double kd_scale = 1.0;
  double action_delay = 0.0;
  double accel_bias = 0.0;

  static SampledRandomization draw(const DomainRandomization& r, Rng& rng) {
    SampledRandomization s;
    if (!r.enabled) return s;
    s.link_mass_scale = rng.uniform(r.link_mass_min, r.link_mass_max);
    s.payload = rng.uniform(r.payload_min, r.payload_max);
    s.com_x = rng.uniform(r.com_x_min, r.com_x_max);
    s.com_y = rng.uniform(r.com_y_min, r.com_y_max);
    s.com_z = rng.uniform(r.com_z_min, r.com_z_max);
    s.friction = rng.uniform(r.friction_min, r.friction_max);
    s.restitution = rng.uniform(r.restitution_min, r.restitution_max);
    s.kp_scale = rng.uniform(r.kp_scale_min, r.kp_scale_max);
    s.kd_scale = rng.uniform(r.kd_scale_min, r.kd_scale_max);
    s.action_delay = rng.uniform(r.action_delay_min, r.action_delay_max);
    s.accel_bias = rng.uniform(r.accel_bias_min, r.accel_bias_max);
    return s;
  }
};

enum class Termination { Running, FallOver, TimeOut };

struct StepResult {
  double reward = 0.0;
  RewardTerms terms;
  Termination termination = Termination::Running;
};

/// Settings shared by both toy environments.
struct EnvCommonConfig {
  double dt = 0.02;  // 50 Hz control
  int substeps = 4;
  int max_episode_steps = 1000;  // 20 s
  int command_resample_steps = 250;
  DomainRandomization rand;
  CurriculumConfig curriculum;
  RewardConfig reward;
  int history = 5;  // H
  // start each env at a random episode age so parallel timeouts spread out
  bool stagger_episodes = false;
};

class EnvBase {
 public:
  virtual ~EnvBase() = default;

  /// Full episode reset: new randomization, command, nominal state, history
  /// filled with the reset observation.
  virtual void reset() = 0;

  virtual StepResult step(const Vec& action) = 0;

  virtual int action_dim() const = 0;
  virtual int obs_dim() const = 0;
  virtual int priv_dim() const = 0;

  virtual const PrivilegedState& privileged_state() const = 0;
  virtual const ObsHistory& history() const = 0;

  /// Supervised target for the velocity-estimator head; with_feet adds the
  /// per-foot heights where the env has feet.
  virtual Vec estimator_target(bool with_feet) const = 0;

  /// Impulse perturbation used by the push-survival harness.
  virtual void apply_velocity_delta(const Vec& delta) = 0;

  /// Episode end hook: applies the curriculum and resets.
  virtual void finish_episode() = 0;

  virtual const CurriculumState& curriculum() const = 0;
  virtual const SampledRandomization& sampled_randomization() const = 0;
  virtual int episode_steps() const = 0;
  virtual double tracking_error() const = 0;  // ||v_cmd_xy - v_xy|| this step
};

}  // namespace tsrl
