#pragma once

#include <tsrl/common.hpp>

#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace tsrl {

/// Per-term weights. Defaults are the quadruped profile; biped_reward_config()
/// flips the biped-only terms on and softens the vertical-velocity penalty.
struct RewardConfig {
  double lin_tracking = 1.0;
  double ang_tracking = 0.5;
  double lin_vel_z = -2.0;
  double ang_vel_xy = -0.05;
  double joint_accel = -2.5e-7;
  double joint_power = -2e-5;
  double joint_torque = -1e-4;
  double base_height = -1.0;
  double action_rate = -0.01;
  double action_smoothness = -0.01;
  double collision = -1.0;
  double joint_limit = -2.0;
  double feet_regulation = -0.05;
  double orientation_xy = 0.0;     // biped: -5.0
  double feet_distance = 0.0;      // biped: -100
  double feet_contact_force = 0.0; // biped: -2.0
  double feet_velocity = 0.0;      // biped: -2.0

  double desired_height = 0.5;  // h^des, m
  double gait_period = 0.6;     // s
  double stance_fraction = 0.5;

  // The second-difference penalty is printed with a minus on the a_{t-2}
  // term; keep that form by default, the conventional plus sign sits behind
  // this switch.
  bool smoothness_printed_sign = true;
};

inline RewardConfig quadruped_reward_config() { return RewardConfig{}; }

inline RewardConfig biped_reward_config() {
  RewardConfig c;
  c.lin_vel_z = -0.5;
  c.orientation_xy = -5.0;
  c.feet_distance = -100.0;
  c.feet_contact_force = -2.0;
  c.feet_velocity = -2.0;
  return c;
}

/// Desired contact state from the gait phase: stance while the phase is in
/// the first stance_fraction of the cycle, swing afterwards.
inline double desired_contact(double phase, double stance_fraction) {
  return phase < stance_fraction ? 1.0 : 0.0;
}

struct FootState {
  double height_above_terrain = 0.0;  // p^foot_z
  Vec vel_xy;                         // planar foot velocity
  Vec contact_force;                  // ground reaction, per foot
  Vec pos_xy;                         // planar foot position
  double phase = 0.0;                 // gait phase in [0,1)
};

/// Everything the reward formulas consume, filled in by each environment.
struct RewardInputs {
  Vec cmd_xy;      // commanded planar velocity
  Vec v_xy;        // actual planar velocity
  double cmd_omega_z = 0.0;
  double omega_z = 0.0;
  double v_z = 0.0;
  Vec omega_xy;
  Vec gravity_xy;  // projected gravity, horizontal components
  double base_height = 0.0;  // above terrain
  Vec joint_torques;
  Vec joint_velocities;
  Vec joint_accels;
  int n_collision = 0;
  int n_limit = 0;
  std::vector<FootState> feet;
};

struct RewardTerms {
  double lin_tracking = 0.0;
  double ang_tracking = 0.0;
  double lin_vel_z = 0.0;
  double ang_vel_xy = 0.0;
  double joint_accel = 0.0;
  double joint_power = 0.0;
  double joint_torque = 0.0;
  double base_height = 0.0;
  double action_rate = 0.0;
  double action_smoothness = 0.0;
  double collision = 0.0;
  double joint_limit = 0.0;
  double feet_regulation = 0.0;
  double orientation_xy = 0.0;
  double feet_distance = 0.0;
  double feet_contact_force = 0.0;
  double feet_velocity = 0.0;

  double weighted_total(const RewardConfig& c, double dt) const {
    double s = c.lin_tracking * lin_tracking + c.ang_tracking * ang_tracking +
               c.lin_vel_z * lin_vel_z + c.ang_vel_xy * ang_vel_xy +
               c.joint_accel * joint_accel + c.joint_power * joint_power +
               c.joint_torque * joint_torque + c.base_height * base_height +
               c.action_rate * action_rate +
               c.action_smoothness * action_smoothness +
               c.collision * collision + c.joint_limit * joint_limit +
               c.feet_regulation * feet_regulation +
               c.orientation_xy * orientation_xy +
               c.feet_distance * feet_distance +
               c.feet_contact_force * feet_contact_force +
               c.feet_velocity * feet_velocity;
    return s * dt;
  }

  std::map<std::string, double> as_map() const {
    return {{"lin_tracking", lin_tracking},
            {"ang_tracking", ang_tracking},
            {"lin_vel_z", lin_vel_z},
            {"ang_vel_xy", ang_vel_xy},
            {"joint_accel", joint_accel},
            {"joint_power", joint_power},
            {"joint_torque", joint_torque},
            {"base_height", base_height},
            {"action_rate", action_rate},
            {"action_smoothness", action_smoothness},
            {"collision", collision},
            {"joint_limit", joint_limit},
            {"feet_regulation", feet_regulation},
            {"orientation_xy", orientation_xy},
            {"feet_distance", feet_distance},
            {"feet_contact_force", feet_contact_force},
            {"feet_velocity", feet_velocity}};
  }
};

inline RewardTerms compute_reward_terms(const RewardInputs& in, const Vec& action,
                                        const Vec& prev_action,
                                        const Vec& prev_prev_action,
                                        const RewardConfig& cfg) {
  RewardTerms t;
  t.lin_tracking = std::exp(-4.0 * (in.cmd_xy - in.v_xy).squaredNorm());
  double dw = in.cmd_omega_z - in.omega_z;
  t.ang_tracking = std::exp(-4.0 * dw * dw);
  t.lin_vel_z = in.v_z * in.v_z;
  t.ang_vel_xy = in.omega_xy.squaredNorm();
  t.joint_accel = in.joint_accels.squaredNorm();
  t.joint_power = in.joint_torques.cwiseAbs().dot(in.joint_velocities.cwiseAbs());
  t.joint_torque = in.joint_torques.squaredNorm();
  double dh = cfg.desired_height - in.base_height;
  t.base_height = dh * dh;
  t.action_rate = (action - prev_action).squaredNorm();
  t.action_smoothness =
      cfg.smoothness_printed_sign
          ? (action - 2.0 * prev_action - prev_prev_action).squaredNorm()
          : (action - 2.0 * prev_action + prev_prev_action).squaredNorm();
  t.collision = static_cast<double>(in.n_collision);
  t.joint_limit = static_cast<double>(in.n_limit);
  t.orientation_xy = in.gravity_xy.norm();

  for (const auto& f : in.feet) {
    t.feet_regulation +=
        f.vel_xy.squaredNorm() *
        std::exp(-f.height_above_terrain / (0.025 * cfg.desired_height));
    double c_des = desired_contact(f.phase, cfg.stance_fraction);
    t.feet_contact_force +=
        (1.0 - c_des) * (1.0 - std::exp(-0.04 * f.contact_force.norm()));
    t.feet_velocity += c_des * (1.0 - std::exp(-4.0 * f.vel_xy.norm()));
  }
  if (in.feet.size() >= 2) {
    double d = (in.feet[0].pos_xy - in.feet[1].pos_xy).norm();
    t.feet_distance = std::max(0.0, 0.1 - d);
  }
  return t;
}

}  // namespace tsrl
