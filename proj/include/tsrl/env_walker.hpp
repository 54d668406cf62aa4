#pragma once

#include <tsrl/env.hpp>
#include <tsrl/terrain.hpp>

#include <array>
#include <cmath>

namespace tsrl {

/// Planar walker: rigid base (x, z, pitch) with two telescoping point-foot
/// legs (hip angle + leg length each, J = 4). Ground contact is a vertical
/// spring-damper with regularized Coulomb friction. Joint PD targets follow
/// q_ref = q_nominal + K a. The inertia matrix is approximated as diagonal
/// (light legs), with contact mapped through the full foot Jacobian, which
/// keeps the model stable and cheap while preserving the observation split
/// and every reward input.
struct WalkerConfig {
  double base_mass = 10.0;      // kg
  double base_inertia = 0.5;    // kg m^2
  double hip_inertia = 0.15;    // virtual, kg m^2
  double len_mass = 0.8;        // virtual, kg
  double gravity = 9.81;

  double hip_nominal = 0.2;     // rad, legs splayed +/-
  double hip_limit = 1.2;       // rad
  double len_min = 0.25, len_max = 0.75;  // m

  double kp_hip = 40.0, kd_hip = 1.5;     // biped PD gains
  double kp_len = 2000.0, kd_len = 60.0;
  double torque_limit_hip = 40.0;  // N m
  double force_limit_len = 400.0;  // N

  double action_scale = 0.25;   // K in q_ref = q_nominal + K a

  double contact_stiffness = 4000.0;  // N/m
  double contact_damping = 100.0;     // N s/m
  double friction_vel_eps = 0.05;     // m/s, Coulomb regularization

  double noise_scale = 1.0;  // multiplies all observation noise
  int terrain_samples = 11;
  double terrain_sample_spacing = 0.1;  // m

  double fallover_height_ratio = 0.3;  // of desired height
  double fallover_pitch = 1.0;         // rad
};

class WalkerEnv : public EnvBase {
 public:
  static constexpr int kJoints = 4;  // hipL, lenL, hipR, lenR
  static constexpr int kFeet = 2;

  WalkerEnv(const EnvCommonConfig& common, const WalkerConfig& cfg,
            TerrainKind kind, std::uint64_t seed)
      : common_(common), cfg_(cfg), kind_(kind), rng_(seed),
        terrain_seed_(seed ^ 0xc2b2ae3d27d4eb4full) {
    curriculum_.command_range = common_.curriculum.initial_command_range;
    curriculum_.yaw_range = common_.curriculum.initial_yaw_range;
    q_nominal_.resize(kJoints);
    double len_nominal = common_.reward.desired_height / std::cos(cfg_.hip_nominal);
    q_nominal_ << cfg_.hip_nominal, len_nominal, -cfg_.hip_nominal, len_nominal;
    regenerate_terrain();
    reset();
    if (common_.stagger_episodes)
      steps_ = static_cast<int>(rng_.uniform_int(0, common_.max_episode_steps - 1));
  }

  int action_dim() const override { return kJoints; }
  // ang vel 1 + gravity 2 + joint pos 4 + joint vel 4 + command 3 + prev action 4
  int obs_dim() const override { return 18; }
  int priv_dim() const override {
    return obs_dim() + 2 + cfg_.terrain_samples + 2 * kFeet + kJoints + kJoints;
  }

  void reset() override {
    rand_ = SampledRandomization::draw(common_.rand, rng_);
    mass_ = cfg_.base_mass * rand_.link_mass_scale + rand_.payload;
    inertia_ = cfg_.base_inertia * rand_.link_mass_scale;

    q_ = q_nominal_;
    qd_ = Vec::Zero(kJoints);
    qdd_ = Vec::Zero(kJoints);
    torque_ = Vec::Zero(kJoints);

    base_x_ = 0.0;
    // nominal pose puts both feet a leg's vertical extent below the base
    double foot_drop = common_.reward.desired_height;
    double ground = std::max(terrain_.height_at(foot_x_at_nominal(0)),
                             terrain_.height_at(foot_x_at_nominal(1)));
    base_z_ = ground + foot_drop;
    pitch_ = 0.0;
    vx_ = vz_ = omega_ = 0.0;

    prev_action_ = Vec::Zero(kJoints);
    prev_prev_action_ = Vec::Zero(kJoints);
    delayed_action_ = Vec::Zero(kJoints);
    contact_forces_ = Vec::Zero(2 * kFeet);
    gait_phase_ = 0.0;
    steps_ = 0;
    invalid_ = false;
    ep_tracking_sum_ = 0.0;
    ep_traveled_ = 0.0;
    ep_commanded_ = 0.0;

    command_ = sample_command(rng_, curriculum_, /*vy=*/false, /*yaw=*/false);
    refresh_state();
    history_ = ObsHistory(common_.history, obs_dim());
    history_.fill(state_.proprio.flatten());
  }

  StepResult step(const Vec& action) override {
    if (action.size() != kJoints || !action.allFinite())
      throw std::invalid_argument("WalkerEnv::step: bad action");

    const double h = common_.dt / common_.substeps;
    Vec qd_start = qd_;
    double x_start = base_x_;

    for (int s = 0; s < common_.substeps; ++s) {
      const Vec& a = (s * h < rand_.action_delay) ? delayed_action_ : action;
      substep(a, h);
    }
    qdd_ = (qd_ - qd_start) / common_.dt;

    steps_ += 1;
    gait_phase_ = std::fmod(gait_phase_ + common_.dt / common_.reward.gait_period, 1.0);

    StepResult out;
    bool was_invalid = invalid_;
    if (!finite_state()) {
      invalid_ = true;
      log_msg(LogLevel::Error,
              strfmt("walker env invalid state at step %d (terrain %s)", steps_,
                     terrain_kind_name(kind_)));
      // evaluate the terminal reward from the last valid snapshot
      restore_snapshot();
    } else {
      save_snapshot();
    }

    RewardInputs in = reward_inputs();
    out.terms = compute_reward_terms(in, action, prev_action_, prev_prev_action_,
                                     common_.reward);
    out.reward = out.terms.weighted_total(common_.reward, common_.dt);

    tracking_error_ = (in.cmd_xy - in.v_xy).norm();
    ep_tracking_sum_ += out.terms.lin_tracking;
    double cn = std::abs(command_[0]);
    ep_commanded_ += cn * common_.dt;
    if (cn > 1e-9)
      ep_traveled_ += std::max(0.0, vx_ * command_[0] / cn) * common_.dt;
    (void)x_start;

    prev_prev_action_ = prev_action_;
    prev_action_ = action;
    delayed_action_ = action;

    if (steps_ % common_.command_resample_steps == 0 &&
        steps_ < common_.max_episode_steps)
      command_ = sample_command(rng_, curriculum_, false, false);

    double height = base_z_ - terrain_.height_at(base_x_);
    if (invalid_ && !was_invalid) {
      out.termination = Termination::FallOver;
    } else if (height < cfg_.fallover_height_ratio * common_.reward.desired_height ||
               std::abs(pitch_) > cfg_.fallover_pitch) {
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
    CurriculumState next = curriculum_update(curriculum_, ep, common_.curriculum);
    if (next.terrain_level != curriculum_.terrain_level) {
      curriculum_ = next;
      regenerate_terrain();
    } else {
      curriculum_ = next;
    }
    reset();
  }

  const PrivilegedState& privileged_state() const override { return state_; }
  const ObsHistory& history() const override { return history_; }

  Vec estimator_target(bool with_feet) const override {
    if (!with_feet) return Vec{{vx_, vz_}};
    Vec t(2 + kFeet);
    t[0] = vx_;
    t[1] = vz_;
    for (int f = 0; f < kFeet; ++f) {
      auto [fx, fz] = foot_pos(f);
      t[2 + f] = fz - terrain_.height_at(fx);
    }
    return t;
  }

  void apply_velocity_delta(const Vec& delta) override {
    vx_ += delta[0];
    if (delta.size() > 1) vz_ += delta[1];
    refresh_state();
  }

  const CurriculumState& curriculum() const override { return curriculum_; }
  const SampledRandomization& sampled_randomization() const override {
    return rand_;
  }
  int episode_steps() const override { return steps_; }
  double tracking_error() const override { return tracking_error_; }

  const TerrainProfile& terrain() const { return terrain_; }
  TerrainKind kind() const { return kind_; }

  /// Pin the difficulty (used by the eval harness); regenerates and resets.
  void set_terrain_level(int level) {
    curriculum_.terrain_level = std::clamp(level, 0, kTerrainMaxLevel);
    regenerate_terrain();
    reset();
  }

  double base_height_above_terrain() const {
    return base_z_ - terrain_.height_at(base_x_);
  }
  double pitch() const { return pitch_; }
  double total_mass() const { return mass_; }
  double gait_phase(int foot) const {
    return std::fmod(gait_phase_ + (foot == 1 ? 0.5 : 0.0), 1.0);
  }

 private:
  void regenerate_terrain() {
    terrain_ = generate_terrain(kind_, curriculum_.terrain_level,
                                terrain_seed_ + 1000003ull * curriculum_.terrain_level);
  }

  double foot_x_at_nominal(int f) const {
    double phi = q_nominal_[2 * f];
    double len = q_nominal_[2 * f + 1];
    return base_x_ + len * std::sin(phi);
  }

  // foot world position for leg f given current coordinates
  std::pair<double, double> foot_pos(int f) const {
    double phi = q_[2 * f], len = q_[2 * f + 1];
    double lx = len * std::sin(phi), lz = -len * std::cos(phi);
    double c = std::cos(pitch_), s = std::sin(pitch_);
    return {base_x_ + c * lx - s * lz, base_z_ + s * lx + c * lz};
  }

  // d(foot)/d(x, z, pitch, hip_f, len_f): 2x5 Jacobian entries
  struct FootJac {
    double dx_dpitch, dz_dpitch;
    double dx_dhip, dz_dhip;
    double dx_dlen, dz_dlen;
  };

  FootJac foot_jacobian(int f) const {
    double phi = q_[2 * f], len = q_[2 * f + 1];
    double lx = len * std::sin(phi), lz = -len * std::cos(phi);
    double c = std::cos(pitch_), s = std::sin(pitch_);
    FootJac J;
    J.dx_dpitch = -s * lx - c * lz;
    J.dz_dpitch = c * lx - s * lz;
    double dlx_dphi = len * std::cos(phi), dlz_dphi = len * std::sin(phi);
    J.dx_dhip = c * dlx_dphi - s * dlz_dphi;
    J.dz_dhip = s * dlx_dphi + c * dlz_dphi;
    double dlx_dlen = std::sin(phi), dlz_dlen = -std::cos(phi);
    J.dx_dlen = c * dlx_dlen - s * dlz_dlen;
    J.dz_dlen = s * dlx_dlen + c * dlz_dlen;
    return J;
  }

  std::pair<double, double> foot_vel(int f) const {
    FootJac J = foot_jacobian(f);
    double vx = vx_ + J.dx_dpitch * omega_ + J.dx_dhip * qd_[2 * f] +
                J.dx_dlen * qd_[2 * f + 1];
    double vz = vz_ + J.dz_dpitch * omega_ + J.dz_dhip * qd_[2 * f] +
                J.dz_dlen * qd_[2 * f + 1];
    return {vx, vz};
  }

  void substep(const Vec& action, double h) {
    // PD torques toward the action-shifted nominal pose
    Vec q_ref = q_nominal_ + cfg_.action_scale * action;
    for (int j = 0; j < kJoints; ++j) {
      bool hip = (j % 2 == 0);
      double kp = (hip ? cfg_.kp_hip : cfg_.kp_len) * rand_.kp_scale;
      double kd = (hip ? cfg_.kd_hip : cfg_.kd_len) * rand_.kd_scale;
      double lim = hip ? cfg_.torque_limit_hip : cfg_.force_limit_len;
      double t = kp * (q_ref[j] - q_[j]) - kd * qd_[j];
      torque_[j] = std::clamp(t, -lim, lim);
    }

    // generalized forces: gravity (with CoM offset), PD on joints, contact
    // through the foot Jacobians
    double fx = 0.0, fz = -mass_ * cfg_.gravity, tq = 0.0;
    {
      // gravity torque about the base origin: r x F with the randomized CoM
      double c = std::cos(pitch_), s = std::sin(pitch_);
      double rx = c * rand_.com_x - s * rand_.com_z;
      tq += rx * (-mass_ * cfg_.gravity);
    }
    Vec qf = torque_;

    double mu = rand_.friction;
    double cd = cfg_.contact_damping * (1.0 - rand_.restitution);
    for (int f = 0; f < kFeet; ++f) {
      auto [px, pz] = foot_pos(f);
      double eta = terrain_.height_at(px);
      double depth = eta - pz;
      double fn = 0.0, ft = 0.0;
      if (depth > 0.0) {
        auto [vfx, vfz] = foot_vel(f);
        fn = std::max(0.0, cfg_.contact_stiffness * depth - cd * vfz);
        ft = -mu * fn * std::clamp(vfx / cfg_.friction_vel_eps, -1.0, 1.0);
      }
      contact_forces_[2 * f] = ft;
      contact_forces_[2 * f + 1] = fn;
      if (fn > 0.0 || ft != 0.0) {
        FootJac J = foot_jacobian(f);
        fx += ft;
        fz += fn;
        tq += J.dx_dpitch * ft + J.dz_dpitch * fn;
        qf[2 * f] += J.dx_dhip * ft + J.dz_dhip * fn;
        qf[2 * f + 1] += J.dx_dlen * ft + J.dz_dlen * fn;
      }
    }

    // semi-implicit Euler on the diagonal inertia
    vx_ += h * fx / mass_;
    vz_ += h * fz / mass_;
    omega_ += h * tq / inertia_;
    for (int j = 0; j < kJoints; ++j) {
      double m = (j % 2 == 0) ? cfg_.hip_inertia : cfg_.len_mass;
      qd_[j] += h * qf[j] / m;
    }
    base_x_ += h * vx_;
    base_z_ += h * vz_;
    pitch_ += h * omega_;
    q_ += h * qd_;

    // hard joint stops
    for (int f = 0; f < kFeet; ++f) {
      int jh = 2 * f, jl = 2 * f + 1;
      if (q_[jh] > cfg_.hip_limit) { q_[jh] = cfg_.hip_limit; qd_[jh] = std::min(qd_[jh], 0.0); }
      if (q_[jh] < -cfg_.hip_limit) { q_[jh] = -cfg_.hip_limit; qd_[jh] = std::max(qd_[jh], 0.0); }
      if (q_[jl] > cfg_.len_max) { q_[jl] = cfg_.len_max; qd_[jl] = std::min(qd_[jl], 0.0); }
      if (q_[jl] < cfg_.len_min) { q_[jl] = cfg_.len_min; qd_[jl] = std::max(qd_[jl], 0.0); }
    }
  }

  RewardInputs reward_inputs() const {
    RewardInputs in;
    in.cmd_xy = Vec{{command_[0]}};
    in.v_xy = Vec{{vx_}};
    in.cmd_omega_z = command_[2];
    in.omega_z = 0.0;
    in.v_z = vz_;
    in.omega_xy = Vec{{omega_}};
    in.gravity_xy = Vec{{-std::sin(pitch_)}};
    in.base_height = base_z_ - terrain_.height_at(base_x_);
    in.joint_torques = torque_;
    in.joint_velocities = qd_;
    in.joint_accels = qdd_;

    in.n_collision = 0;
    for (double cx : {-0.25, 0.25}) {
      double c = std::cos(pitch_), s = std::sin(pitch_);
      double px = base_x_ + c * cx, pz = base_z_ + s * cx;
      if (pz < terrain_.height_at(px)) in.n_collision += 1;
    }
    in.n_limit = 0;
    for (int f = 0; f < kFeet; ++f) {
      double margin_h = 0.02 * (2.0 * cfg_.hip_limit);
      if (cfg_.hip_limit - std::abs(q_[2 * f]) < margin_h) in.n_limit += 1;
      double margin_l = 0.02 * (cfg_.len_max - cfg_.len_min);
      if (q_[2 * f + 1] - cfg_.len_min < margin_l ||
          cfg_.len_max - q_[2 * f + 1] < margin_l)
        in.n_limit += 1;
    }

    in.feet.resize(kFeet);
    for (int f = 0; f < kFeet; ++f) {
      auto [px, pz] = foot_pos(f);
      auto [vfx, vfz] = foot_vel(f);
      FootState& fs = in.feet[f];
      fs.height_above_terrain = pz - terrain_.height_at(px);
      fs.vel_xy = Vec{{vfx}};
      fs.contact_force = contact_forces_.segment(2 * f, 2);
      fs.pos_xy = Vec{{px}};
      fs.phase = gait_phase(f);
    }
    return in;
  }

  void refresh_state() {
    ProprioObs& o = state_.proprio;
    double ns = cfg_.noise_scale;
    o.angular_velocity = Vec{{omega_ + 0.05 * ns * rng_.normal()}};
    o.projected_gravity = Vec{{-std::sin(pitch_) + 0.02 * ns * rng_.normal(),
                               -std::cos(pitch_) + 0.02 * ns * rng_.normal()}};
    o.joint_positions = q_ - q_nominal_;
    o.joint_velocities = qd_;
    for (int j = 0; j < kJoints; ++j) {
      o.joint_positions[j] += 0.01 * ns * rng_.normal();
      o.joint_velocities[j] += 0.1 * ns * rng_.normal();
    }
    o.command = command_;
    o.previous_action = prev_action_;

    state_.base_lin_velocity = Vec{{vx_, vz_}};
    Vec th(cfg_.terrain_samples);
    int half = cfg_.terrain_samples / 2;
    for (int k = 0; k < cfg_.terrain_samples; ++k) {
      double x = base_x_ + (k - half) * cfg_.terrain_sample_spacing;
      th[k] = terrain_.height_at(x) - base_z_;
    }
    state_.terrain_heights = th;
    state_.contact_forces = contact_forces_;
    state_.joint_torques = torque_;
    state_.joint_accelerations = qdd_;
    state_.hidden_context = Vec();
  }

  bool finite_state() const {
    return std::isfinite(base_x_) && std::isfinite(base_z_) &&
           std::isfinite(pitch_) && std::isfinite(vx_) && std::isfinite(vz_) &&
           std::isfinite(omega_) && q_.allFinite() && qd_.allFinite();
  }

  void save_snapshot() {
    snap_ = {base_x_, base_z_, pitch_, vx_, vz_, omega_};
    snap_q_ = q_;
    snap_qd_ = qd_;
  }
  void restore_snapshot() {
    base_x_ = snap_[0]; base_z_ = snap_[1]; pitch_ = snap_[2];
    vx_ = snap_[3]; vz_ = snap_[4]; omega_ = snap_[5];
    q_ = snap_q_;
    qd_ = snap_qd_;
    qdd_.setZero();
    torque_.setZero();
    contact_forces_.setZero();
  }

  EnvCommonConfig common_;
  WalkerConfig cfg_;
  TerrainKind kind_;
  Rng rng_;
  std::uint64_t terrain_seed_;
  TerrainProfile terrain_;

  Vec q_nominal_, q_, qd_, qdd_, torque_;
  double base_x_ = 0.0, base_z_ = 0.0, pitch_ = 0.0;
  double vx_ = 0.0, vz_ = 0.0, omega_ = 0.0;
  double mass_ = 10.0, inertia_ = 0.5;
  Vec contact_forces_;
  Vec prev_action_, prev_prev_action_, delayed_action_;
  Vec command_{Vec::Zero(3)};
  double gait_phase_ = 0.0;
  int steps_ = 0;
  bool invalid_ = false;
  double tracking_error_ = 0.0;
  double ep_tracking_sum_ = 0.0, ep_traveled_ = 0.0, ep_commanded_ = 0.0;

  std::array<double, 6> snap_{};
  Vec snap_q_, snap_qd_;

  SampledRandomization rand_;
  CurriculumState curriculum_;
  PrivilegedState state_;
  ObsHistory history_;
};

}  // namespace tsrl
