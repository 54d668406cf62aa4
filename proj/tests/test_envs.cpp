#include <catch2/catch_amalgamated.hpp>

#include <tsrl/env_pointmass.hpp>
#include <tsrl/env_walker.hpp>

using namespace tsrl;
using Catch::Matchers::WithinAbs;

namespace {

EnvCommonConfig pointmass_common() {
  EnvCommonConfig c;
  c.max_episode_steps = 250;
  c.curriculum.initial_command_range = 1.0;
  return c;
}

EnvCommonConfig walker_common() {
  EnvCommonConfig c;
  c.curriculum.initial_command_range = 0.5;
  return c;
}

}  // namespace

TEST_CASE("pointmass reset is deterministic per seed") {
  EnvCommonConfig common = pointmass_common();
  PointmassConfig pc;
  PointmassEnv a(common, pc, 404), b(common, pc, 404);
  CHECK(a.privileged_state().flatten() == b.privileged_state().flatten());
  PointmassEnv c(common, pc, 405);
  CHECK(a.privileged_state().flatten() != c.privileged_state().flatten());
}

TEST_CASE("pointmass observation split") {
  EnvCommonConfig common = pointmass_common();
  PointmassConfig pc;
  PointmassEnv env(common, pc, 7);
  // no velocity, no terrain in the deployed observation
  CHECK(env.obs_dim() == 7);
  CHECK(env.priv_dim() == 13);
  const PrivilegedState& s = env.privileged_state();
  CHECK(s.base_lin_velocity.size() == 2);
  CHECK(s.hidden_context.size() == 4);
  CHECK(s.terrain_heights.size() == 0);

  // proprio inside the privileged state is byte-identical to the student view
  Vec from_priv = s.proprio.flatten();
  Vec from_hist = env.history().frame(0);
  CHECK(std::memcmp(from_priv.data(), from_hist.data(),
                    sizeof(double) * from_priv.size()) == 0);

  Vec a = Vec{{0.3, -0.2}};
  env.step(a);
  Vec fp = env.privileged_state().proprio.flatten();
  Vec fh = env.history().frame(0);
  CHECK(std::memcmp(fp.data(), fh.data(), sizeof(double) * fp.size()) == 0);
}

TEST_CASE("pointmass dynamics match the closed form") {
  EnvCommonConfig common = pointmass_common();
  common.rand.enabled = false;  // mass=nominal, drag=1, gain=1, no delay
  PointmassConfig pc;
  pc.accel_noise_std = 0.0;
  pc.initial_speed = 0.0;
  PointmassEnv env(common, pc, 3);

  Vec a{{0.5, -1.0}};
  double m = pc.nominal_mass, mu = 1.0, g = 1.0, K = pc.motor_scale;
  Vec v = Vec::Zero(2);
  double h = common.dt / common.substeps;
  for (int s = 0; s < common.substeps; ++s) v += h * (g * K * a - mu * v) / m;

  env.step(a);
  CHECK_THAT(env.privileged_state().base_lin_velocity[0], WithinAbs(v[0], 1e-12));
  CHECK_THAT(env.privileged_state().base_lin_velocity[1], WithinAbs(v[1], 1e-12));
  // noiseless accelerometer reads the true mean acceleration
  CHECK_THAT(env.privileged_state().proprio.accel[0], WithinAbs(v[0] / common.dt, 1e-12));
}

TEST_CASE("pointmass payload is recorded in the hidden context") {
  EnvCommonConfig common = pointmass_common();
  common.rand.link_mass_min = common.rand.link_mass_max = 1.0;
  common.rand.payload_min = common.rand.payload_max = 3.0;
  PointmassConfig pc;
  PointmassEnv env(common, pc, 7);
  CHECK_THAT(env.privileged_state().hidden_context[0],
             WithinAbs(pc.nominal_mass + 3.0, 1e-12));
}

TEST_CASE("randomized parameters stay in the configured ranges") {
  EnvCommonConfig common = pointmass_common();
  PointmassConfig pc;
  PointmassEnv env(common, pc, 21);
  for (int ep = 0; ep < 50; ++ep) {
    const SampledRandomization& r = env.sampled_randomization();
    CHECK(r.link_mass_scale >= 0.8);
    CHECK(r.link_mass_scale <= 1.2);
    CHECK(r.payload >= -1.0);
    CHECK(r.payload <= 3.0);
    CHECK(r.friction >= 0.2);
    CHECK(r.friction <= 1.7);
    CHECK(r.restitution >= 0.25);
    CHECK(r.restitution <= 0.75);
    CHECK(r.kp_scale >= 0.8);
    CHECK(r.kp_scale <= 1.2);
    CHECK(r.kd_scale >= 0.8);
    CHECK(r.kd_scale <= 1.2);
    CHECK(r.action_delay >= 0.0);
    CHECK(r.action_delay <= 0.020);
    CHECK(std::abs(r.com_x) <= 0.075);
    CHECK(std::abs(r.com_y) <= 0.05);
    CHECK(std::abs(r.com_z) <= 0.05);
    env.reset();
  }
}

TEST_CASE("pointmass episode times out at the configured horizon") {
  EnvCommonConfig common = pointmass_common();
  common.max_episode_steps = 40;
  PointmassConfig pc;
  PointmassEnv env(common, pc, 9);
  Vec a = Vec::Zero(2);
  for (int t = 0; t < 39; ++t)
    CHECK(env.step(a).termination == Termination::Running);
  CHECK(env.step(a).termination == Termination::TimeOut);
}

TEST_CASE("pointmass command is sampled within the curriculum range") {
  EnvCommonConfig common = pointmass_common();
  PointmassConfig pc;
  PointmassEnv env(common, pc, 33);
  for (int ep = 0; ep < 30; ++ep) {
    const Vec& cmd = env.privileged_state().proprio.command;
    CHECK(std::abs(cmd[0]) <= 1.0);
    CHECK(std::abs(cmd[1]) <= 1.0);
    CHECK(cmd[2] == 0.0);
    env.reset();
  }
}

TEST_CASE("curriculum update rules") {
  CurriculumConfig cfg;
  cfg.max_command_range = 2.0;
  CurriculumState s;
  s.terrain_level = 3;
  s.command_range = 1.0;

  EpisodeSummary good;
  good.mean_lin_tracking = 0.9;
  good.distance_traveled = 1.0;
  good.commanded_distance = 1.0;
  CHECK(curriculum_update(s, good, cfg).terrain_level == 4);

  EpisodeSummary lazy;
  lazy.mean_lin_tracking = 0.2;
  lazy.distance_traveled = 0.3;
  lazy.commanded_distance = 1.0;
  CHECK(curriculum_update(s, lazy, cfg).terrain_level == 2);

  CurriculumState floor;
  CHECK(curriculum_update(floor, lazy, cfg).terrain_level == 0);

  CurriculumState top;
  top.terrain_level = kTerrainMaxLevel;
  top.command_range = 1.0;
  CurriculumState expanded = curriculum_update(top, good, cfg);
  CHECK(expanded.terrain_level == kTerrainMaxLevel);
  CHECK_THAT(expanded.command_range, WithinAbs(1.25, 1e-12));
  // expansion clamps at the configured maximum
  top.command_range = 2.0;
  CHECK_THAT(curriculum_update(top, good, cfg).command_range, WithinAbs(2.0, 1e-12));
}

TEST_CASE("command sampling is seeded and respects the range") {
  CurriculumState s;
  s.command_range = 1.25;
  Rng a(5), b(5);
  for (int i = 0; i < 20; ++i) {
    Vec ca = sample_command(a, s, true, false);
    Vec cb = sample_command(b, s, true, false);
    CHECK(ca == cb);
    CHECK(std::abs(ca[0]) <= 1.25);
    CHECK(std::abs(ca[1]) <= 1.25);
    CHECK(ca[2] == 0.0);
  }
}

TEST_CASE("walker reset places the base at the desired height") {
  EnvCommonConfig common = walker_common();
  common.rand.enabled = false;
  WalkerConfig wc;
  wc.noise_scale = 0.0;
  WalkerEnv env(common, wc, TerrainKind::Flat, 11);
  CHECK_THAT(env.base_height_above_terrain(), WithinAbs(common.reward.desired_height, 1e-3));
  CHECK(env.pitch() == 0.0);
}

TEST_CASE("walker stands under zero action for a full episode") {
  EnvCommonConfig common = walker_common();
  common.rand.enabled = false;
  WalkerConfig wc;
  wc.noise_scale = 0.0;
  WalkerEnv env(common, wc, TerrainKind::Flat, 13);
  Vec a = Vec::Zero(env.action_dim());
  Termination term = Termination::Running;
  for (int t = 0; t < 1000 && term == Termination::Running; ++t)
    term = env.step(a).termination;
  CHECK(term == Termination::TimeOut);
  CHECK(env.base_height_above_terrain() > 0.4);
  CHECK(std::abs(env.pitch()) < 0.2);
}

TEST_CASE("walker is deterministic per seed") {
  EnvCommonConfig common = walker_common();
  WalkerConfig wc;
  WalkerEnv a(common, wc, TerrainKind::RoughSlope, 77);
  WalkerEnv b(common, wc, TerrainKind::RoughSlope, 77);
  Rng act(3);
  for (int t = 0; t < 50; ++t) {
    Vec act_v = Vec::NullaryExpr(4, [&]() { return act.normal() * 0.3; });
    a.step(act_v);
    b.step(act_v);
  }
  Vec fa = a.privileged_state().flatten(), fb = b.privileged_state().flatten();
  CHECK(std::memcmp(fa.data(), fb.data(), sizeof(double) * fa.size()) == 0);
}

TEST_CASE("walker observation split carries no velocity or terrain") {
  EnvCommonConfig common = walker_common();
  WalkerConfig wc;
  WalkerEnv env(common, wc, TerrainKind::Stairs, 5);
  CHECK(env.obs_dim() == 18);
  const PrivilegedState& s = env.privileged_state();
  CHECK(s.terrain_heights.size() == 11);
  CHECK(s.base_lin_velocity.size() == 2);
  CHECK(s.contact_forces.size() == 4);
  Vec fp = s.proprio.flatten();
  Vec fh = env.history().frame(0);
  CHECK(std::memcmp(fp.data(), fh.data(), sizeof(double) * fp.size()) == 0);
}

TEST_CASE("walker payload changes the total mass") {
  EnvCommonConfig common = walker_common();
  common.rand.link_mass_min = common.rand.link_mass_max = 1.0;
  common.rand.payload_min = common.rand.payload_max = 3.0;
  WalkerConfig wc;
  WalkerEnv env(common, wc, TerrainKind::Flat, 2);
  CHECK_THAT(env.total_mass(), WithinAbs(wc.base_mass + 3.0, 1e-12));
}

TEST_CASE("walker falls over when the controller is disabled") {
  EnvCommonConfig common = walker_common();
  common.rand.enabled = false;
  WalkerConfig wc;
  wc.kp_hip = wc.kp_len = 0.0;  // legs collapse
  wc.kd_hip = wc.kd_len = 0.0;
  WalkerEnv env(common, wc, TerrainKind::Flat, 4);
  Vec a = Vec::Zero(4);
  Termination term = Termination::Running;
  int t = 0;
  for (; t < 400 && term == Termination::Running; ++t) term = env.step(a).termination;
  CHECK(term == Termination::FallOver);
  CHECK(t < 400);
}

TEST_CASE("walker torque saturates at the limit") {
  EnvCommonConfig common = walker_common();
  common.rand.enabled = false;
  WalkerConfig wc;
  wc.noise_scale = 0.0;
  WalkerEnv env(common, wc, TerrainKind::Flat, 6);
  Vec a(4);
  a << 50.0, 0.0, -50.0, 0.0;  // far beyond any reachable reference
  env.step(a);
  Vec tau = env.privileged_state().joint_torques;
  CHECK_THAT(std::abs(tau[0]), WithinAbs(wc.torque_limit_hip, 1e-9));
  CHECK_THAT(std::abs(tau[2]), WithinAbs(wc.torque_limit_hip, 1e-9));
}

TEST_CASE("walker gait phase offsets the two feet by half a cycle") {
  EnvCommonConfig common = walker_common();
  WalkerConfig wc;
  WalkerEnv env(common, wc, TerrainKind::Flat, 8);
  double p0 = env.gait_phase(0), p1 = env.gait_phase(1);
  double diff = std::fmod(p1 - p0 + 1.0, 1.0);
  CHECK_THAT(diff, WithinAbs(0.5, 1e-12));
}

TEST_CASE("history buffer pads with the reset observation") {
  EnvCommonConfig common = pointmass_common();
  common.history = 5;
  PointmassConfig pc;
  PointmassEnv env(common, pc, 12);
  Vec reset_obs = env.history().frame(0);
  for (int k = 0; k <= 5; ++k) CHECK(env.history().frame(k) == reset_obs);

  env.step(Vec{{0.5, 0.5}});
  env.step(Vec{{-0.5, 0.25}});
  CHECK(env.history().frame(2) == reset_obs);
  CHECK(env.history().frame(5) == reset_obs);
  CHECK(env.history().frame(0) != reset_obs);
  CHECK(env.history().flat_dim() == 6 * env.obs_dim());
}
