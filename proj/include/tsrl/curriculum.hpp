#pragma once

#include <tsrl/common.hpp>
#include <tsrl/terrain.hpp>

#include <algorithm>

namespace tsrl {

struct CurriculumConfig {
  double promote_threshold = 0.8;   // mean lin-tracking reward to promote
  double demote_ratio = 0.5;        // traveled/commanded distance to avoid demotion
  double command_increment = 0.25;  // m/s added per expansion
  double initial_command_range = 1.0;
  double max_command_range = 1.0;   // expansion stops here
  double initial_yaw_range = 1.0;   // rad/s
};

struct CurriculumState {
  int terrain_level = 0;
  double command_range = 1.0;
  double yaw_range = 1.0;
};

struct EpisodeSummary {
  double mean_lin_tracking = 0.0;
  double distance_traveled = 0.0;
  double commanded_distance = 0.0;
};

/// Terrain promotion on tracking success, demotion when the robot barely
/// moved relative to what was commanded; the command range only expands once
/// the hardest level is mastered.
inline CurriculumState curriculum_update(const CurriculumState& state,
                                         const EpisodeSummary& ep,
                                         const CurriculumConfig& cfg,
                                         int max_level = kTerrainMaxLevel) {
  CurriculumState next = state;
  if (ep.mean_lin_tracking > cfg.promote_threshold) {
    if (state.terrain_level >= max_level) {
      next.command_range = std::min(cfg.max_command_range,
                                    state.command_range + cfg.command_increment);
    } else {
      next.terrain_level = state.terrain_level + 1;
    }
  } else if (ep.commanded_distance > 1e-9 &&
             ep.distance_traveled < cfg.demote_ratio * ep.commanded_distance) {
    next.terrain_level = std::max(0, state.terrain_level - 1);
  }
  return next;
}

/// Uniform command triple (v_x, v_y, omega_z) within the current range.
/// Components an env cannot realize (lateral velocity for the planar walker,
/// yaw for both toy envs) are sampled as zero.
inline Vec sample_command(Rng& rng, const CurriculumState& state,
                          bool vy_enabled, bool yaw_enabled) {
  Vec cmd(3);
  cmd[0] = rng.uniform(-state.command_range, state.command_range);
  cmd[1] = vy_enabled ? rng.uniform(-state.command_range, state.command_range) : 0.0;
  cmd[2] = yaw_enabled ? rng.uniform(-state.yaw_range, state.yaw_range) : 0.0;
  return cmd;
}

}  // namespace tsrl
