#pragma once

#include <tsrl/common.hpp>

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

namespace tsrl {

enum class TerrainKind { Flat, Slope, RoughSlope, Stairs, DiscreteObstacles };

inline const char* terrain_kind_name(TerrainKind k) {
  switch (k) {
    case TerrainKind::Flat: return "flat";
    case TerrainKind::Slope: return "slope";
    case TerrainKind::RoughSlope: return "rough_slope";
    case TerrainKind::Stairs: return "stairs";
    case TerrainKind::DiscreteObstacles: return "obstacles";
  }
  return "?";
}

inline TerrainKind terrain_kind_from_name(const std::string& s) {
  if (s == "flat") return TerrainKind::Flat;
  if (s == "slope") return TerrainKind::Slope;
  if (s == "rough_slope") return TerrainKind::RoughSlope;
  if (s == "stairs") return TerrainKind::Stairs;
  if (s == "obstacles") return TerrainKind::DiscreteObstacles;
  throw std::invalid_argument("unknown terrain kind: " + s);
}

constexpr int kTerrainMaxLevel = 9;

/// 1-D heightfield with piecewise-linear lookup. Pure function of
/// (kind, difficulty, seed); the walker env regenerates one when the
/// curriculum promotes or demotes it.
struct TerrainProfile {
  TerrainKind kind = TerrainKind::Flat;
  int difficulty_level = 0;
  double x0 = -40.0;       // m, first sample position
  double resolution = 0.1;  // m between samples
  std::vector<double> heights;
  double friction = 1.0;
  double restitution = 0.5;

  double length() const { return resolution * (heights.size() - 1); }

  double height_at(double x) const {
    if (heights.empty()) return 0.0;
    double fi = (x - x0) / resolution;
    if (fi <= 0.0) return heights.front();
    int n = static_cast<int>(heights.size());
    if (fi >= n - 1) return heights.back();
    int i = static_cast<int>(fi);
    double t = fi - i;
    return (1.0 - t) * heights[i] + t * heights[i + 1];
  }
};

namespace detail {

inline double slope_for_level(int level) { return 0.05 + 0.035 * level; }
inline double stair_rise_for_level(int level) { return 0.02 + 0.018 * level; }
inline double rough_amp_for_level(int level) { return 0.01 + 0.005 * level; }
inline double obstacle_height_for_level(int level) { return 0.02 + 0.018 * level; }

}  // namespace detail

inline TerrainProfile generate_terrain(TerrainKind kind, int difficulty_level,
                                       std::uint64_t seed) {
  if (difficulty_level < 0 || difficulty_level > kTerrainMaxLevel)
    throw std::invalid_argument(
        strfmt("generate_terrain: difficulty %d outside [0,%d]",
               difficulty_level, kTerrainMaxLevel));

  TerrainProfile p;
  p.kind = kind;
  p.difficulty_level = difficulty_level;
  const int n = static_cast<int>(std::lround(80.0 / p.resolution)) + 1;
  p.heights.assign(n, 0.0);

  // Noise patterns depend on the seed only, scaled by a difficulty-dependent
  // amplitude, so max slope / step height grow monotonically with the level.
  Rng rng(seed ^ (0xa5a5a5a5ull + static_cast<std::uint64_t>(kind) * 7919));

  auto x_of = [&](int i) { return p.x0 + i * p.resolution; };

  switch (kind) {
    case TerrainKind::Flat:
      break;
    case TerrainKind::Slope: {
      double s = detail::slope_for_level(difficulty_level);
      for (int i = 0; i < n; ++i) p.heights[i] = s * x_of(i);
      break;
    }
    case TerrainKind::RoughSlope: {
      double s = detail::slope_for_level(difficulty_level);
      double amp = detail::rough_amp_for_level(difficulty_level);
      for (int i = 0; i < n; ++i)
        p.heights[i] = s * x_of(i) + amp * rng.uniform(-1.0, 1.0);
      break;
    }
    case TerrainKind::Stairs: {
      // ascending away from the spawn area in both directions
      double rise = detail::stair_rise_for_level(difficulty_level);
      const double run = 0.3;
      for (int i = 0; i < n; ++i)
        p.heights[i] = rise * std::floor(std::abs(x_of(i)) / run);
      break;
    }
    case TerrainKind::DiscreteObstacles: {
      double hmax = detail::obstacle_height_for_level(difficulty_level);
      const int n_obstacles = 24;
      for (int k = 0; k < n_obstacles; ++k) {
        double cx = rng.uniform(p.x0 + 1.0, p.x0 + 79.0);
        double w = rng.uniform(0.3, 1.0);
        double h = hmax * rng.uniform(0.25, 1.0);
        if (rng.uniform(0.0, 1.0) < 0.5) h = -h;
        if (std::abs(cx) < 1.5) continue;  // keep the spawn area flat
        int lo = std::max(0, static_cast<int>((cx - w / 2 - p.x0) / p.resolution));
        int hi = std::min(n - 1, static_cast<int>((cx + w / 2 - p.x0) / p.resolution));
        for (int i = lo; i <= hi; ++i) p.heights[i] = h;
      }
      break;
    }
  }
  return p;
}

inline void terrain_to_csv(const TerrainProfile& p, std::ostream& os) {
  os << "x,height\n";
  for (size_t i = 0; i < p.heights.size(); ++i)
    os << strfmt("%.17g,%.17g\n", p.x0 + i * p.resolution, p.heights[i]);
}

}  // namespace tsrl
