#include <catch2/catch_amalgamated.hpp>

#include <tsrl/terrain.hpp>

#include <algorithm>
#include <set>
#include <sstream>

using namespace tsrl;

namespace {

double max_abs_local_slope(const TerrainProfile& p) {
  double worst = 0.0;
  for (size_t i = 0; i + 1 < p.heights.size(); ++i)
    worst = std::max(worst, std::abs(p.heights[i + 1] - p.heights[i]) / p.resolution);
  return worst;
}

double max_step(const TerrainProfile& p) {
  double worst = 0.0;
  for (size_t i = 0; i + 1 < p.heights.size(); ++i)
    worst = std::max(worst, std::abs(p.heights[i + 1] - p.heights[i]));
  return worst;
}

}  // namespace

TEST_CASE("flat terrain is all zeros") {
  TerrainProfile p = generate_terrain(TerrainKind::Flat, 0, 123);
  for (double h : p.heights) CHECK(h == 0.0);
  CHECK(p.height_at(3.7) == 0.0);
}

TEST_CASE("slope heightfield is exactly linear") {
  for (int level : {0, 4, 9}) {
    TerrainProfile p = generate_terrain(TerrainKind::Slope, level, 5);
    double slope = (p.height_at(1.0) - p.height_at(0.0)) / 1.0;
    CHECK(slope > 0.0);
    for (double x : {-12.3, -0.5, 0.77, 8.0, 20.25}) {
      for (double dx : {0.05, 0.13, 1.7}) {
        double got = p.height_at(x + dx) - p.height_at(x);
        CHECK_THAT(got, Catch::Matchers::WithinAbs(slope * dx, 1e-9));
      }
    }
  }
}

TEST_CASE("stairs have uniform risers and bounded level count") {
  TerrainProfile p = generate_terrain(TerrainKind::Stairs, 3, 11);
  std::set<long> levels;
  for (double h : p.heights) levels.insert(std::lround(h * 1e9));
  CHECK(static_cast<double>(levels.size()) <=
        std::ceil(p.length() / 0.3));

  std::vector<long> sorted(levels.begin(), levels.end());
  std::vector<double> gaps;
  for (size_t i = 0; i + 1 < sorted.size(); ++i)
    gaps.push_back((sorted[i + 1] - sorted[i]) * 1e-9);
  double rise = gaps.front();
  CHECK(rise > 0.0);
  for (double g : gaps) CHECK_THAT(g, Catch::Matchers::WithinAbs(rise, 1e-9));
}

TEST_CASE("terrain generation is deterministic in (kind, difficulty, seed)") {
  for (TerrainKind k : {TerrainKind::RoughSlope, TerrainKind::DiscreteObstacles,
                        TerrainKind::Stairs}) {
    TerrainProfile a = generate_terrain(k, 5, 42);
    TerrainProfile b = generate_terrain(k, 5, 42);
    CHECK(a.heights == b.heights);
    TerrainProfile c = generate_terrain(k, 5, 43);
    if (k != TerrainKind::Stairs) CHECK(a.heights != c.heights);
  }
}

TEST_CASE("difficulty is monotone in max slope and step height") {
  for (TerrainKind k : {TerrainKind::Slope, TerrainKind::RoughSlope,
                        TerrainKind::Stairs, TerrainKind::DiscreteObstacles}) {
    double prev_slope = -1.0, prev_step = -1.0;
    for (int level = 0; level <= kTerrainMaxLevel; ++level) {
      TerrainProfile p = generate_terrain(k, level, 7);
      double s = max_abs_local_slope(p), st = max_step(p);
      CHECK(s >= prev_slope - 1e-12);
      CHECK(st >= prev_step - 1e-12);
      prev_slope = s;
      prev_step = st;
    }
  }
}

TEST_CASE("height lookup interpolates and clamps") {
  TerrainProfile p;
  p.x0 = 0.0;
  p.resolution = 1.0;
  p.heights = {0.0, 2.0, 1.0};
  CHECK_THAT(p.height_at(0.5), Catch::Matchers::WithinAbs(1.0, 1e-15));
  CHECK_THAT(p.height_at(1.25), Catch::Matchers::WithinAbs(1.75, 1e-15));
  CHECK(p.height_at(-3.0) == 0.0);
  CHECK(p.height_at(9.0) == 1.0);
}

TEST_CASE("bad terrain arguments raise") {
  CHECK_THROWS_AS(generate_terrain(TerrainKind::Slope, -1, 0), std::invalid_argument);
  CHECK_THROWS_AS(generate_terrain(TerrainKind::Slope, kTerrainMaxLevel + 1, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(terrain_kind_from_name("volcano"), std::invalid_argument);
}

TEST_CASE("terrain csv export") {
  TerrainProfile p = generate_terrain(TerrainKind::Slope, 2, 1);
  std::ostringstream os;
  terrain_to_csv(p, os);
  std::string s = os.str();
  CHECK(s.rfind("x,height\n", 0) == 0);
  size_t lines = std::count(s.begin(), s.end(), '\n');
  CHECK(lines == p.heights.size() + 1);
}
