#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <tuple>

#include "walkprior/common.hpp"

namespace wp::terrain {

enum class TerrainFamily { SlopeUp, SlopeDown, RoughSlope, StairsUp, StairsDown, DiscreteObstacles };
// Reporting groups: slopes, rough, stairs, discrete obstacles.
enum class TerrainGroup { Slopes, Rough, Stairs, Obstacles };

inline constexpr int kNumFamilies = 6;
inline constexpr int kNumGroups = 4;

const char* to_string(TerrainFamily f);
const char* to_string(TerrainGroup g);
TerrainFamily family_from_string(const std::string& s);
TerrainGroup group_of(TerrainFamily f);

struct TerrainConfig {
  double block_size = 8.0;    // m, square block
  double resolution = 0.1;    // m per cell
  int max_level = 20;
  int instances_per_level = 20;
  double max_slope_deg = 22.92;
  double stair_rise_min = 0.05;
  double stair_rise_max = 0.2495;
  double stair_run = 0.31;
  int max_stair_steps = 6;
  double rough_noise = 0.05;  // bound of the uniform roughness at the top level
  double obstacle_height_min = 0.05;
  double obstacle_height_max = 0.24;
  double obstacle_size_min = 0.5;
  double obstacle_size_max = 1.0;
  int obstacle_count = 14;
  double platform_half_width = 0.5;  // flat spawn strip around the block centre
};

// Difficulty parameters at a level; all interpolate linearly in level.
struct TerrainParams {
  double slope_deg = 0.0;
  double stair_rise = 0.0;
  int stair_steps = 0;
  double noise_amplitude = 0.0;
  double obstacle_bound = 0.0;
};

TerrainParams terrain_parameters(TerrainFamily family, int level, const TerrainConfig& cfg);

// Heights sampled at cell centres ((i + 1/2) * resolution, (j + 1/2) * resolution).
// Immutable after generation.
class Heightfield {
 public:
  Heightfield(TerrainFamily family, int level, TerrainParams params, int nx, int ny,
              double resolution, Vec heights);

  TerrainFamily family() const { return family_; }
  int level() const { return level_; }
  const TerrainParams& params() const { return params_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double resolution() const { return resolution_; }
  double size_x() const { return nx_ * resolution_; }
  double size_y() const { return ny_ * resolution_; }
  double at(int i, int j) const { return heights_[static_cast<std::size_t>(j) * nx_ + i]; }
  const Vec& heights() const { return heights_; }

  // Bilinear between cell centres; queries outside the block clamp to the edge.
  double height_at(double x, double y) const;
  // Central-difference slope dh/dx at (x, y).
  double slope_x(double x, double y) const;

  // Row-major (y rows, x columns), metres, six decimals, one '#' header line.
  std::string to_text() const;

 private:
  TerrainFamily family_;
  int level_;
  TerrainParams params_;
  int nx_, ny_;
  double resolution_;
  Vec heights_;
};

Heightfield generate_terrain(TerrainFamily family, int level, std::uint64_t seed,
                             const TerrainConfig& cfg = {});

// Family of each of the 20 instances on a level: 4 rough, 4 obstacles, 3 of each
// slope and stair direction. Level-independent.
std::array<TerrainFamily, 20> terrain_level_layout(int level);

struct ScanGrid {
  int nx = 11;  // samples along heading
  int ny = 5;   // samples across
  double length = 1.6;
  double width = 1.0;
  int size() const { return nx * ny; }
};

// Base height minus terrain height at each scan point, points laid out in the
// base yaw frame, index = iy * nx + ix.
Vec scan_height_map(const Heightfield& field, double base_x, double base_y, double base_z,
                    double yaw, const ScanGrid& grid);

// Lazily generated, shared terrain instances keyed by (level, instance).
class TerrainBank {
 public:
  TerrainBank(TerrainConfig cfg, std::uint64_t seed) : cfg_(cfg), seed_(seed) {}
  std::shared_ptr<const Heightfield> get(int level, int instance);
  // Instance override for single-family runs.
  std::shared_ptr<const Heightfield> get_family(TerrainFamily family, int level, int instance);
  const TerrainConfig& config() const { return cfg_; }

 private:
  TerrainConfig cfg_;
  std::uint64_t seed_;
  std::map<std::tuple<int, int, int>, std::shared_ptr<const Heightfield>> cache_;
};

}  // namespace wp::terrain
