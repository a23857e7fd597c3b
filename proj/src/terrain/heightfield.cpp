#include "walkprior/terrain/heightfield.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace wp::terrain {

const char* to_string(TerrainFamily f) {
  switch (f) {
    case TerrainFamily::SlopeUp: return "slope-up";
    case TerrainFamily::SlopeDown: return "slope-down";
    case TerrainFamily::RoughSlope: return "rough-slope";
    case TerrainFamily::StairsUp: return "stairs-up";
    case TerrainFamily::StairsDown: return "stairs-down";
    case TerrainFamily::DiscreteObstacles: return "discrete-obstacles";
  }
  return "?";
}

const char* to_string(TerrainGroup g) {
  switch (g) {
    case TerrainGroup::Slopes: return "slopes";
    case TerrainGroup::Rough: return "rough";
    case TerrainGroup::Stairs: return "stairs";
    case TerrainGroup::Obstacles: return "obstacles";
  }
  return "?";
}

TerrainFamily family_from_string(const std::string& s) {
  for (int i = 0; i < kNumFamilies; ++i) {
    const auto f = static_cast<TerrainFamily>(i);
    if (s == to_string(f)) return f;
  }
  throw Error("unknown terrain family '" + s + "'");
}

TerrainGroup group_of(TerrainFamily f) {
  switch (f) {
    case TerrainFamily::SlopeUp:
    case TerrainFamily::SlopeDown: return TerrainGroup::Slopes;
    case TerrainFamily::RoughSlope: return TerrainGroup::Rough;
    case TerrainFamily::StairsUp:
    case TerrainFamily::StairsDown: return TerrainGroup::Stairs;
    case TerrainFamily::DiscreteObstacles: return TerrainGroup::Obstacles;
  }
  return TerrainGroup::Slopes;
}

TerrainParams terrain_parameters(TerrainFamily family, int level, const TerrainConfig& cfg) {
  if (level < 0 || level > cfg.max_level) {
    throw Error("terrain level " + std::to_string(level) + " outside [0, " +
                std::to_string(cfg.max_level) + "]");
  }
  const double d = static_cast<double>(level) / cfg.max_level;
  TerrainParams p;
  switch (family) {
    case TerrainFamily::SlopeUp:
    case TerrainFamily::SlopeDown: p.slope_deg = d * cfg.max_slope_deg; break;
    case TerrainFamily::RoughSlope:
      p.slope_deg = d * cfg.max_slope_deg;
      p.noise_amplitude = d * cfg.rough_noise;
      break;
    case TerrainFamily::StairsUp:
    case TerrainFamily::StairsDown:
      p.stair_rise = cfg.stair_rise_min + d * (cfg.stair_rise_max - cfg.stair_rise_min);
      p.stair_steps = 1 + static_cast<int>(std::floor(d * (cfg.max_stair_steps - 1) + 1e-9));
      break;
    case TerrainFamily::DiscreteObstacles:
      p.obstacle_bound =
          cfg.obstacle_height_min + d * (cfg.obstacle_height_max - cfg.obstacle_height_min);
      break;
  }
  return p;
}

Heightfield::Heightfield(TerrainFamily family, int level, TerrainParams params, int nx, int ny,
                         double resolution, Vec heights)
    : family_(family),
      level_(level),
      params_(params),
      nx_(nx),
      ny_(ny),
      resolution_(resolution),
      heights_(std::move(heights)) {
  if (nx_ < 2 || ny_ < 2) throw Error("Heightfield needs at least 2x2 cells");
  if (heights_.size() != static_cast<std::size_t>(nx_) * ny_) {
    throw Error("Heightfield: height buffer does not match grid dimensions");
  }
}

double Heightfield::height_at(double x, double y) const {
  // fmax/fmin also map NaN queries onto the grid.
  const double fx = std::fmin(std::fmax(x / resolution_ - 0.5, 0.0), static_cast<double>(nx_ - 1));
  const double fy = std::fmin(std::fmax(y / resolution_ - 0.5, 0.0), static_cast<double>(ny_ - 1));
  const int i0 = std::min(static_cast<int>(fx), nx_ - 2);
  const int j0 = std::min(static_cast<int>(fy), ny_ - 2);
  const double tx = fx - i0;
  const double ty = fy - j0;
  const double h00 = at(i0, j0), h10 = at(i0 + 1, j0);
  const double h01 = at(i0, j0 + 1), h11 = at(i0 + 1, j0 + 1);
  const double a = (1.0 - tx) * h00 + tx * h10;
  const double b = (1.0 - tx) * h01 + tx * h11;
  return (1.0 - ty) * a + ty * b;
}

double Heightfield::slope_x(double x, double y) const {
  const double h = 0.5 * resolution_;
  return (height_at(x + h, y) - height_at(x - h, y)) / (2.0 * h);
}

std::string Heightfield::to_text() const {
  std::string out = "# family=" + std::string(to_string(family_)) +
                    " level=" + std::to_string(level_) + " nx=" + std::to_string(nx_) +
                    " ny=" + std::to_string(ny_);
  char buf[64];
  std::snprintf(buf, sizeof buf, " resolution=%.6f\n", resolution_);
  out += buf;
  for (int j = 0; j < ny_; ++j) {
    for (int i = 0; i < nx_; ++i) {
      std::snprintf(buf, sizeof buf, i == 0 ? "%.6f" : " %.6f", at(i, j));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

Heightfield generate_terrain(TerrainFamily family, int level, std::uint64_t seed,
                             const TerrainConfig& cfg) {
  const TerrainParams p = terrain_parameters(family, level, cfg);
  const int n = static_cast<int>(std::lround(cfg.block_size / cfg.resolution));
  const double centre = 0.5 * cfg.block_size;
  Rng rng = make_stream(seed, static_cast<std::uint64_t>(family) * 1000 + level);
  Vec h(static_cast<std::size_t>(n) * n, 0.0);
  auto cell_x = [&](int i) { return (i + 0.5) * cfg.resolution; };

  // Profiles rise (or fall) symmetrically away from the spawn strip.
  auto ramp = [&](double x) { return std::max(std::abs(x - centre) - cfg.platform_half_width, 0.0); };
  const double grade = std::tan(p.slope_deg * std::numbers::pi / 180.0);

  switch (family) {
    case TerrainFamily::SlopeUp:
    case TerrainFamily::SlopeDown:
    case TerrainFamily::RoughSlope: {
      const double sign = family == TerrainFamily::SlopeDown ? -1.0 : 1.0;
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) h[j * n + i] = sign * grade * ramp(cell_x(i));
      if (family == TerrainFamily::RoughSlope && p.noise_amplitude > 0.0) {
        for (auto& v : h) v += uniform(rng, -p.noise_amplitude, p.noise_amplitude);
      }
      break;
    }
    case TerrainFamily::StairsUp:
    case TerrainFamily::StairsDown: {
      const double sign = family == TerrainFamily::StairsDown ? -1.0 : 1.0;
      for (int i = 0; i < n; ++i) {
        const double r = ramp(cell_x(i));
        const int step = r > 0.0 ? std::min(static_cast<int>(std::floor(r / cfg.stair_run)) + 1, p.stair_steps) : 0;
        for (int j = 0; j < n; ++j) h[j * n + i] = sign * step * p.stair_rise;
      }
      break;
    }
    case TerrainFamily::DiscreteObstacles: {
      for (int k = 0; k < cfg.obstacle_count; ++k) {
        const double sx = uniform(rng, cfg.obstacle_size_min, cfg.obstacle_size_max);
        const double sy = uniform(rng, cfg.obstacle_size_min, cfg.obstacle_size_max);
        const double x0 = uniform(rng, 0.0, cfg.block_size - sx);
        const double y0 = uniform(rng, 0.0, cfg.block_size - sy);
        const double height = uniform(rng, -p.obstacle_bound, p.obstacle_bound);
        for (int j = 0; j < n; ++j)
          for (int i = 0; i < n; ++i) {
            const double x = cell_x(i), y = cell_x(j);
            if (std::abs(x - centre) < cfg.platform_half_width &&
                std::abs(y - centre) < cfg.platform_half_width) {
              continue;
            }
            if (x >= x0 && x < x0 + sx && y >= y0 && y < y0 + sy) h[j * n + i] = height;
          }
      }
      break;
    }
  }
  return Heightfield(family, level, p, n, n, cfg.resolution, std::move(h));
}

std::array<TerrainFamily, 20> terrain_level_layout(int level) {
  (void)level;
  using F = TerrainFamily;
  return {F::RoughSlope,        F::RoughSlope,        F::RoughSlope,        F::RoughSlope,
          F::DiscreteObstacles, F::DiscreteObstacles, F::DiscreteObstacles, F::DiscreteObstacles,
          F::SlopeUp,           F::SlopeUp,           F::SlopeUp,           F::SlopeDown,
          F::SlopeDown,         F::SlopeDown,         F::StairsUp,          F::StairsUp,
          F::StairsUp,          F::StairsDown,        F::StairsDown,        F::StairsDown};
}

Vec scan_height_map(const Heightfield& field, double base_x, double base_y, double base_z,
                    double yaw, const ScanGrid& grid) {
  Vec out(grid.size());
  const double c = std::cos(yaw), s = std::sin(yaw);
  for (int iy = 0; iy < grid.ny; ++iy) {
    const double oy = grid.ny > 1 ? -0.5 * grid.width + grid.width * iy / (grid.ny - 1) : 0.0;
    for (int ix = 0; ix < grid.nx; ++ix) {
      const double ox = grid.nx > 1 ? -0.5 * grid.length + grid.length * ix / (grid.nx - 1) : 0.0;
      const double wx = base_x + c * ox - s * oy;
      const double wy = base_y + s * ox + c * oy;
      out[iy * grid.nx + ix] = base_z - field.height_at(wx, wy);
    }
  }
  return out;
}

std::shared_ptr<const Heightfield> TerrainBank::get(int level, int instance) {
  const auto layout = terrain_level_layout(level);
  return get_family(layout[instance % 20], level, instance);
}

std::shared_ptr<const Heightfield> TerrainBank::get_family(TerrainFamily family, int level,
                                                           int instance) {
  const auto key = std::make_tuple(static_cast<int>(family), level, instance);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  const std::uint64_t s = seed_ * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(level) * 131 + instance;
  auto field = std::make_shared<const Heightfield>(generate_terrain(family, level, s, cfg_));
  cache_.emplace(key, field);
  return field;
}

}  // namespace wp::terrain
