////////////////////////////////////////////////////////////////////////////////
// Copyright 2026 the sosbeam project developers.
// SPDX-License-Identifier: Apache-2.0
//
// sosbeam: plane-wave ultrasound beamforming with local speed-of-sound maps
// Numerical phantoms: sound-speed inclusions, point scatterers, speckle.
////////////////////////////////////////////////////////////////////////////////

#include "sosbeam/phantom.hpp"

#include <algorithm>
#include <cmath>

#include "sosbeam/errors.hpp"

namespace sosbeam {

namespace {

bool inside_inclusion(const CircleInclusion& inc, Vec2 p) {
  return norm(p - inc.center) <= inc.radius;
}

double sample_sos(const PhantomConfig& cfg, Vec2 p) {
  if (cfg.inclusion.radius > 0.0 && inside_inclusion(cfg.inclusion, p)) {
    return cfg.inclusion.sos;
  }
  return cfg.background_sos;
}

}  // namespace

std::vector<PointScatterer> Phantom::all_scatterers() const {
  std::vector<PointScatterer> all = point_scatterers;
  all.insert(all.end(), speckle.begin(), speckle.end());
  return all;
}

SlownessMap Phantom::sample_on(const ReconGrid& grid) const {
  grid.validate();
  SlownessMap map;
  map.grid = grid;
  map.sigma.resize(grid.num_cells());
  const int ss = 4;  // supersampling per axis for partial-volume boundary cells
  for (int i = 0; i < grid.nx; ++i) {
    for (int j = 0; j < grid.nz; ++j) {
      double acc = 0.0;
      for (int u = 0; u < ss; ++u) {
        for (int v = 0; v < ss; ++v) {
          const Vec2 p = {grid.x0 + (i + (u + 0.5) / ss) * grid.cell_w,
                          grid.z0 + (j + (v + 0.5) / ss) * grid.cell_h};
          acc += 1.0 / sample_sos(cfg, p);
        }
      }
      map.sigma[grid.flat_index(i, j)] = acc / (ss * ss);
    }
  }
  return map;
}

std::vector<std::uint8_t> Phantom::inclusion_mask(const ReconGrid& grid) const {
  std::vector<std::uint8_t> mask(grid.num_cells(), 0);
  if (cfg.inclusion.radius <= 0.0) return mask;
  for (int i = 0; i < grid.nx; ++i) {
    for (int j = 0; j < grid.nz; ++j) {
      mask[grid.flat_index(i, j)] =
          inside_inclusion(cfg.inclusion, grid.cell_center(i, j)) ? 1 : 0;
    }
  }
  return mask;
}

Phantom make_simulation_phantom(const PhantomConfig& cfg, const ReconGrid& region,
                                std::mt19937_64& rng) {
  region.validate();
  if (!(cfg.background_sos >= 1000.0 && cfg.background_sos <= 2000.0)) {
    throw ConfigError("phantom background SoS outside [1000, 2000] m/s");
  }
  if (cfg.inclusion.radius > 0.0) {
    if (!(cfg.inclusion.sos >= 1000.0 && cfg.inclusion.sos <= 2000.0)) {
      throw ConfigError("inclusion SoS outside [1000, 2000] m/s");
    }
    const CircleInclusion& inc = cfg.inclusion;
    if (inc.center.x - inc.radius < region.x0 || inc.center.x + inc.radius > region.x_max() ||
        inc.center.z - inc.radius < region.z0 || inc.center.z + inc.radius > region.z_max()) {
      throw ConfigError("inclusion extends outside the imaging region");
    }
  }

  Phantom ph;
  ph.cfg = cfg;

  // Medium grid at the configured pitch over the region box.
  ReconGrid medium;
  medium.x0 = region.x0;
  medium.z0 = region.z0;
  medium.nx = std::max(1, static_cast<int>(std::lround((region.x_max() - region.x0) / cfg.medium_pitch)));
  medium.nz = std::max(1, static_cast<int>(std::lround((region.z_max() - region.z0) / cfg.medium_pitch)));
  medium.cell_w = (region.x_max() - region.x0) / medium.nx;
  medium.cell_h = (region.z_max() - region.z0) / medium.nz;
  ph.true_map = ph.sample_on(medium);
  ph.true_map.validate();

  for (int gx = 0; gx < cfg.scatterer_nx; ++gx) {
    for (int gz = 0; gz < cfg.scatterer_nz; ++gz) {
      const Vec2 p = {cfg.scatterer_x0 + gx * cfg.scatterer_dx,
                      cfg.scatterer_z0 + gz * cfg.scatterer_dz};
      if (!region.contains(p)) {
        throw ConfigError("point scatterer outside the imaging region");
      }
      ph.point_scatterers.push_back({p, cfg.point_reflectivity});
    }
  }

  if (cfg.speckle_density > 0.0) {
    const std::int64_t ncells = medium.num_cells();
    const std::int64_t count = std::min<std::int64_t>(
        ncells, std::llround(cfg.speckle_density * static_cast<double>(ncells)));
    // Partial Fisher-Yates draw of `count` distinct cells.
    std::vector<std::int64_t> cells(ncells);
    for (std::int64_t k = 0; k < ncells; ++k) cells[k] = k;
    std::uniform_real_distribution<double> amp(cfg.speckle_amp_lo, cfg.speckle_amp_hi);
    ph.speckle.reserve(count);
    for (std::int64_t k = 0; k < count; ++k) {
      std::uniform_int_distribution<std::int64_t> pick(k, ncells - 1);
      std::swap(cells[k], cells[pick(rng)]);
      const int i = static_cast<int>(cells[k] / medium.nz);
      const int j = static_cast<int>(cells[k] % medium.nz);
      ph.speckle.push_back({medium.cell_center(i, j), amp(rng) * cfg.point_reflectivity});
    }
  }
  return ph;
}

}  // namespace sosbeam
