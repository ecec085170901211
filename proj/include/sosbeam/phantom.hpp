////////////////////////////////////////////////////////////////////////////////
// Copyright 2026 the sosbeam project developers.
// SPDX-License-Identifier: Apache-2.0
//
// sosbeam: plane-wave ultrasound beamforming with local speed-of-sound maps
// Numerical phantoms: sound-speed inclusions, point scatterers, speckle.
////////////////////////////////////////////////////////////////////////////////

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "sosbeam/geometry.hpp"

namespace sosbeam {

struct PointScatterer {
  Vec2 pos;
  double reflectivity = 1.0;
};

struct CircleInclusion {
  Vec2 center = {0.0, 16.0e-3};
  double radius = 5.0e-3;   // m
  double sos = 1545.0;      // m/s
};

struct PhantomConfig {
  double background_sos = 1500.0;  // m/s
  CircleInclusion inclusion;       // radius 0 or contrast 0 gives a uniform map

  // Point scatterer grid (lateral count x axial count).
  int scatterer_nx = 5;
  int scatterer_nz = 6;
  double scatterer_x0 = -10.0e-3;
  double scatterer_dx = 5.0e-3;
  double scatterer_z0 = 8.0e-3;
  double scatterer_dz = 6.0e-3;
  double point_reflectivity = 1.0;

  // Speckle: a random fraction of medium cells gets a weak scatterer.
  double speckle_density = 0.10;
  double speckle_amp_lo = 0.01;  // x point_reflectivity
  double speckle_amp_hi = 0.05;
  double medium_pitch = 75.0e-6;  // medium grid resolution
};

struct Phantom {
  PhantomConfig cfg;
  SlownessMap true_map;  // on the medium grid
  std::vector<PointScatterer> point_scatterers;
  std::vector<PointScatterer> speckle;

  std::vector<PointScatterer> all_scatterers() const;
  // Rasterizes the analytic phantom onto an arbitrary cell grid
  // (supersampled, so boundary cells get partial-volume values).
  SlownessMap sample_on(const ReconGrid& grid) const;
  // Cells of `grid` whose center lies inside the inclusion.
  std::vector<std::uint8_t> inclusion_mask(const ReconGrid& grid) const;
};

// Builds the default-style simulation phantom on the given region. Speckle
// positions and amplitudes are drawn from `rng`; everything else is
// deterministic from the config.
Phantom make_simulation_phantom(const PhantomConfig& cfg, const ReconGrid& region,
                                std::mt19937_64& rng);

}  // namespace sosbeam
