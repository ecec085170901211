////////////////////////////////////////////////////////////////////////////////
// Copyright 2026 the sosbeam project developers.
// SPDX-License-Identifier: Apache-2.0
//
// sosbeam: plane-wave ultrasound beamforming with local speed-of-sound maps
// Axial apparent-displacement tracking between angled beamformed frames.
////////////////////////////////////////////////////////////////////////////////

#pragma once

#include <cstdint>
#include <vector>

#include "sosbeam/beamform.hpp"
#include "sosbeam/geometry.hpp"

namespace sosbeam {

struct TrackingConfig {
  int window_ax = 32;   // axial samples
  int window_lat = 5;   // lateral lines
  int search = 8;       // +- axial sample lags
  std::vector<double> theta_psf = {deg_to_rad(-15.0), 0.0, deg_to_rad(15.0)};
  double scale_factor = 1.5;
  enum class Projection { cosine, inverse_cosine };
  Projection projection = Projection::cosine;
  double quality_threshold = 0.5;
  enum class Subpixel { cosine_fit, parabolic };
  Subpixel subpixel = Subpixel::cosine_fit;

  void validate() const;
};

// Per-pixel axial delay measurements for one tracked angle pair.
struct DisplacementMap {
  ImagingGrid grid;
  std::vector<double> dtau;          // s; positive = second frame arrives later
  std::vector<double> quality;       // peak NCC in [-1, 1]
  std::vector<std::uint8_t> valid;
};

// Receive steering angles that align both frames' PSFs at theta_psf
// (tx/rx bisector rule). ok is false when either angle exceeds the
// acceptance limit and the pair must be dropped.
struct AlignedApertures {
  double rx_i = 0.0;
  double rx_j = 0.0;
  bool ok = false;
};
AlignedApertures psf_aligned_apertures(double theta_i, double theta_j, double theta_psf,
                                       double max_rx_angle);

// Windowed zero-mean normalized cross-correlation over axial lags, with
// subpixel peak refinement. dtau converts axial pixels to two-way time via
// 2 * sigma0 * dz. frame_a and frame_b must share one grid.
DisplacementMap ncc_displacement(const BeamformedFrame& frame_a, const BeamformedFrame& frame_b,
                                 const TrackingConfig& cfg, double sigma0, int threads);

// Projection of the axial estimate onto the aligned PSF's minor axis plus
// the empirical amplitude calibration.
void project_and_scale(DisplacementMap& map, double theta_psf, const TrackingConfig& cfg);

// Block-averages a displacement map onto a coarser measurement grid. Blocks
// with fewer than min_valid_fraction valid members become invalid.
DisplacementMap decimate(const DisplacementMap& map, int factor_x, int factor_z,
                         double min_valid_fraction = 0.3);

// Stacked measurement vector over pairs (pair-major, z-fastest in each map).
struct MeasurementVector {
  std::vector<double> dtau;
  std::vector<double> quality;
  std::vector<std::uint8_t> valid;
};
MeasurementVector build_measurement_vector(const std::vector<DisplacementMap>& per_pair);

// Pixel positions of a grid in flat (z-fastest) order; the row order of the
// differential path matrix built for these measurements.
std::vector<Vec2> grid_pixel_positions(const ImagingGrid& grid);

}  // namespace sosbeam
