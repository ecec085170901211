////////////////////////////////////////////////////////////////////////////////
// Copyright 2026 the sosbeam project developers.
// SPDX-License-Identifier: Apache-2.0
//
// sosbeam: plane-wave ultrasound beamforming with local speed-of-sound maps
// Travel-time tables: streamed per-ray integration of a slowness map,
// sampled on a node lattice and interpolated bilinearly.
////////////////////////////////////////////////////////////////////////////////

#pragma once

#include <vector>

#include "sosbeam/geometry.hpp"

namespace sosbeam {

// One-way travel times between array elements / plane-wave wavefronts and
// arbitrary points inside the map's bounding box. Tables hold the traced
// time minus the homogeneous closed form at sigma_ref, so the interpolant
// only sees the smooth heterogeneity correction; the near-field curvature
// of the homogeneous part is evaluated exactly.
class TravelTimeTables {
 public:
  struct Params {
    int nodes_x = 129;
    int nodes_z = 129;
    double sigma_steer = 0.0;    // slowness of the transmit steering hardware
    double sigma_outside = 0.0;  // slowness assumed outside the map box
  };

  TravelTimeTables(const SlownessMap& map, const TransducerArray& array,
                   const std::vector<double>& tx_angles, const Params& params, int threads);

  // Receive time from tx_angles-independent element n to point p.
  double rx_time(int element, Vec2 p) const;
  // Transmit delay of plane wave tx_angles[a] at point p, referenced to the
  // wavefront crossing the array center at t = 0. May be negative for
  // shallow pixels on the leading side of a steered wavefront.
  double tx_time(int a, Vec2 p) const;

  int num_elements() const { return static_cast<int>(element_x_.size()); }
  int num_angles() const { return static_cast<int>(angles_.size()); }
  double angle(int a) const { return angles_[a]; }
  double sigma_steer() const { return params_.sigma_steer; }

 private:
  double interp(const std::vector<double>& table, Vec2 p) const;

  Params params_;
  std::vector<double> element_x_;
  std::vector<double> angles_;
  double x0_ = 0.0, z0_ = 0.0;   // node lattice origin
  double ddx_ = 0.0, ddz_ = 0.0; // node spacing
  std::vector<std::vector<double>> rx_corr_;  // per element, z-fastest nodes
  std::vector<std::vector<double>> tx_corr_;  // per angle
};

}  // namespace sosbeam
