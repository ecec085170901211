////////////////////////////////////////////////////////////////////////////////
// Copyright 2026 the sosbeam project developers.
// SPDX-License-Identifier: Apache-2.0
//
// sosbeam: plane-wave ultrasound beamforming with local speed-of-sound maps
// Delay computation from slowness maps and delay-and-sum beamforming.
////////////////////////////////////////////////////////////////////////////////

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "sosbeam/geometry.hpp"
#include "sosbeam/rf_sim.hpp"
#include "sosbeam/traveltime.hpp"

namespace sosbeam {

// Two-way delays for one transmit angle, (element * nx + ix) * nz + iz.
struct DelayField {
  ImagingGrid grid;
  int num_elements = 0;
  double angle = 0.0;
  std::vector<double> tau;  // s

  double at(int element, int ix, int iz) const {
    return tau[(static_cast<std::int64_t>(element) * grid.nx + ix) * grid.nz + iz];
  }
};

// RF-domain beamformed image, z-fastest.
struct BeamformedFrame {
  ImagingGrid grid;
  double tx_angle = 0.0;
  double rx_steer = 0.0;
  std::string provenance;
  std::vector<double> rf;

  void validate() const;
};

// Streams tau = P sigma for one slowness map: per-pixel delays are evaluated
// from node-sampled travel-time tables instead of a materialized matrix.
// Constant maps reproduce the homogeneous closed-form delays, so the global
// SoS beamformer is this calculator applied to a constant map.
class DelayCalculator {
 public:
  // sigma_steer: slowness used for the transmit steering lead (and as the
  // interpolation reference); sigma_outside: slowness assumed outside the
  // map box. A conventional global-SoS beamformer at speed c uses
  // map = constant(1/c) and sigma_steer = sigma_outside = 1/c.
  DelayCalculator(const SlownessMap& map, const TransducerArray& array,
                  const std::vector<double>& angles, double sigma_steer,
                  double sigma_outside, TravelTimeTables::Params table_nodes, int threads);

  double tx_time(int angle_idx, Vec2 pixel) const { return tables_->tx_time(angle_idx, pixel); }
  double rx_time(int element, Vec2 pixel) const { return tables_->rx_time(element, pixel); }
  double delay(int element, int angle_idx, Vec2 pixel) const {
    return tx_time(angle_idx, pixel) + rx_time(element, pixel);
  }

  // Materialized delay tensor for one angle (small grids and tests).
  DelayField compute_delays(int angle_idx, const ImagingGrid& grid, int threads) const;

  int num_angles() const { return tables_->num_angles(); }

 private:
  std::unique_ptr<TravelTimeTables> tables_;
  int num_elements_;
};

// Delay-and-sum with a materialized delay field.
BeamformedFrame das(const RfChannelData& rf, const DelayField& tau,
                    const ApodizationSpec& apod, const TransducerArray& array,
                    double rx_steer, int threads);

// Delay-and-sum streaming delays from the calculator (identical arithmetic).
BeamformedFrame das_streamed(const RfChannelData& rf, const DelayCalculator& calc,
                             int angle_idx, const ImagingGrid& grid,
                             const ApodizationSpec& apod, const TransducerArray& array,
                             double rx_steer, int threads);

// Coherent (RF-domain) compounding: element-wise sum over identical grids.
BeamformedFrame compound(const std::vector<BeamformedFrame>& frames);

}  // namespace sosbeam
