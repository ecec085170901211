////////////////////////////////////////////////////////////////////////////////
// Copyright 2026 the sosbeam project developers.
// SPDX-License-Identifier: Apache-2.0
//
// sosbeam: plane-wave ultrasound beamforming with local speed-of-sound maps
// Straight-ray grid traversal and assembly of the path matrices P and L.
////////////////////////////////////////////////////////////////////////////////

#pragma once

#include <cstdint>
#include <vector>

#include "sosbeam/geometry.hpp"
#include "sosbeam/sparse.hpp"

namespace sosbeam {

// One traced segment: per-cell intersection lengths over a ReconGrid.
struct TraceResult {
  std::vector<std::int32_t> cols;
  std::vector<double> lens;
  double in_grid_length = 0.0;   // Euclidean length of the clipped sub-segment
  double outside_length = 0.0;   // remainder of |b - a| outside the grid box
};

// Exact parametric cell traversal of the segment a->b. Both endpoints must
// lie within (or on) the grid bounding box, otherwise throws NumericError.
// A zero-length segment yields an empty row.
TraceResult trace_ray(Vec2 a, Vec2 b, const ReconGrid& grid);

// Same traversal, but the segment is clipped to the grid box first; the
// clipped-away length is reported in outside_length.
TraceResult trace_ray_clipped(Vec2 a, Vec2 b, const ReconGrid& grid);

// Fused traversal: integrated travel time along a->b under `map`, with
// sigma_outside applied to any clipped-away portion. No row is materialized.
double trace_time(Vec2 a, Vec2 b, const SlownessMap& map, double sigma_outside);

// Transmit path of a plane wave at `angle`: the straight segment entering the
// array plane z = 0 at tx_entry_x(pixel, angle) and ending at the pixel.
// Throws NumericError when the entry point lies beyond the lateral grid
// extent. The portion between z = 0 and the grid top counts as outside.
TraceResult tx_path(Vec2 pixel, double angle, const ReconGrid& grid);

// Same segment without the lateral-entry check: anything beyond the grid box
// is clipped and propagates under the background slowness. Differential rows
// use this form, where the clipped portions cancel exactly.
TraceResult tx_path_clipped(Vec2 pixel, double angle, const ReconGrid& grid);

// Receive path from the pixel to an endpoint on the array plane, clipped to
// the grid box (elements may sit outside it).
TraceResult rx_path(Vec2 pixel, Vec2 endpoint, const ReconGrid& grid);

// Endpoint of the single representative receive ray used in L.
enum class RxEndpointRule {
  aperture_centroid,  // midpoint of the steered dynamic aperture clipped to the array
  fixed_angle,        // steering ray extended to the array plane, unclipped
};

Vec2 rx_endpoint(Vec2 pixel, double rx_steer, const TransducerArray& array,
                 const ApodizationSpec& apod, RxEndpointRule rule);

// Ordered transmit-angle index pair tracked for SoS estimation, with the PSF
// angle both frames were aligned to.
struct AnglePair {
  int i = 0;
  int j = 0;
  double theta_psf = 0.0;
};

struct PathMatrices {
  SparseRayMatrix p_rx;                // one row per (element, pixel)
  std::vector<SparseRayMatrix> p_tx;   // one matrix per angle, one row per pixel
};

// Assembles the single-path matrices for a beamforming grid. Row order is
// z-fastest; p_rx rows are (element * nx + ix) * nz + iz. Throws
// NumericError with a size estimate when the assembled matrices would
// exceed memory_budget_bytes (use streaming delay tables instead at scale).
PathMatrices build_P(const ImagingGrid& img, const ReconGrid& rec,
                     const TransducerArray& array, const std::vector<double>& angles,
                     int threads, std::int64_t memory_budget_bytes = std::int64_t(2) << 30);

struct DiffPathParams {
  std::vector<double> sos_angles;  // rad, the SoS-estimation transmit set
  const TransducerArray* array = nullptr;
  const ApodizationSpec* apod = nullptr;
  RxEndpointRule rule = RxEndpointRule::aperture_centroid;
};

// Assembles the differential path matrix: one row per (pair, pixel), each row
// the four-path combination [tx_j + rx_j] - [tx_i + rx_i]. Row order is
// pair-major, pixels in the order given.
SparseRayMatrix build_L(const std::vector<AnglePair>& pairs, const std::vector<Vec2>& pixels,
                        const ReconGrid& rec, const DiffPathParams& params, int threads);

}  // namespace sosbeam
