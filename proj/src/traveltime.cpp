////////////////////////////////////////////////////////////////////////////////
// Copyright 2026 the sosbeam project developers.
// SPDX-License-Identifier: Apache-2.0
//
// sosbeam: plane-wave ultrasound beamforming with local speed-of-sound maps
// Travel-time tables built by streamed straight-ray integration.
////////////////////////////////////////////////////////////////////////////////

#include "sosbeam/traveltime.hpp"

#include <algorithm>
#include <cmath>

#include "sosbeam/errors.hpp"
#include "sosbeam/parallel.hpp"
#include "sosbeam/raytrace.hpp"

namespace sosbeam {

TravelTimeTables::TravelTimeTables(const SlownessMap& map, const TransducerArray& array,
                                   const std::vector<double>& tx_angles,
                                   const Params& params, int threads)
    : params_(params), element_x_(array.element_x()), angles_(tx_angles) {
  map.validate();
  if (params.nodes_x < 2 || params.nodes_z < 2) {
    throw ConfigError("travel-time tables need at least 2 nodes per axis");
  }
  if (!(params.sigma_steer > 0.0) || !(params.sigma_outside > 0.0)) {
    throw ConfigError("travel-time tables need positive reference slownesses");
  }
  const ReconGrid& g = map.grid;
  x0_ = g.x0;
  z0_ = g.z0;
  ddx_ = (g.x_max() - g.x0) / (params.nodes_x - 1);
  ddz_ = (g.z_max() - g.z0) / (params.nodes_z - 1);

  const std::int64_t nodes = static_cast<std::int64_t>(params.nodes_x) * params.nodes_z;
  auto node_pos = [&](std::int64_t n) -> Vec2 {
    const int u = static_cast<int>(n / params_.nodes_z);
    const int v = static_cast<int>(n % params_.nodes_z);
    return {x0_ + u * ddx_, z0_ + v * ddz_};
  };

  rx_corr_.assign(element_x_.size(), {});
  for (std::size_t e = 0; e < element_x_.size(); ++e) {
    auto& table = rx_corr_[e];
    table.resize(nodes);
    const Vec2 elem = {element_x_[e], 0.0};
    parallel_for(nodes, threads, [&](std::int64_t begin, std::int64_t end) {
      for (std::int64_t n = begin; n < end; ++n) {
        const Vec2 p = node_pos(n);
        const double traced = trace_time(p, elem, map, params_.sigma_outside);
        table[n] = traced - params_.sigma_steer * norm(p - elem);
      }
    });
  }

  tx_corr_.assign(angles_.size(), {});
  for (std::size_t a = 0; a < angles_.size(); ++a) {
    auto& table = tx_corr_[a];
    table.resize(nodes);
    const double angle = angles_[a];
    const double sin_a = std::sin(angle);
    const double cos_a = std::cos(angle);
    parallel_for(nodes, threads, [&](std::int64_t begin, std::int64_t end) {
      for (std::int64_t n = begin; n < end; ++n) {
        const Vec2 p = node_pos(n);
        const double xe = tx_entry_x(p, angle);
        const double lead = plane_wave_lead(xe, angle) * params_.sigma_steer;
        const double traced = trace_time({xe, 0.0}, p, map, params_.sigma_outside);
        const double homog = (p.x * sin_a + p.z * cos_a) * params_.sigma_steer;
        table[n] = lead + traced - homog;
      }
    });
  }
}

double TravelTimeTables::interp(const std::vector<double>& table, Vec2 p) const {
  const int nnx = params_.nodes_x;
  const int nnz = params_.nodes_z;
  double fx = (p.x - x0_) / ddx_;
  double fz = (p.z - z0_) / ddz_;
  fx = std::clamp(fx, 0.0, static_cast<double>(nnx - 1));
  fz = std::clamp(fz, 0.0, static_cast<double>(nnz - 1));
  const int u = std::min(static_cast<int>(fx), nnx - 2);
  const int v = std::min(static_cast<int>(fz), nnz - 2);
  const double ax = fx - u;
  const double az = fz - v;
  const double t00 = table[static_cast<std::int64_t>(u) * nnz + v];
  const double t01 = table[static_cast<std::int64_t>(u) * nnz + v + 1];
  const double t10 = table[static_cast<std::int64_t>(u + 1) * nnz + v];
  const double t11 = table[static_cast<std::int64_t>(u + 1) * nnz + v + 1];
  return (1.0 - ax) * ((1.0 - az) * t00 + az * t01) + ax * ((1.0 - az) * t10 + az * t11);
}

double TravelTimeTables::rx_time(int element, Vec2 p) const {
  const Vec2 elem = {element_x_[element], 0.0};
  return params_.sigma_steer * norm(p - elem) + interp(rx_corr_[element], p);
}

double TravelTimeTables::tx_time(int a, Vec2 p) const {
  const double angle = angles_[a];
  const double homog = (p.x * std::sin(angle) + p.z * std::cos(angle)) * params_.sigma_steer;
  return homog + interp(tx_corr_[a], p);
}

}  // namespace sosbeam
