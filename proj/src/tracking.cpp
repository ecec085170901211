////////////////////////////////////////////////////////////////////////////////
// Copyright 2026 the sosbeam project developers.
// SPDX-License-Identifier: Apache-2.0
//
// sosbeam: plane-wave ultrasound beamforming with local speed-of-sound maps
// Axial apparent-displacement tracking between angled beamformed frames.
////////////////////////////////////////////////////////////////////////////////

#include "sosbeam/tracking.hpp"

#include <algorithm>
#include <cmath>

#include "sosbeam/errors.hpp"
#include "sosbeam/parallel.hpp"

namespace sosbeam {

void TrackingConfig::validate() const {
  if (window_ax < 3 || window_lat < 3) throw ConfigError("tracking window must be >= 3 per axis");
  if (search < 1) throw ConfigError("tracking search range must be >= 1");
  if (!(scale_factor > 0.0)) throw ConfigError("tracking scale factor must be positive");
  if (quality_threshold < 0.0 || quality_threshold > 1.0) {
    throw ConfigError("quality threshold must be in [0, 1]");
  }
}

AlignedApertures psf_aligned_apertures(double theta_i, double theta_j, double theta_psf,
                                       double max_rx_angle) {
  AlignedApertures a;
  a.rx_i = 2.0 * theta_psf - theta_i;
  a.rx_j = 2.0 * theta_psf - theta_j;
  a.ok = std::abs(a.rx_i) <= max_rx_angle && std::abs(a.rx_j) <= max_rx_angle;
  return a;
}

namespace {

// Subpixel offset of the correlation peak from three samples around it.
double subpixel_offset(double rm, double r0, double rp, TrackingConfig::Subpixel mode) {
  // A machine-exact peak means the frames align at an integer lag; the
  // neighbors carry no extra information then.
  if (1.0 - r0 < 1e-9) return 0.0;
  if (mode == TrackingConfig::Subpixel::cosine_fit) {
    const double ratio = (rm + rp) / (2.0 * r0);
    if (ratio > -1.0 && ratio < 1.0) {
      const double w = std::acos(ratio);
      if (w > 1e-6) {
        const double num = (rp - rm) / (2.0 * std::sin(w));
        return std::atan2(num, r0) / w;
      }
    }
    // fall through to the parabola when the cosine model is degenerate
  }
  const double denom = rm - 2.0 * r0 + rp;
  if (denom >= -1e-300) return 0.0;
  const double d = 0.5 * (rm - rp) / denom;
  return std::clamp(d, -0.5, 0.5);
}

}  // namespace

DisplacementMap ncc_displacement(const BeamformedFrame& frame_a, const BeamformedFrame& frame_b,
                                 const TrackingConfig& cfg, double sigma0, int threads) {
  cfg.validate();
  const ImagingGrid& g = frame_a.grid;
  if (g.nx != frame_b.grid.nx || g.nz != frame_b.grid.nz) {
    throw NumericError("tracked frames are on different grids");
  }

  DisplacementMap map;
  map.grid = g;
  map.dtau.assign(g.num_pixels(), 0.0);
  map.quality.assign(g.num_pixels(), 0.0);
  map.valid.assign(g.num_pixels(), 0);

  const int half_lat = cfg.window_lat / 2;
  const int half_ax = cfg.window_ax / 2;
  const int s = cfg.search;
  const double px_to_tau = 2.0 * sigma0 * g.dz;  // two-way time per axial pixel

  parallel_for(g.nx, threads, [&](std::int64_t begin, std::int64_t end) {
    std::vector<double> rho(2 * s + 1);
    for (std::int64_t ix = begin; ix < end; ++ix) {
      if (ix < half_lat || ix >= g.nx - half_lat) continue;  // edge pixels stay masked
      for (int iz = 0; iz < g.nz; ++iz) {
        const int z_lo = iz - half_ax;
        const int z_hi = z_lo + cfg.window_ax;  // exclusive
        if (z_lo - s < 0 || z_hi + s > g.nz) continue;

        // Zero-mean statistics of the fixed window in frame A.
        double mean_a = 0.0;
        for (int lx = -half_lat; lx <= half_lat; ++lx) {
          const double* col = frame_a.rf.data() + g.flat_index(static_cast<int>(ix) + lx, 0);
          for (int z = z_lo; z < z_hi; ++z) mean_a += col[z];
        }
        const int wn = cfg.window_lat * cfg.window_ax;
        mean_a /= wn;
        double var_a = 0.0;
        for (int lx = -half_lat; lx <= half_lat; ++lx) {
          const double* col = frame_a.rf.data() + g.flat_index(static_cast<int>(ix) + lx, 0);
          for (int z = z_lo; z < z_hi; ++z) {
            const double d = col[z] - mean_a;
            var_a += d * d;
          }
        }
        if (var_a <= 0.0) continue;

        int best = -1;
        double best_rho = -2.0;
        for (int d = -s; d <= s; ++d) {
          double mean_b = 0.0;
          for (int lx = -half_lat; lx <= half_lat; ++lx) {
            const double* col = frame_b.rf.data() + g.flat_index(static_cast<int>(ix) + lx, 0);
            for (int z = z_lo; z < z_hi; ++z) mean_b += col[z + d];
          }
          mean_b /= wn;
          double var_b = 0.0;
          double cross = 0.0;
          for (int lx = -half_lat; lx <= half_lat; ++lx) {
            const double* ca = frame_a.rf.data() + g.flat_index(static_cast<int>(ix) + lx, 0);
            const double* cb = frame_b.rf.data() + g.flat_index(static_cast<int>(ix) + lx, 0);
            for (int z = z_lo; z < z_hi; ++z) {
              const double da = ca[z] - mean_a;
              const double db = cb[z + d] - mean_b;
              cross += da * db;
              var_b += db * db;
            }
          }
          const double denom = std::sqrt(var_a * var_b);
          const double r = denom > 0.0 ? cross / denom : -1.0;
          rho[d + s] = r;
          if (r > best_rho) {
            best_rho = r;
            best = d;
          }
        }
        if (best == -1 || best == -s || best == s) continue;  // peak on the search edge

        const double offset = subpixel_offset(rho[best - 1 + s], rho[best + s],
                                              rho[best + 1 + s], cfg.subpixel);
        const std::int64_t flat = g.flat_index(static_cast<int>(ix), iz);
        map.dtau[flat] = (best + offset) * px_to_tau;
        map.quality[flat] = best_rho;
        map.valid[flat] = best_rho >= cfg.quality_threshold ? 1 : 0;
      }
    }
  });
  return map;
}

void project_and_scale(DisplacementMap& map, double theta_psf, const TrackingConfig& cfg) {
  const double c = std::cos(theta_psf);
  const double proj = cfg.projection == TrackingConfig::Projection::cosine ? c : 1.0 / c;
  const double factor = cfg.scale_factor * proj;
  for (double& v : map.dtau) v *= factor;
}

DisplacementMap decimate(const DisplacementMap& map, int factor_x, int factor_z,
                         double min_valid_fraction) {
  if (factor_x < 1 || factor_z < 1) throw ConfigError("decimation factors must be >= 1");
  const ImagingGrid& g = map.grid;
  DisplacementMap out;
  out.grid.nx = g.nx / factor_x;
  out.grid.nz = g.nz / factor_z;
  if (out.grid.nx < 1 || out.grid.nz < 1) throw ConfigError("decimation factors exceed the grid");
  out.grid.dx = g.dx * factor_x;
  out.grid.dz = g.dz * factor_z;
  out.grid.x0 = g.x0 + 0.5 * (factor_x - 1) * g.dx;
  out.grid.z0 = g.z0 + 0.5 * (factor_z - 1) * g.dz;
  out.dtau.assign(out.grid.num_pixels(), 0.0);
  out.quality.assign(out.grid.num_pixels(), 0.0);
  out.valid.assign(out.grid.num_pixels(), 0);

  for (int bx = 0; bx < out.grid.nx; ++bx) {
    for (int bz = 0; bz < out.grid.nz; ++bz) {
      double sum = 0.0, qsum = 0.0;
      int count = 0;
      for (int u = 0; u < factor_x; ++u) {
        for (int v = 0; v < factor_z; ++v) {
          const std::int64_t flat = g.flat_index(bx * factor_x + u, bz * factor_z + v);
          if (!map.valid[flat]) continue;
          sum += map.dtau[flat];
          qsum += map.quality[flat];
          ++count;
        }
      }
      const std::int64_t out_flat = out.grid.flat_index(bx, bz);
      if (count >= min_valid_fraction * factor_x * factor_z && count > 0) {
        out.dtau[out_flat] = sum / count;
        out.quality[out_flat] = qsum / count;
        out.valid[out_flat] = 1;
      }
    }
  }
  return out;
}

MeasurementVector build_measurement_vector(const std::vector<DisplacementMap>& per_pair) {
  if (per_pair.empty()) throw ConfigError("no displacement maps to stack");
  MeasurementVector mv;
  const ImagingGrid& g0 = per_pair.front().grid;
  for (const auto& map : per_pair) {
    if (map.grid.nx != g0.nx || map.grid.nz != g0.nz) {
      throw ConfigError("displacement maps are on different grids");
    }
    mv.dtau.insert(mv.dtau.end(), map.dtau.begin(), map.dtau.end());
    mv.quality.insert(mv.quality.end(), map.quality.begin(), map.quality.end());
    mv.valid.insert(mv.valid.end(), map.valid.begin(), map.valid.end());
  }
  return mv;
}

std::vector<Vec2> grid_pixel_positions(const ImagingGrid& grid) {
  std::vector<Vec2> out;
  out.reserve(grid.num_pixels());
  for (int ix = 0; ix < grid.nx; ++ix) {
    for (int iz = 0; iz < grid.nz; ++iz) {
      out.push_back(grid.pixel_position(ix, iz));
    }
  }
  return out;
}

}  // namespace sosbeam
