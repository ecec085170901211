////////////////////////////////////////////////////////////////////////////////
// Copyright 2026 the sosbeam project developers.
// SPDX-License-Identifier: Apache-2.0
//
// sosbeam: plane-wave ultrasound beamforming with local speed-of-sound maps
// Straight-ray grid traversal and assembly of the path matrices P and L.
////////////////////////////////////////////////////////////////////////////////

#include "sosbeam/raytrace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sosbeam/errors.hpp"
#include "sosbeam/parallel.hpp"

namespace sosbeam {

namespace {

struct SegmentClip {
  double t0 = 0.0;
  double t1 = 1.0;
  bool hit = false;
};

// Liang-Barsky clip of a + t*d, t in [0,1], against the grid box.
SegmentClip clip_to_box(Vec2 a, Vec2 d, const ReconGrid& g) {
  SegmentClip c;
  double t0 = 0.0, t1 = 1.0;
  auto clip1 = [&](double p, double q) -> bool {
    if (p == 0.0) return q >= 0.0;
    const double r = q / p;
    if (p < 0.0) {
      if (r > t1) return false;
      if (r > t0) t0 = r;
    } else {
      if (r < t0) return false;
      if (r < t1) t1 = r;
    }
    return true;
  };
  const bool ok = clip1(-d.x, a.x - g.x0) && clip1(d.x, g.x_max() - a.x) &&
                  clip1(-d.z, a.z - g.z0) && clip1(d.z, g.z_max() - a.z);
  c.t0 = t0;
  c.t1 = t1;
  c.hit = ok && t0 <= t1;
  return c;
}

// Parametric cell traversal (Amanatides & Woo) of the clipped segment.
// Interval lengths telescope, so the emitted lengths sum to the clipped
// Euclidean length up to rounding. emit(flat_cell, length) is called once
// per crossed cell; zero-length corner intervals are skipped.
template <typename Emit>
void traverse(Vec2 a, Vec2 b, const ReconGrid& g, double& in_len, double& out_len,
              Emit&& emit) {
  const Vec2 d = b - a;
  const double total = norm(d);
  in_len = 0.0;
  out_len = 0.0;
  if (total == 0.0) return;
  const SegmentClip clip = clip_to_box(a, d, g);
  if (!clip.hit || clip.t1 <= clip.t0) {
    out_len = total;
    return;
  }
  const double t0 = clip.t0;
  const double t1 = clip.t1;
  in_len = (t1 - t0) * total;
  out_len = total - in_len;

  const Vec2 p0 = {a.x + t0 * d.x, a.z + t0 * d.z};
  int i = std::clamp(static_cast<int>(std::floor((p0.x - g.x0) / g.cell_w)), 0, g.nx - 1);
  int j = std::clamp(static_cast<int>(std::floor((p0.z - g.z0) / g.cell_h)), 0, g.nz - 1);

  constexpr double inf = std::numeric_limits<double>::infinity();
  const int step_i = d.x > 0.0 ? 1 : (d.x < 0.0 ? -1 : 0);
  const int step_j = d.z > 0.0 ? 1 : (d.z < 0.0 ? -1 : 0);
  const double dt_i = d.x != 0.0 ? g.cell_w / std::abs(d.x) : inf;
  const double dt_j = d.z != 0.0 ? g.cell_h / std::abs(d.z) : inf;
  double tmax_i = inf;
  double tmax_j = inf;
  if (step_i != 0) {
    const double boundary = g.x0 + (i + (step_i > 0 ? 1 : 0)) * g.cell_w;
    tmax_i = t0 + (boundary - p0.x) / d.x;
  }
  if (step_j != 0) {
    const double boundary = g.z0 + (j + (step_j > 0 ? 1 : 0)) * g.cell_h;
    tmax_j = t0 + (boundary - p0.z) / d.z;
  }

  double t_cur = t0;
  while (t_cur < t1) {
    const double t_next = std::min({tmax_i, tmax_j, t1});
    const double len = (t_next - t_cur) * total;
    if (len > 0.0) emit(g.flat_index(i, j), len);
    if (t_next >= t1) break;
    if (tmax_i <= tmax_j) {
      i += step_i;
      tmax_i += dt_i;
      if (i < 0 || i >= g.nx) break;
    } else {
      j += step_j;
      tmax_j += dt_j;
      if (j < 0 || j >= g.nz) break;
    }
    t_cur = t_next;
  }
}

}  // namespace

TraceResult trace_ray_clipped(Vec2 a, Vec2 b, const ReconGrid& grid) {
  TraceResult r;
  traverse(a, b, grid, r.in_grid_length, r.outside_length,
           [&](std::int64_t cell, double len) {
             r.cols.push_back(static_cast<std::int32_t>(cell));
             r.lens.push_back(len);
           });
  return r;
}

TraceResult trace_ray(Vec2 a, Vec2 b, const ReconGrid& grid) {
  if (!grid.contains(a) || !grid.contains(b)) {
    throw NumericError("trace_ray endpoint outside the grid bounding box");
  }
  return trace_ray_clipped(a, b, grid);
}

double trace_time(Vec2 a, Vec2 b, const SlownessMap& map, double sigma_outside) {
  double in_len = 0.0, out_len = 0.0;
  double time = 0.0;
  traverse(a, b, map.grid, in_len, out_len,
           [&](std::int64_t cell, double len) { time += len * map.sigma[cell]; });
  return time + out_len * sigma_outside;
}

TraceResult tx_path(Vec2 pixel, double angle, const ReconGrid& grid) {
  if (std::abs(angle) >= deg_to_rad(90.0)) {
    throw NumericError("plane-wave angle must be below 90 degrees");
  }
  const double xe = tx_entry_x(pixel, angle);
  if (xe < grid.x0 - 1e-12 || xe > grid.x_max() + 1e-12) {
    throw NumericError("transmit entry point outside the lateral grid extent");
  }
  return trace_ray_clipped({xe, 0.0}, pixel, grid);
}

TraceResult tx_path_clipped(Vec2 pixel, double angle, const ReconGrid& grid) {
  if (std::abs(angle) >= deg_to_rad(90.0)) {
    throw NumericError("plane-wave angle must be below 90 degrees");
  }
  return trace_ray_clipped({tx_entry_x(pixel, angle), 0.0}, pixel, grid);
}

TraceResult rx_path(Vec2 pixel, Vec2 endpoint, const ReconGrid& grid) {
  return trace_ray_clipped(pixel, endpoint, grid);
}

Vec2 rx_endpoint(Vec2 pixel, double rx_steer, const TransducerArray& array,
                 const ApodizationSpec& apod, RxEndpointRule rule) {
  const double center = aperture_center(pixel, rx_steer);
  if (rule == RxEndpointRule::fixed_angle) return {center, 0.0};
  const double half = aperture_half_width(pixel.z, apod.f_number);
  const double lo = std::max(center - half, array.x_min());
  const double hi = std::min(center + half, array.x_max());
  if (lo > hi) return {std::clamp(center, array.x_min(), array.x_max()), 0.0};
  return {0.5 * (lo + hi), 0.0};
}

PathMatrices build_P(const ImagingGrid& img, const ReconGrid& rec,
                     const TransducerArray& array, const std::vector<double>& angles,
                     int threads, std::int64_t memory_budget_bytes) {
  img.validate();
  rec.validate();
  if (!rec.covers(img)) throw ConfigError("recon grid does not cover the imaging grid");

  const std::int64_t npix = img.num_pixels();
  const std::int64_t rows_rx = static_cast<std::int64_t>(array.num_elements()) * npix;
  const std::int64_t rows_tx = static_cast<std::int64_t>(angles.size()) * npix;
  const std::int64_t avg_nnz = rec.nx + rec.nz;
  const std::int64_t estimate = (rows_rx + rows_tx) * (avg_nnz * 12 + 24);
  if (estimate > memory_budget_bytes) {
    throw NumericError("path matrix assembly would need about " +
                       std::to_string(estimate / (1 << 20)) + " MiB (budget " +
                       std::to_string(memory_budget_bytes / (1 << 20)) +
                       " MiB); use streamed delay tables instead");
  }

  PathMatrices out;

  // Receive paths: row (element * nx + ix) * nz + iz.
  {
    std::vector<TraceResult> rows(rows_rx);
    parallel_for(rows_rx, threads, [&](std::int64_t begin, std::int64_t end) {
      for (std::int64_t r = begin; r < end; ++r) {
        const int nc = static_cast<int>(r / npix);
        const std::int64_t p = r % npix;
        const int ix = static_cast<int>(p / img.nz);
        const int iz = static_cast<int>(p % img.nz);
        rows[r] = rx_path(img.pixel_position(ix, iz), array.element_position(nc), rec);
      }
    });
    SparseMatrixBuilder builder(rec.num_cells());
    for (auto& row : rows) {
      builder.append_row(row.cols, row.lens, row.in_grid_length, row.outside_length);
    }
    out.p_rx = builder.take();
    out.p_rx.grid_hash = rec.hash();
  }

  // Transmit paths, one matrix per angle: row ix * nz + iz.
  for (double angle : angles) {
    std::vector<TraceResult> rows(npix);
    parallel_for(npix, threads, [&](std::int64_t begin, std::int64_t end) {
      for (std::int64_t p = begin; p < end; ++p) {
        const int ix = static_cast<int>(p / img.nz);
        const int iz = static_cast<int>(p % img.nz);
        rows[p] = tx_path(img.pixel_position(ix, iz), angle, rec);
      }
    });
    SparseMatrixBuilder builder(rec.num_cells());
    for (auto& row : rows) {
      builder.append_row(row.cols, row.lens, row.in_grid_length, row.outside_length);
    }
    SparseRayMatrix m = builder.take();
    m.grid_hash = rec.hash();
    out.p_tx.push_back(std::move(m));
  }
  return out;
}

SparseRayMatrix build_L(const std::vector<AnglePair>& pairs, const std::vector<Vec2>& pixels,
                        const ReconGrid& rec, const DiffPathParams& params, int threads) {
  rec.validate();
  if (!params.array || !params.apod) throw ConfigError("build_L needs array and apodization");
  for (const auto& pair : pairs) {
    if (pair.i == pair.j) throw ConfigError("angle pair (i, i) has an all-zero path row");
    if (pair.i < 0 || pair.j < 0 ||
        pair.i >= static_cast<int>(params.sos_angles.size()) ||
        pair.j >= static_cast<int>(params.sos_angles.size())) {
      throw ConfigError("angle pair references an angle outside the SoS subset");
    }
  }

  const std::int64_t npix = static_cast<std::int64_t>(pixels.size());
  const std::int64_t nrows = static_cast<std::int64_t>(pairs.size()) * npix;
  SparseMatrixBuilder builder(rec.num_cells());

  struct RowScratch {
    std::vector<std::int32_t> cols;
    std::vector<double> vals;
    double euclid = 0.0;
    double outside = 0.0;
  };

  const std::int64_t block = 4096;
  std::vector<RowScratch> scratch(std::min(block, nrows));
  for (std::int64_t base = 0; base < nrows; base += block) {
    const std::int64_t count = std::min(block, nrows - base);
    parallel_for(count, threads, [&](std::int64_t begin, std::int64_t end) {
      for (std::int64_t k = begin; k < end; ++k) {
        const std::int64_t r = base + k;
        const AnglePair& pair = pairs[r / npix];
        const Vec2 pixel = pixels[r % npix];
        const double theta_i = params.sos_angles[pair.i];
        const double theta_j = params.sos_angles[pair.j];
        const double rx_i = 2.0 * pair.theta_psf - theta_i;
        const double rx_j = 2.0 * pair.theta_psf - theta_j;

        RowScratch& row = scratch[k];
        row.cols.clear();
        row.vals.clear();
        row.euclid = 0.0;
        row.outside = 0.0;
        auto add = [&](const TraceResult& tr, double sign) {
          for (std::size_t e = 0; e < tr.cols.size(); ++e) {
            row.cols.push_back(tr.cols[e]);
            row.vals.push_back(sign * tr.lens[e]);
          }
          row.euclid += sign * tr.in_grid_length;
          row.outside += sign * tr.outside_length;
        };
        add(tx_path_clipped(pixel, theta_j, rec), +1.0);
        add(rx_path(pixel, rx_endpoint(pixel, rx_j, *params.array, *params.apod, params.rule), rec),
            +1.0);
        add(tx_path_clipped(pixel, theta_i, rec), -1.0);
        add(rx_path(pixel, rx_endpoint(pixel, rx_i, *params.array, *params.apod, params.rule), rec),
            -1.0);
        merge_row_entries(row.cols, row.vals, 0.0);
      }
    });
    for (std::int64_t k = 0; k < count; ++k) {
      builder.append_row(scratch[k].cols, scratch[k].vals, scratch[k].euclid,
                         scratch[k].outside);
    }
  }
  SparseRayMatrix m = builder.take();
  m.grid_hash = rec.hash();
  return m;
}

}  // namespace sosbeam
