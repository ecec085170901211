////////////////////////////////////////////////////////////////////////////////
// Copyright 2026 the sosbeam project developers.
// SPDX-License-Identifier: Apache-2.0
//
// sosbeam: plane-wave ultrasound beamforming with local speed-of-sound maps
// Resolution and localization metrics on point-scatterer envelopes.
////////////////////////////////////////////////////////////////////////////////

#include "sosbeam/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "sosbeam/errors.hpp"

namespace sosbeam {

namespace {

// Vertex offset of a parabola through log-values at -1, 0, +1. Returns 0 for
// a flat top (peak exactly on the node). The fit is exact for Gaussians.
bool log_parabola(double vm, double v0, double vp, double& offset, double& peak_log) {
  const double tiny = 1e-300;
  const double lm = std::log(std::max(vm, tiny));
  const double l0 = std::log(std::max(v0, tiny));
  const double lp = std::log(std::max(vp, tiny));
  const double denom = lm - 2.0 * l0 + lp;
  if (denom >= -1e-300) {
    offset = 0.0;
    peak_log = l0;
    return true;
  }
  offset = 0.5 * (lm - lp) / denom;
  if (offset < -0.5 || offset > 0.5) return false;
  peak_log = l0 - 0.25 * (lm - lp) * offset;
  return true;
}

// Bilinear envelope lookup; clamps to the grid border.
double env_bilinear(const EnvelopeImage& env, double fx, double fz) {
  const ImagingGrid& g = env.grid;
  fx = std::clamp(fx, 0.0, static_cast<double>(g.nx - 1));
  fz = std::clamp(fz, 0.0, static_cast<double>(g.nz - 1));
  const int ix = std::min(static_cast<int>(fx), g.nx - 2 >= 0 ? g.nx - 2 : 0);
  const int iz = std::min(static_cast<int>(fz), g.nz - 2 >= 0 ? g.nz - 2 : 0);
  const double ax = fx - ix;
  const double az = fz - iz;
  const double v00 = env.at(ix, iz);
  const double v01 = env.at(ix, std::min(iz + 1, g.nz - 1));
  const double v10 = env.at(std::min(ix + 1, g.nx - 1), iz);
  const double v11 = env.at(std::min(ix + 1, g.nx - 1), std::min(iz + 1, g.nz - 1));
  return (1 - ax) * ((1 - az) * v00 + az * v01) + ax * ((1 - az) * v10 + az * v11);
}

}  // namespace

PeakDetection detect_peak(const EnvelopeImage& env, Vec2 true_pos, double roi_radius) {
  const ImagingGrid& g = env.grid;
  PeakDetection det;

  const int cx = static_cast<int>(std::lround((true_pos.x - g.x0) / g.dx));
  const int cz = static_cast<int>(std::lround((true_pos.z - g.z0) / g.dz));
  const int rx = static_cast<int>(std::ceil(roi_radius / g.dx));
  const int rz = static_cast<int>(std::ceil(roi_radius / g.dz));
  if (cx - rx < 0 || cx + rx >= g.nx || cz - rz < 0 || cz + rz >= g.nz) {
    throw NumericError("peak ROI extends outside the image");
  }

  int best_x = -1, best_z = -1;
  double best = -1.0, lo = 1e300;
  for (int ix = cx - rx; ix <= cx + rx; ++ix) {
    for (int iz = cz - rz; iz <= cz + rz; ++iz) {
      const double ddx = (ix - cx) * g.dx;
      const double ddz = (iz - cz) * g.dz;
      if (ddx * ddx + ddz * ddz > roi_radius * roi_radius) continue;
      const double v = env.at(ix, iz);
      lo = std::min(lo, v);
      if (v > best) {
        best = v;
        best_x = ix;
        best_z = iz;
      }
    }
  }

  if (best_x < 0 || best <= lo) {
    det.flagged = true;
    det.flag_reason = "flat ROI";
    det.position = true_pos;
    det.value = best;
    return det;
  }

  // Peak on the ROI rim usually means the true maximum sits beyond it.
  const double edge_x = std::abs(best_x - cx) * g.dx;
  const double edge_z = std::abs(best_z - cz) * g.dz;
  if (std::sqrt(edge_x * edge_x + edge_z * edge_z) > roi_radius - std::max(g.dx, g.dz)) {
    det.flagged = true;
    det.flag_reason = "peak on ROI boundary";
  }

  double off_x = 0.0, off_z = 0.0, lx = 0.0, lz = 0.0;
  bool ok = best_x > 0 && best_x + 1 < g.nx &&
            log_parabola(env.at(best_x - 1, best_z), env.at(best_x, best_z),
                         env.at(best_x + 1, best_z), off_x, lx);
  ok = ok && best_z > 0 && best_z + 1 < g.nz &&
       log_parabola(env.at(best_x, best_z - 1), env.at(best_x, best_z),
                    env.at(best_x, best_z + 1), off_z, lz);
  if (!ok) {
    det.flagged = true;
    if (det.flag_reason.empty()) det.flag_reason = "subpixel refinement failed";
    off_x = 0.0;
    off_z = 0.0;
  }
  det.position = {g.x0 + (best_x + off_x) * g.dx, g.z0 + (best_z + off_z) * g.dz};
  // Separable refinement: combine the two 1D vertex gains over the node value.
  const double l0 = std::log(std::max(env.at(best_x, best_z), 1e-300));
  det.value = std::exp(l0 + (lx - l0) + (lz - l0));
  return det;
}

FwhmResult fwhm_lateral(const EnvelopeImage& env, const PeakDetection& peak) {
  const ImagingGrid& g = env.grid;
  FwhmResult fwhm;
  const double fz = (peak.position.z - g.z0) / g.dz;
  const double fx_peak = (peak.position.x - g.x0) / g.dx;

  // Lateral profile through the peak depth.
  std::vector<double> profile(g.nx);
  for (int ix = 0; ix < g.nx; ++ix) profile[ix] = env_bilinear(env, ix, fz);

  const double vmax = std::max(peak.value, env_bilinear(env, fx_peak, fz));
  const double half = 0.5 * vmax;
  const int center = std::clamp(static_cast<int>(std::lround(fx_peak)), 0, g.nx - 1);

  double left = 0.0, right = 0.0;
  bool found_left = false, found_right = false;
  for (int ix = center; ix > 0; --ix) {
    if (profile[ix - 1] < half && profile[ix] >= half) {
      const double t = (half - profile[ix - 1]) / (profile[ix] - profile[ix - 1]);
      left = g.x0 + (ix - 1 + t) * g.dx;
      found_left = true;
      break;
    }
  }
  for (int ix = center; ix + 1 < g.nx; ++ix) {
    if (profile[ix] >= half && profile[ix + 1] < half) {
      const double t = (profile[ix] - half) / (profile[ix] - profile[ix + 1]);
      right = g.x0 + (ix + t) * g.dx;
      found_right = true;
      break;
    }
  }
  if (!found_left || !found_right) {
    fwhm.flagged = true;
    return fwhm;
  }
  fwhm.width = right - left;
  return fwhm;
}

std::vector<ScattererReport> evaluate_scatterers(const EnvelopeImage& env,
                                                 const std::vector<PointScatterer>& scatterers,
                                                 double roi_radius) {
  std::vector<ScattererReport> reports;
  reports.reserve(scatterers.size());
  for (const auto& s : scatterers) {
    ScattererReport rep;
    rep.true_pos = s.pos;
    const PeakDetection det = detect_peak(env, s.pos, roi_radius);
    rep.peak_pos = det.position;
    rep.lateral_error = det.position.x - s.pos.x;
    rep.axial_error = det.position.z - s.pos.z;
    const FwhmResult fwhm = fwhm_lateral(env, det);
    rep.lateral_fwhm = fwhm.width;
    rep.flagged = det.flagged || fwhm.flagged;
    reports.push_back(rep);
  }
  return reports;
}

MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  s.n = static_cast<int>(values.size());
  if (s.n == 0) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / s.n;
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.stdev = s.n > 1 ? std::sqrt(var / (s.n - 1)) : 0.0;
  return s;
}

ReportSummary summarize_reports(const std::vector<ScattererReport>& reports) {
  std::vector<double> fwhm, lat, ax;
  ReportSummary out;
  for (const auto& r : reports) {
    if (r.flagged) {
      out.flagged++;
      continue;
    }
    fwhm.push_back(r.lateral_fwhm);
    lat.push_back(std::abs(r.lateral_error));
    ax.push_back(std::abs(r.axial_error));
  }
  out.fwhm = summarize(fwhm);
  out.lateral_error = summarize(lat);
  out.axial_error = summarize(ax);
  return out;
}

std::vector<int> below_inclusion_indices(const std::vector<PointScatterer>& scatterers,
                                         const CircleInclusion& inclusion) {
  std::vector<int> idx;
  for (std::size_t k = 0; k < scatterers.size(); ++k) {
    const Vec2 p = scatterers[k].pos;
    if (p.z > inclusion.center.z + inclusion.radius &&
        std::abs(p.x - inclusion.center.x) <= inclusion.radius) {
      idx.push_back(static_cast<int>(k));
    }
  }
  return idx;
}

std::vector<ScattererReport> select_reports(const std::vector<ScattererReport>& reports,
                                            const std::vector<int>& indices) {
  std::vector<ScattererReport> out;
  for (int k : indices) out.push_back(reports[k]);
  return out;
}

SweepPointResult evaluate_beamforming(const std::vector<RfChannelData>& rf_set,
                                      const std::string& label, const SlownessMap& map,
                                      double sigma_steer, double sigma_outside,
                                      const std::vector<PointScatterer>& scatterers,
                                      const SweepContext& ctx) {
  if (!ctx.array) throw ConfigError("sweep context needs a transducer array");
  if (rf_set.empty()) throw ConfigError("sweep needs at least one RF frame");

  std::vector<double> angles;
  angles.reserve(rf_set.size());
  for (const auto& rf : rf_set) angles.push_back(rf.angle);

  TravelTimeTables::Params nodes;
  nodes.nodes_x = ctx.table_nodes_x;
  nodes.nodes_z = ctx.table_nodes_z;
  const DelayCalculator calc(map, *ctx.array, angles, sigma_steer, sigma_outside, nodes,
                             ctx.threads);
  std::vector<BeamformedFrame> frames;
  frames.reserve(rf_set.size());
  for (std::size_t a = 0; a < rf_set.size(); ++a) {
    frames.push_back(das_streamed(rf_set[a], calc, static_cast<int>(a), ctx.grid, ctx.apod,
                                  *ctx.array, 0.0, ctx.threads));
  }
  SweepPointResult point;
  point.label = label;
  point.envelope = envelope(compound(frames));
  point.reports = evaluate_scatterers(point.envelope, scatterers, ctx.roi_radius);
  return point;
}

std::vector<SweepPointResult> sweep_global_sos(
    const std::vector<RfChannelData>& rf_set, const std::vector<double>& c0_values,
    const std::vector<std::pair<std::string, SlownessMap>>& named_maps,
    const std::vector<PointScatterer>& scatterers, const SweepContext& ctx) {
  std::vector<SweepPointResult> out;
  for (double c0 : c0_values) {
    const SlownessMap map = SlownessMap::constant(ctx.recon_grid, 1.0 / c0);
    char label[32];
    std::snprintf(label, sizeof(label), "c0_%04d", static_cast<int>(std::lround(c0)));
    SweepPointResult point =
        evaluate_beamforming(rf_set, label, map, 1.0 / c0, 1.0 / c0, scatterers, ctx);
    point.c0 = c0;
    out.push_back(std::move(point));
  }
  for (const auto& [label, map] : named_maps) {
    out.push_back(evaluate_beamforming(rf_set, label, map, ctx.acq.sigma0(), ctx.acq.sigma0(),
                                       scatterers, ctx));
  }
  return out;
}

}  // namespace sosbeam
