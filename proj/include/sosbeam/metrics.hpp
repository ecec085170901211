////////////////////////////////////////////////////////////////////////////////
// Copyright 2026 the sosbeam project developers.
// SPDX-License-Identifier: Apache-2.0
//
// sosbeam: plane-wave ultrasound beamforming with local speed-of-sound maps
// Resolution and localization metrics on point-scatterer envelopes.
////////////////////////////////////////////////////////////////////////////////

#pragma once

#include <string>
#include <vector>

#include "sosbeam/envelope.hpp"
#include "sosbeam/phantom.hpp"

namespace sosbeam {

struct PeakDetection {
  Vec2 position;       // subpixel-refined
  double value = 0.0;  // refined peak magnitude
  bool flagged = false;
  std::string flag_reason;
};

// Envelope maximum inside a circular ROI around the expected position,
// refined by separable log-parabolic interpolation.
PeakDetection detect_peak(const EnvelopeImage& env, Vec2 true_pos, double roi_radius);

struct FwhmResult {
  double width = 0.0;  // m
  bool flagged = false;
};

// Full width at half maximum of the lateral profile through the peak,
// with linear interpolation between samples.
FwhmResult fwhm_lateral(const EnvelopeImage& env, const PeakDetection& peak);

struct ScattererReport {
  Vec2 true_pos;
  Vec2 peak_pos;
  double lateral_fwhm = 0.0;   // m
  double lateral_error = 0.0;  // signed, m
  double axial_error = 0.0;    // signed, m
  bool flagged = false;
};

std::vector<ScattererReport> evaluate_scatterers(const EnvelopeImage& env,
                                                 const std::vector<PointScatterer>& scatterers,
                                                 double roi_radius);

struct MetricSummary {
  double mean = 0.0;
  double stdev = 0.0;
  int n = 0;
};

MetricSummary summarize(const std::vector<double>& values);

// Metric triple (lateral FWHM, |lateral error|, |axial error|) over the
// non-flagged entries of a report set.
struct ReportSummary {
  MetricSummary fwhm;
  MetricSummary lateral_error;
  MetricSummary axial_error;
  int flagged = 0;
};

ReportSummary summarize_reports(const std::vector<ScattererReport>& reports);

// Scatterers in the shadow of the inclusion: deeper than its bottom edge and
// laterally within one radius of its center.
std::vector<int> below_inclusion_indices(const std::vector<PointScatterer>& scatterers,
                                         const CircleInclusion& inclusion);

std::vector<ScattererReport> select_reports(const std::vector<ScattererReport>& reports,
                                            const std::vector<int>& indices);

// Shared context of a beamform-and-evaluate run.
struct SweepContext {
  const TransducerArray* array = nullptr;
  AcquisitionSpec acq;
  ApodizationSpec apod;
  ImagingGrid grid;       // beamforming grid for the evaluation passes
  ReconGrid recon_grid;   // slowness map grid
  int table_nodes_x = 129;
  int table_nodes_z = 129;
  double roi_radius = 1.5e-3;
  int threads = 0;
};

struct SweepPointResult {
  std::string label;
  double c0 = 0.0;  // m/s for global points, 0 for named maps
  std::vector<ScattererReport> reports;
  EnvelopeImage envelope;  // compounded envelope of this pass
};

// Beamforms all frames of rf_set with one slowness map, compounds, and
// evaluates the scatterer metrics. Global-SoS points are the constant-map
// special case with the steering and outside slowness set to 1/c0.
SweepPointResult evaluate_beamforming(const std::vector<RfChannelData>& rf_set,
                                      const std::string& label, const SlownessMap& map,
                                      double sigma_steer, double sigma_outside,
                                      const std::vector<PointScatterer>& scatterers,
                                      const SweepContext& ctx);

// Global-SoS sweep plus named (adaptive / true) maps over one RF set.
std::vector<SweepPointResult> sweep_global_sos(
    const std::vector<RfChannelData>& rf_set, const std::vector<double>& c0_values,
    const std::vector<std::pair<std::string, SlownessMap>>& named_maps,
    const std::vector<PointScatterer>& scatterers, const SweepContext& ctx);

}  // namespace sosbeam
