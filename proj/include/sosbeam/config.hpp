////////////////////////////////////////////////////////////////////////////////
// Copyright 2026 the sosbeam project developers.
// SPDX-License-Identifier: Apache-2.0
//
// sosbeam: plane-wave ultrasound beamforming with local speed-of-sound maps
// Pipeline configuration: defaults, JSON round-trip, derived objects.
////////////////////////////////////////////////////////////////////////////////

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sosbeam/geometry.hpp"
#include "sosbeam/phantom.hpp"
#include "sosbeam/raytrace.hpp"
#include "sosbeam/recon.hpp"
#include "sosbeam/tracking.hpp"

namespace sosbeam {

struct ArrayConfig {
  int num_elements = 128;
  double pitch = 0.3e-3;
};

struct MeasurementConfig {
  int decimate_lateral = 4;
  int decimate_axial = 16;
  double min_valid_fraction = 0.3;
};

struct ReconConfig {
  int nx = 64;
  int nz = 64;
  double lambda = 6.5e-2;
  double kappa_h = 1.0;
  double kappa_v = 0.5;
  double kappa_d = 0.75;
  SolveOptions solve;
  bool cache_matrices = false;
};

struct SimulationConfig {
  int table_nodes_x = 129;
  int table_nodes_z = 129;
  double noise_std = 0.0;  // s, additive noise on synthetic delays
};

struct SweepSpec {
  double c_min = 1490.0;
  double c_max = 1550.0;
  double step = 5.0;

  std::vector<double> values() const;
};

struct MetricsConfig {
  double roi_radius = 1.5e-3;
  SweepSpec sweep;
  bool evaluate_true_map = true;
};

// Parameters of the standalone `beamform` subcommand.
struct BeamformCmd {
  std::string pass = "tracking";  // "tracking" | "display"
  std::string source = "global";  // "global" | "adaptive" | "true" | "c0:<m/s>"
  std::string label;              // output subdirectory for display passes
};

struct OutputConfig {
  double dynamic_range_db = 50.0;
  bool export_pgm = true;
};

// One planned tracked combination: the angle pair plus which PSF-aligned
// frame set it reads.
struct PlannedPair {
  AnglePair pair;
  int psf_idx = 0;
};

struct Config {
  ArrayConfig array;
  AcquisitionSpec acq;
  ApodizationSpec apod;
  ImagingGrid display_grid;
  ImagingGrid tracking_grid;
  ReconGrid recon_grid;
  PhantomConfig phantom;
  TrackingConfig tracking;
  MeasurementConfig measurement;
  ReconConfig recon;
  SimulationConfig sim;
  MetricsConfig metrics;
  BeamformCmd beamform;
  OutputConfig output;
  std::uint64_t seed = 20260810;
  int threads = 0;

  static Config defaults();
  void validate() const;

  TransducerArray make_array() const { return {array.num_elements, array.pitch}; }
  // Tracked pairs: symmetric (-theta, +theta) plus adjacent angles, each
  // assigned the PSF angle nearest its transmit-angle mean. Pairs whose
  // aligned receive steering exceeds the acceptance limit are dropped.
  std::vector<PlannedPair> make_pairs() const;
  // Union of compounding and SoS-estimation angles (sorted, unique).
  std::vector<double> all_angles() const;

  std::string to_json_text() const;
  static Config from_json_text(const std::string& text);
  static Config load(const std::string& path);  // empty path -> defaults
};

// Phantom (de)serialization, including the drawn scatterers, so that
// downstream stages are pure functions of the file.
std::string phantom_to_json_text(const Phantom& phantom);
Phantom phantom_from_json_text(const std::string& text);

}  // namespace sosbeam
