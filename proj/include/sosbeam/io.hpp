////////////////////////////////////////////////////////////////////////////////
// Copyright 2026 the sosbeam project developers.
// SPDX-License-Identifier: Apache-2.0
//
// sosbeam: plane-wave ultrasound beamforming with local speed-of-sound maps
// File formats: CSV/PGM exports and binary RF, frame and measurement files.
////////////////////////////////////////////////////////////////////////////////

#pragma once

#include <string>
#include <vector>

#include "sosbeam/beamform.hpp"
#include "sosbeam/envelope.hpp"
#include "sosbeam/geometry.hpp"
#include "sosbeam/raytrace.hpp"
#include "sosbeam/rf_sim.hpp"
#include "sosbeam/tracking.hpp"

namespace sosbeam {

// Shortest decimal form that round-trips a double (C locale).
std::string format_double(double v);

// Grid-annotated CSV matrix: one header line with the grid fields, then one
// row per axial index (z), columns ordered by lateral index (x).
void write_csv_matrix(const std::string& path, const ImagingGrid& grid,
                      const std::vector<double>& values_z_fastest);
std::vector<double> read_csv_matrix(const std::string& path, ImagingGrid& grid);

// 8-bit binary PGM of dB values in [-dynamic_range, 0].
void write_pgm(const std::string& path, int nx, int nz,
               const std::vector<double>& db_z_fastest, double dynamic_range_db);

// RF channel data: header (channels, samples, fs, angle, f0) + little-endian
// float32 samples, channel-major.
void write_rf(const std::string& path, const RfChannelData& rf);
RfChannelData read_rf(const std::string& path);

// Beamformed frame: grid + angles header + float32 pixels, z-fastest.
void write_frame(const std::string& path, const BeamformedFrame& frame);
BeamformedFrame read_frame(const std::string& path);

// Measurement container: per-pair displacement maps with quality and masks.
struct MeasurementFile {
  ImagingGrid grid;
  std::vector<AnglePair> pairs;
  std::vector<DisplacementMap> maps;
};
void write_measurements(const std::string& path, const MeasurementFile& m);
MeasurementFile read_measurements(const std::string& path);

// Slowness maps travel as CSV in m/s on the recon grid (z rows, x columns).
void write_sos_csv(const std::string& path, const SlownessMap& map);
SlownessMap read_sos_csv(const std::string& path);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace sosbeam
