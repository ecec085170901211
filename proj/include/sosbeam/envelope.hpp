////////////////////////////////////////////////////////////////////////////////
// Copyright 2026 the sosbeam project developers.
// SPDX-License-Identifier: Apache-2.0
//
// sosbeam: plane-wave ultrasound beamforming with local speed-of-sound maps
// Envelope detection via the analytic signal, and log compression.
////////////////////////////////////////////////////////////////////////////////

#pragma once

#include <vector>

#include "sosbeam/beamform.hpp"
#include "sosbeam/geometry.hpp"

namespace sosbeam {

struct EnvelopeImage {
  ImagingGrid grid;
  std::vector<double> mag;  // >= 0, z-fastest

  double at(int ix, int iz) const { return mag[grid.flat_index(ix, iz)]; }
};

// Per axial line: magnitude of the analytic signal (one-sided spectrum).
// Requires nz >= 8.
EnvelopeImage envelope(const BeamformedFrame& frame);

// 20*log10(mag/max), clamped to [-dynamic_range_db, 0]. Throws NumericError
// on an all-zero envelope.
std::vector<double> log_compress(const EnvelopeImage& env, double dynamic_range_db);

}  // namespace sosbeam
