////////////////////////////////////////////////////////////////////////////////
// Copyright 2026 the sosbeam project developers.
// SPDX-License-Identifier: Apache-2.0
//
// sosbeam: plane-wave ultrasound beamforming with local speed-of-sound maps
// File-coupled pipeline stages shared by the CLI and the test suites.
////////////////////////////////////////////////////////////////////////////////

#pragma once

#include <string>
#include <vector>

#include "sosbeam/config.hpp"
#include "sosbeam/metrics.hpp"
#include "sosbeam/rf_sim.hpp"

namespace sosbeam {

// Each stage reads its inputs from `out` and persists its artifacts there,
// so every subcommand is re-runnable in isolation.
void run_phantom(const Config& cfg, const std::string& out, bool verbose = false);
void run_simulate(const Config& cfg, const std::string& out, bool verbose = false);
void run_beamform(const Config& cfg, const std::string& out, bool verbose = false);
void run_track(const Config& cfg, const std::string& out, bool verbose = false);
void run_reconstruct(const Config& cfg, const std::string& out, bool verbose = false);
void run_evaluate(const Config& cfg, const std::string& out, bool verbose = false);
void run_pipeline(const Config& cfg, const std::string& out, bool verbose = false);

// Helpers shared with the test suites.
std::string angle_tag(double angle_rad);  // e.g. -12 deg -> "m12000"
std::string rf_path(const std::string& out, double angle_rad);
std::vector<RfChannelData> load_rf_set(const std::string& out, const std::vector<double>& angles);
Phantom load_phantom(const std::string& out);
SweepContext make_sweep_context(const Config& cfg, const TransducerArray& array);

}  // namespace sosbeam
