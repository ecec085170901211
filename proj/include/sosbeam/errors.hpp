////////////////////////////////////////////////////////////////////////////////
// Copyright 2026 the sosbeam project developers.
// SPDX-License-Identifier: Apache-2.0
//
// sosbeam: plane-wave ultrasound beamforming with local speed-of-sound maps
// Error types and process exit codes.
////////////////////////////////////////////////////////////////////////////////

#pragma once

#include <stdexcept>
#include <string>

namespace sosbeam {

// Exit codes used by the CLI. Stages throw, main() maps to codes.
enum ExitCode : int {
  exit_ok = 0,
  exit_config = 2,
  exit_io = 3,
  exit_numeric = 4,
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sosbeam
