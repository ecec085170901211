////////////////////////////////////////////////////////////////////////////////
// Copyright 2026 the sosbeam project developers.
// SPDX-License-Identifier: Apache-2.0
//
// sosbeam: plane-wave ultrasound beamforming with local speed-of-sound maps
// Transducer geometry, pixel/cell grids and acquisition parameters.
////////////////////////////////////////////////////////////////////////////////

#include "sosbeam/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sosbeam {

TransducerArray::TransducerArray(int num_elements, double pitch)
    : num_elements_(num_elements), pitch_(pitch) {
  if (num_elements < 2) throw ConfigError("transducer array needs at least 2 elements");
  if (!(pitch > 0.0)) throw ConfigError("transducer pitch must be positive");
  element_x_.resize(num_elements);
  const double center = 0.5 * (num_elements - 1);
  for (int n = 0; n < num_elements; ++n) {
    element_x_[n] = (n - center) * pitch;
  }
}

Vec2 TransducerArray::element_position(int n) const {
  if (n < 0 || n >= num_elements_) {
    throw std::out_of_range("element index " + std::to_string(n) + " out of range");
  }
  return {element_x_[n], 0.0};
}

void ImagingGrid::validate() const {
  if (nx < 1 || nz < 1) throw ConfigError("imaging grid counts must be >= 1");
  if (!(dx > 0.0) || !(dz > 0.0)) throw ConfigError("imaging grid pitches must be positive");
  if (z0 < 0.0) throw ConfigError("imaging grid must lie at z >= 0");
}

Vec2 ImagingGrid::pixel_position(int ix, int iz) const {
  if (ix < 0 || ix >= nx || iz < 0 || iz >= nz) {
    throw std::out_of_range("pixel index out of range");
  }
  return {x0 + ix * dx, z0 + iz * dz};
}

void ImagingGrid::index_of(Vec2 p, int& ix, int& iz) const {
  ix = static_cast<int>(std::lround((p.x - x0) / dx));
  iz = static_cast<int>(std::lround((p.z - z0) / dz));
  if (ix < 0 || ix >= nx || iz < 0 || iz >= nz) {
    throw std::out_of_range("position outside imaging grid");
  }
}

void ReconGrid::validate() const {
  if (nx < 1 || nz < 1) throw ConfigError("recon grid counts must be >= 1");
  if (!(cell_w > 0.0) || !(cell_h > 0.0)) throw ConfigError("recon cell size must be positive");
  if (z0 < 0.0) throw ConfigError("recon grid must lie at z >= 0");
}

Vec2 ReconGrid::cell_center(int i, int j) const {
  return {x0 + (i + 0.5) * cell_w, z0 + (j + 0.5) * cell_h};
}

bool ReconGrid::contains(Vec2 p) const {
  return p.x >= x0 && p.x <= x_max() && p.z >= z0 && p.z <= z_max();
}

bool ReconGrid::covers(const ImagingGrid& grid) const {
  const double gx1 = grid.x0 + (grid.nx - 1) * grid.dx;
  const double gz1 = grid.z0 + (grid.nz - 1) * grid.dz;
  const double tol = 1e-12;
  return grid.x0 >= x0 - tol && gx1 <= x_max() + tol && grid.z0 >= z0 - tol &&
         gz1 <= z_max() + tol;
}

std::uint64_t ReconGrid::hash() const {
  const double fields[6] = {static_cast<double>(nx), static_cast<double>(nz),
                            cell_w, cell_h, x0, z0};
  std::uint64_t h = 1469598103934665603ull;
  const auto* bytes = reinterpret_cast<const unsigned char*>(fields);
  for (std::size_t k = 0; k < sizeof(fields); ++k) {
    h ^= bytes[k];
    h *= 1099511628211ull;
  }
  return h;
}

void SlownessMap::validate() const {
  grid.validate();
  if (static_cast<std::int64_t>(sigma.size()) != grid.num_cells()) {
    throw ConfigError("slowness map size does not match its grid");
  }
  for (double s : sigma) {
    if (!std::isfinite(s) || s <= 0.0) throw NumericError("non-finite or non-positive slowness");
  }
}

SlownessMap SlownessMap::constant(const ReconGrid& grid, double sigma0) {
  SlownessMap map;
  map.grid = grid;
  map.sigma.assign(grid.num_cells(), sigma0);
  return map;
}

void AcquisitionSpec::validate() const {
  if (!(f0 > 0.0)) throw ConfigError("center frequency must be positive");
  if (fs < 4.0 * f0) throw ConfigError("sampling rate must be at least 4x the center frequency");
  if (c0 < 1000.0 || c0 > 2000.0) throw ConfigError("global sound speed outside [1000, 2000] m/s");
  if (!(frac_bandwidth > 0.0) || frac_bandwidth >= 2.0) {
    throw ConfigError("fractional bandwidth must be in (0, 2)");
  }
  const double limit = deg_to_rad(25.0) + 1e-9;
  for (double a : tx_angles) {
    if (std::abs(a) > limit) throw ConfigError("transmit angle beyond +-25 degrees");
  }
  for (double a : sos_angles) {
    if (std::abs(a) > limit) throw ConfigError("SoS-estimation angle beyond +-25 degrees");
  }
}

void ApodizationSpec::validate() const {
  if (!(f_number > 0.0)) throw ConfigError("f-number must be positive");
  if (!(max_rx_angle > 0.0)) throw ConfigError("receive acceptance angle must be positive");
}

double aperture_weight(const ApodizationSpec& apod, double element_x, Vec2 pixel,
                       double rx_steer) {
  const double center = aperture_center(pixel, rx_steer);
  const double half = aperture_half_width(pixel.z, apod.f_number);
  if (half <= 0.0) return 0.0;
  const double u = (element_x - center) / half;
  if (u < -1.0 || u > 1.0) return 0.0;
  switch (apod.window) {
    case ApodizationSpec::Window::rect:
      return 1.0;
    case ApodizationSpec::Window::hann:
    default:
      return 0.5 * (1.0 + std::cos(M_PI * u));
  }
}

}  // namespace sosbeam
