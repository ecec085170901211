////////////////////////////////////////////////////////////////////////////////
// Copyright 2026 the sosbeam project developers.
// SPDX-License-Identifier: Apache-2.0
//
// sosbeam: plane-wave ultrasound beamforming with local speed-of-sound maps
// Transducer geometry, pixel/cell grids and acquisition parameters.
////////////////////////////////////////////////////////////////////////////////

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "sosbeam/errors.hpp"

namespace sosbeam {

constexpr double deg_to_rad(double deg) { return deg * M_PI / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / M_PI; }

struct Vec2 {
  double x = 0.0;
  double z = 0.0;
};

inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.z - b.z}; }
inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.z + b.z}; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.z); }

// Linear array in the z = 0 plane, centered on the lateral origin.
// Element n sits at x = (n - (N-1)/2) * pitch.
class TransducerArray {
 public:
  TransducerArray(int num_elements, double pitch);

  int num_elements() const { return num_elements_; }
  double pitch() const { return pitch_; }
  Vec2 element_position(int n) const;
  const std::vector<double>& element_x() const { return element_x_; }
  double x_min() const { return element_x_.front(); }
  double x_max() const { return element_x_.back(); }

 private:
  int num_elements_;
  double pitch_;
  std::vector<double> element_x_;
};

// Regular pixel grid. Pixel (ix, iz) sits at origin + (ix*dx, iz*dz);
// storage order is z-fastest: flat = ix*nz + iz.
struct ImagingGrid {
  int nx = 0;
  int nz = 0;
  double dx = 0.0;  // m
  double dz = 0.0;  // m
  double x0 = 0.0;  // m, position of pixel (0, 0)
  double z0 = 0.0;  // m

  void validate() const;
  std::int64_t num_pixels() const { return static_cast<std::int64_t>(nx) * nz; }
  Vec2 pixel_position(int ix, int iz) const;
  std::int64_t flat_index(int ix, int iz) const {
    return static_cast<std::int64_t>(ix) * nz + iz;
  }
  // Nearest pixel indices for a position; throws if out of range.
  void index_of(Vec2 p, int& ix, int& iz) const;
};

// Cell grid for slowness maps. Cell (i, j) spans
// [x0 + i*cell_w, x0 + (i+1)*cell_w] x [z0 + j*cell_h, z0 + (j+1)*cell_h];
// storage order is z-fastest: flat = i*nz + j.
struct ReconGrid {
  int nx = 0;
  int nz = 0;
  double cell_w = 0.0;  // m
  double cell_h = 0.0;  // m
  double x0 = 0.0;      // m, left edge
  double z0 = 0.0;      // m, top edge

  void validate() const;
  std::int64_t num_cells() const { return static_cast<std::int64_t>(nx) * nz; }
  double x_max() const { return x0 + nx * cell_w; }
  double z_max() const { return z0 + nz * cell_h; }
  Vec2 cell_center(int i, int j) const;
  std::int64_t flat_index(int i, int j) const {
    return static_cast<std::int64_t>(i) * nz + j;
  }
  bool contains(Vec2 p) const;
  // True when every pixel of `grid` lies inside this grid's bounding box.
  bool covers(const ImagingGrid& grid) const;
  // FNV-1a over the geometry fields; identifies cached matrices.
  std::uint64_t hash() const;
};

// Slowness values (s/m) on a ReconGrid, z-fastest.
struct SlownessMap {
  ReconGrid grid;
  std::vector<double> sigma;

  double at(int i, int j) const { return sigma[grid.flat_index(i, j)]; }
  void validate() const;
  static SlownessMap constant(const ReconGrid& grid, double sigma0);
};

struct AcquisitionSpec {
  double f0 = 5.0e6;              // Hz, center frequency
  double fs = 40.0e6;             // Hz, RF sampling rate
  double c0 = 1500.0;             // m/s, assumed global speed of sound
  double frac_bandwidth = 0.6;    // -6 dB fractional bandwidth of the pulse
  std::vector<double> tx_angles;  // rad, compounding set
  std::vector<double> sos_angles; // rad, subset used for SoS estimation

  double sigma0() const { return 1.0 / c0; }
  double wavelength() const { return c0 / f0; }
  void validate() const;
};

struct ApodizationSpec {
  enum class Window { hann, rect };

  double f_number = 1.0;
  Window window = Window::hann;
  double max_rx_angle = deg_to_rad(30.0);  // receive steering acceptance limit

  void validate() const;
};

// Lateral center of the dynamic receive aperture for a pixel, steered by
// rx_steer (0 = straight up).
inline double aperture_center(Vec2 pixel, double rx_steer) {
  return pixel.x + pixel.z * std::tan(rx_steer);
}

inline double aperture_half_width(double depth, double f_number) {
  return 0.5 * depth / f_number;
}

// Weight of one element for one pixel: window taper over the dynamic
// aperture, zero outside.
double aperture_weight(const ApodizationSpec& apod, double element_x, Vec2 pixel,
                       double rx_steer);

// Lateral position where the transmit ray through `pixel` for a plane wave
// at `angle` crosses the array plane z = 0.
inline double tx_entry_x(Vec2 pixel, double angle) {
  return pixel.x - pixel.z * std::tan(angle);
}

// Signed distance from the t=0 wavefront (through the array center) to the
// z = 0 entry point of the transmit ray. Multiplied by the steering slowness
// it is the transmit lead time of that ray.
inline double plane_wave_lead(double entry_x, double angle) {
  return entry_x * std::sin(angle);
}

}  // namespace sosbeam
