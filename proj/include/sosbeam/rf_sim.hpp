////////////////////////////////////////////////////////////////////////////////
// Copyright 2026 the sosbeam project developers.
// SPDX-License-Identifier: Apache-2.0
//
// sosbeam: plane-wave ultrasound beamforming with local speed-of-sound maps
// Synthetic plane-wave RF channel data from ray-integrated arrival times.
////////////////////////////////////////////////////////////////////////////////

#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "sosbeam/geometry.hpp"
#include "sosbeam/phantom.hpp"
#include "sosbeam/sparse.hpp"
#include "sosbeam/traveltime.hpp"

namespace sosbeam {

// Raw receive data of one plane-wave transmit. t = 0 corresponds to the
// transmitted wavefront crossing the array center; sample k of channel c
// is samples[c * num_samples + k] at time k / fs.
struct RfChannelData {
  double angle = 0.0;  // rad
  double fs = 0.0;     // Hz
  double f0 = 0.0;     // Hz
  int num_channels = 0;
  int num_samples = 0;
  std::vector<double> samples;  // channel-major; stored as float32 on disk

  double at(int channel, int k) const {
    return samples[static_cast<std::int64_t>(channel) * num_samples + k];
  }
  void validate() const;
};

// Gaussian envelope sigma (s) for a -6 dB fractional bandwidth.
double pulse_sigma_t(double f0, double frac_bandwidth);

// Gaussian-enveloped cosine burst, tabulated once and linearly interpolated.
class Pulse {
 public:
  Pulse(double f0, double frac_bandwidth, double fs, int oversample = 64);
  double operator()(double t) const;
  double support() const { return support_; }  // half width of the table (s)
  double sigma_t() const { return sigma_t_; }

 private:
  double sigma_t_;
  double support_;
  double dt_;
  std::vector<double> table_;
};

// Shares one set of travel-time tables over the phantom's true slowness map
// across all transmit angles.
class RfSynthesizer {
 public:
  RfSynthesizer(const Phantom& phantom, const TransducerArray& array,
                const AcquisitionSpec& acq, const std::vector<double>& angles,
                TravelTimeTables::Params table_params, int threads);

  // Number of samples needed to cover every arrival for angle index a.
  int required_samples(int a) const;

  // Synthesizes one plane wave. num_samples = 0 auto-sizes; an explicit
  // value smaller than required throws NumericError naming the requirement.
  RfChannelData synthesize(int a, int num_samples = 0) const;

 private:
  const TransducerArray& array_;
  AcquisitionSpec acq_;
  std::vector<double> angles_;
  std::vector<PointScatterer> scatterers_;
  Pulse pulse_;
  std::unique_ptr<TravelTimeTables> tables_;
  int threads_;
};

// Noiseless forward model of the differential measurements:
// dtau = L (sigma_true - sigma0), with optional additive Gaussian noise.
std::vector<double> synth_delays(const SparseRayMatrix& L, const SlownessMap& sigma_true,
                                 double sigma0, double noise_std = 0.0,
                                 std::mt19937_64* rng = nullptr, int threads = 0);

}  // namespace sosbeam
