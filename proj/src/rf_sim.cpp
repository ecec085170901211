////////////////////////////////////////////////////////////////////////////////
// Copyright 2026 the sosbeam project developers.
// SPDX-License-Identifier: Apache-2.0
//
// sosbeam: plane-wave ultrasound beamforming with local speed-of-sound maps
// Synthetic plane-wave RF channel data from ray-integrated arrival times.
////////////////////////////////////////////////////////////////////////////////

#include "sosbeam/rf_sim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sosbeam/errors.hpp"
#include "sosbeam/parallel.hpp"

namespace sosbeam {

void RfChannelData::validate() const {
  if (num_channels < 1 || num_samples < 1) throw NumericError("empty RF data");
  if (samples.size() != static_cast<std::size_t>(num_channels) * num_samples) {
    throw NumericError("RF sample buffer size mismatch");
  }
  for (double s : samples) {
    if (!std::isfinite(s)) throw NumericError("non-finite RF sample");
  }
}

double pulse_sigma_t(double f0, double frac_bandwidth) {
  // Gaussian spectrum exp(-2 pi^2 sigma_t^2 (f - f0)^2) down to -6 dB
  // amplitude at f0 +- bw*f0/2.
  const double half_width = 0.5 * frac_bandwidth * f0;
  const double drop = std::log(std::pow(10.0, 6.0 / 20.0));
  return std::sqrt(0.5 * drop) / (M_PI * half_width);
}

Pulse::Pulse(double f0, double frac_bandwidth, double fs, int oversample) {
  sigma_t_ = pulse_sigma_t(f0, frac_bandwidth);
  support_ = 4.5 * sigma_t_;
  dt_ = 1.0 / (fs * oversample);
  const std::int64_t half = static_cast<std::int64_t>(std::ceil(support_ / dt_));
  support_ = half * dt_;
  table_.resize(2 * half + 1);
  for (std::int64_t k = 0; k <= 2 * half; ++k) {
    const double t = (k - half) * dt_;
    table_[k] = std::exp(-0.5 * t * t / (sigma_t_ * sigma_t_)) * std::cos(2.0 * M_PI * f0 * t);
  }
}

double Pulse::operator()(double t) const {
  const double u = (t + support_) / dt_;
  if (u < 0.0 || u >= static_cast<double>(table_.size() - 1)) return 0.0;
  const std::int64_t k = static_cast<std::int64_t>(u);
  const double frac = u - k;
  return (1.0 - frac) * table_[k] + frac * table_[k + 1];
}

RfSynthesizer::RfSynthesizer(const Phantom& phantom, const TransducerArray& array,
                             const AcquisitionSpec& acq, const std::vector<double>& angles,
                             TravelTimeTables::Params table_params, int threads)
    : array_(array),
      acq_(acq),
      angles_(angles),
      scatterers_(phantom.all_scatterers()),
      pulse_(acq.f0, acq.frac_bandwidth, acq.fs),
      threads_(threads) {
  acq_.validate();
  if (table_params.sigma_steer <= 0.0) table_params.sigma_steer = acq.sigma0();
  if (table_params.sigma_outside <= 0.0) table_params.sigma_outside = acq.sigma0();
  for (const auto& s : scatterers_) {
    if (!phantom.true_map.grid.contains(s.pos)) {
      throw ConfigError("scatterer outside the phantom medium grid");
    }
  }
  tables_ = std::make_unique<TravelTimeTables>(phantom.true_map, array, angles_,
                                               table_params, threads);
}

int RfSynthesizer::required_samples(int a) const {
  double t_max = 0.0;
  for (const auto& s : scatterers_) {
    const double tx = tables_->tx_time(a, s.pos);
    // Latest receive time over the aperture comes from the farthest element.
    const double rx_lo = tables_->rx_time(0, s.pos);
    const double rx_hi = tables_->rx_time(array_.num_elements() - 1, s.pos);
    t_max = std::max(t_max, tx + std::max(rx_lo, rx_hi));
  }
  return static_cast<int>(std::ceil((t_max + pulse_.support()) * acq_.fs)) + 2;
}

RfChannelData RfSynthesizer::synthesize(int a, int num_samples) const {
  const int needed = required_samples(a);
  if (num_samples == 0) {
    num_samples = needed;
  } else if (num_samples < needed) {
    throw NumericError("RF sampling window too short: need " + std::to_string(needed) +
                       " samples, got " + std::to_string(num_samples));
  }

  RfChannelData rf;
  rf.angle = angles_[a];
  rf.fs = acq_.fs;
  rf.f0 = acq_.f0;
  rf.num_channels = array_.num_elements();
  rf.num_samples = num_samples;
  rf.samples.assign(static_cast<std::size_t>(rf.num_channels) * num_samples, 0.0);

  // Transmit times are shared by all channels.
  std::vector<double> tx_times(scatterers_.size());
  for (std::size_t s = 0; s < scatterers_.size(); ++s) {
    tx_times[s] = tables_->tx_time(a, scatterers_[s].pos);
  }

  // One channel per worker keeps accumulation race-free and deterministic.
  parallel_for(rf.num_channels, threads_, [&](std::int64_t begin, std::int64_t end) {
    std::vector<double> line(num_samples);
    for (std::int64_t c = begin; c < end; ++c) {
      std::fill(line.begin(), line.end(), 0.0);
      for (std::size_t s = 0; s < scatterers_.size(); ++s) {
        const double t_arr = tx_times[s] + tables_->rx_time(static_cast<int>(c), scatterers_[s].pos);
        const double r = scatterers_[s].reflectivity;
        const int k0 = std::max(0, static_cast<int>(std::ceil((t_arr - pulse_.support()) * acq_.fs)));
        const int k1 = std::min(num_samples - 1,
                                static_cast<int>(std::floor((t_arr + pulse_.support()) * acq_.fs)));
        for (int k = k0; k <= k1; ++k) {
          line[k] += r * pulse_(k / acq_.fs - t_arr);
        }
      }
      double* out = rf.samples.data() + c * num_samples;
      for (int k = 0; k < num_samples; ++k) out[k] = line[k];
    }
  });
  return rf;
}

std::vector<double> synth_delays(const SparseRayMatrix& L, const SlownessMap& sigma_true,
                                 double sigma0, double noise_std, std::mt19937_64* rng,
                                 int threads) {
  if (static_cast<std::int64_t>(sigma_true.sigma.size()) != L.cols) {
    throw NumericError("slowness map does not match the path matrix columns");
  }
  std::vector<double> deviation(sigma_true.sigma.size());
  for (std::size_t k = 0; k < deviation.size(); ++k) {
    deviation[k] = sigma_true.sigma[k] - sigma0;
  }
  std::vector<double> dtau;
  L.multiply(deviation, dtau, threads);
  if (noise_std > 0.0) {
    if (!rng) throw ConfigError("noise requested without an RNG");
    std::normal_distribution<double> noise(0.0, noise_std);
    for (double& v : dtau) v += noise(*rng);
  }
  return dtau;
}

}  // namespace sosbeam
