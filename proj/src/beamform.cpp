////////////////////////////////////////////////////////////////////////////////
// Copyright 2026 the sosbeam project developers.
// SPDX-License-Identifier: Apache-2.0
//
// sosbeam: plane-wave ultrasound beamforming with local speed-of-sound maps
// Delay computation from slowness maps and delay-and-sum beamforming.
////////////////////////////////////////////////////////////////////////////////

#include "sosbeam/beamform.hpp"

#include <algorithm>
#include <cmath>

#include "sosbeam/errors.hpp"
#include "sosbeam/parallel.hpp"

namespace sosbeam {

namespace {

// Contiguous element range whose aperture weight can be nonzero.
void aperture_range(const TransducerArray& array, const ApodizationSpec& apod, Vec2 pixel,
                    double rx_steer, int& lo, int& hi) {
  const double center = aperture_center(pixel, rx_steer);
  const double half = aperture_half_width(pixel.z, apod.f_number);
  const auto& xs = array.element_x();
  lo = static_cast<int>(std::lower_bound(xs.begin(), xs.end(), center - half) - xs.begin());
  hi = static_cast<int>(std::upper_bound(xs.begin(), xs.end(), center + half) - xs.begin()) - 1;
  lo = std::max(lo, 0);
  hi = std::min(hi, array.num_elements() - 1);
}

// Linear interpolation of one RF channel at a fractional sample position;
// samples outside the recorded window contribute zero.
inline double sample_rf(const RfChannelData& rf, int channel, double tau) {
  const double s = tau * rf.fs;
  if (s < 0.0) return 0.0;
  const int k = static_cast<int>(s);
  if (k + 1 >= rf.num_samples) return 0.0;
  const double frac = s - k;
  const double* line = rf.samples.data() + static_cast<std::int64_t>(channel) * rf.num_samples;
  return (1.0 - frac) * line[k] + frac * line[k + 1];
}

}  // namespace

void BeamformedFrame::validate() const {
  grid.validate();
  if (rf.size() != static_cast<std::size_t>(grid.num_pixels())) {
    throw NumericError("frame buffer does not match its grid");
  }
  for (double v : rf) {
    if (!std::isfinite(v)) throw NumericError("non-finite frame value");
  }
}

DelayCalculator::DelayCalculator(const SlownessMap& map, const TransducerArray& array,
                                 const std::vector<double>& angles, double sigma_steer,
                                 double sigma_outside, TravelTimeTables::Params table_nodes,
                                 int threads)
    : num_elements_(array.num_elements()) {
  table_nodes.sigma_steer = sigma_steer;
  table_nodes.sigma_outside = sigma_outside;
  tables_ = std::make_unique<TravelTimeTables>(map, array, angles, table_nodes, threads);
}

DelayField DelayCalculator::compute_delays(int angle_idx, const ImagingGrid& grid,
                                           int threads) const {
  grid.validate();
  DelayField field;
  field.grid = grid;
  field.num_elements = num_elements_;
  field.angle = tables_->angle(angle_idx);
  field.tau.resize(static_cast<std::int64_t>(num_elements_) * grid.num_pixels());
  const std::int64_t npix = grid.num_pixels();
  parallel_for(npix, threads, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t p = begin; p < end; ++p) {
      const int ix = static_cast<int>(p / grid.nz);
      const int iz = static_cast<int>(p % grid.nz);
      const Vec2 pos = grid.pixel_position(ix, iz);
      const double tx = tables_->tx_time(angle_idx, pos);
      for (int e = 0; e < num_elements_; ++e) {
        field.tau[(static_cast<std::int64_t>(e) * grid.nx + ix) * grid.nz + iz] =
            tx + tables_->rx_time(e, pos);
      }
    }
  });
  return field;
}

BeamformedFrame das(const RfChannelData& rf, const DelayField& tau,
                    const ApodizationSpec& apod, const TransducerArray& array,
                    double rx_steer, int threads) {
  rf.validate();
  if (rf.num_channels != tau.num_elements) throw NumericError("channel/delay count mismatch");

  BeamformedFrame frame;
  frame.grid = tau.grid;
  frame.tx_angle = rf.angle;
  frame.rx_steer = rx_steer;
  frame.rf.assign(tau.grid.num_pixels(), 0.0);
  const std::int64_t npix = tau.grid.num_pixels();
  parallel_for(npix, threads, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t p = begin; p < end; ++p) {
      const int ix = static_cast<int>(p / tau.grid.nz);
      const int iz = static_cast<int>(p % tau.grid.nz);
      const Vec2 pos = tau.grid.pixel_position(ix, iz);
      int lo = 0, hi = -1;
      aperture_range(array, apod, pos, rx_steer, lo, hi);
      double acc = 0.0;
      for (int e = lo; e <= hi; ++e) {
        const double w = aperture_weight(apod, array.element_x()[e], pos, rx_steer);
        if (w <= 0.0) continue;
        acc += w * sample_rf(rf, e, tau.at(e, ix, iz));
      }
      frame.rf[p] = acc;
    }
  });
  return frame;
}

BeamformedFrame das_streamed(const RfChannelData& rf, const DelayCalculator& calc,
                             int angle_idx, const ImagingGrid& grid,
                             const ApodizationSpec& apod, const TransducerArray& array,
                             double rx_steer, int threads) {
  rf.validate();
  grid.validate();
  if (rf.num_channels != array.num_elements()) throw NumericError("channel/element count mismatch");

  BeamformedFrame frame;
  frame.grid = grid;
  frame.tx_angle = rf.angle;
  frame.rx_steer = rx_steer;
  frame.rf.assign(grid.num_pixels(), 0.0);
  const std::int64_t npix = grid.num_pixels();
  parallel_for(npix, threads, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t p = begin; p < end; ++p) {
      const int ix = static_cast<int>(p / grid.nz);
      const int iz = static_cast<int>(p % grid.nz);
      const Vec2 pos = grid.pixel_position(ix, iz);
      const double tx = calc.tx_time(angle_idx, pos);
      int lo = 0, hi = -1;
      aperture_range(array, apod, pos, rx_steer, lo, hi);
      double acc = 0.0;
      for (int e = lo; e <= hi; ++e) {
        const double w = aperture_weight(apod, array.element_x()[e], pos, rx_steer);
        if (w <= 0.0) continue;
        acc += w * sample_rf(rf, e, tx + calc.rx_time(e, pos));
      }
      frame.rf[p] = acc;
    }
  });
  return frame;
}

BeamformedFrame compound(const std::vector<BeamformedFrame>& frames) {
  if (frames.empty()) throw NumericError("nothing to compound");
  BeamformedFrame out = frames.front();
  for (std::size_t f = 1; f < frames.size(); ++f) {
    const BeamformedFrame& fr = frames[f];
    if (fr.grid.nx != out.grid.nx || fr.grid.nz != out.grid.nz ||
        fr.grid.dx != out.grid.dx || fr.grid.dz != out.grid.dz ||
        fr.grid.x0 != out.grid.x0 || fr.grid.z0 != out.grid.z0) {
      throw NumericError("compounding frames on different grids");
    }
    for (std::size_t k = 0; k < out.rf.size(); ++k) out.rf[k] += fr.rf[k];
  }
  out.provenance = "compound";
  return out;
}

}  // namespace sosbeam
