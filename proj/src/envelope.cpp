////////////////////////////////////////////////////////////////////////////////
// Copyright 2026 the sosbeam project developers.
// SPDX-License-Identifier: Apache-2.0
//
// sosbeam: plane-wave ultrasound beamforming with local speed-of-sound maps
// Envelope detection via the analytic signal, and log compression.
////////////////////////////////////////////////////////////////////////////////

#include "sosbeam/envelope.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>

#include "sosbeam/errors.hpp"

namespace sosbeam {

namespace {

// FFTW plan creation is not thread-safe; execution of a plan on its own
// buffers is fine. Envelope work is light, so lines run serially.
std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

class HilbertLine {
 public:
  explicit HilbertLine(int n) : n_(n) {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    buf_ = fftw_alloc_complex(n);
    fwd_ = fftw_plan_dft_1d(n, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_1d(n, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~HilbertLine() {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
    fftw_free(buf_);
  }
  HilbertLine(const HilbertLine&) = delete;
  HilbertLine& operator=(const HilbertLine&) = delete;

  void magnitude(const double* in, double* out) {
    for (int k = 0; k < n_; ++k) {
      buf_[k][0] = in[k];
      buf_[k][1] = 0.0;
    }
    fftw_execute(fwd_);
    // One-sided spectrum: keep DC (and Nyquist for even n), double the
    // positive frequencies, zero the negative ones.
    const int half = n_ / 2;
    for (int k = 1; k < (n_ + 1) / 2; ++k) {
      buf_[k][0] *= 2.0;
      buf_[k][1] *= 2.0;
    }
    for (int k = half + 1; k < n_; ++k) {
      buf_[k][0] = 0.0;
      buf_[k][1] = 0.0;
    }
    fftw_execute(inv_);
    const double scale = 1.0 / n_;
    for (int k = 0; k < n_; ++k) {
      out[k] = scale * std::hypot(buf_[k][0], buf_[k][1]);
    }
  }

 private:
  int n_;
  fftw_complex* buf_;
  fftw_plan fwd_;
  fftw_plan inv_;
};

}  // namespace

EnvelopeImage envelope(const BeamformedFrame& frame) {
  frame.validate();
  if (frame.grid.nz < 8) throw NumericError("envelope needs at least 8 axial samples");

  EnvelopeImage env;
  env.grid = frame.grid;
  env.mag.resize(frame.rf.size());
  HilbertLine hilbert(frame.grid.nz);
  for (int ix = 0; ix < frame.grid.nx; ++ix) {
    const double* in = frame.rf.data() + frame.grid.flat_index(ix, 0);
    double* out = env.mag.data() + frame.grid.flat_index(ix, 0);
    hilbert.magnitude(in, out);
  }
  return env;
}

std::vector<double> log_compress(const EnvelopeImage& env, double dynamic_range_db) {
  const double peak = *std::max_element(env.mag.begin(), env.mag.end());
  if (!(peak > 0.0)) throw NumericError("log compression of an all-zero envelope");
  std::vector<double> db(env.mag.size());
  for (std::size_t k = 0; k < env.mag.size(); ++k) {
    const double v = env.mag[k] / peak;
    db[k] = v > 0.0 ? std::max(20.0 * std::log10(v), -dynamic_range_db) : -dynamic_range_db;
  }
  return db;
}

}  // namespace sosbeam
