////////////////////////////////////////////////////////////////////////////////
// Copyright 2026 the sosbeam project developers.
// SPDX-License-Identifier: Apache-2.0
//
// sosbeam: plane-wave ultrasound beamforming with local speed-of-sound maps
////////////////////////////////////////////////////////////////////////////////

#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sosbeam/tracking.hpp"

using namespace sosbeam;

namespace {

constexpr double kSigma0 = 1.0 / 1500.0;

ImagingGrid tracking_grid(int nx, int nz) {
  ImagingGrid g;
  g.nx = nx;
  g.nz = nz;
  g.dx = 0.15e-3;
  g.dz = 37.5e-6;
  g.x0 = -5e-3;
  g.z0 = 2e-3;
  return g;
}

// Frame of band-limited RF-like content, one independent signal per line.
BeamformedFrame make_frame(const ImagingGrid& g, double axial_shift_samples, unsigned seed) {
  BeamformedFrame f;
  f.grid = g;
  f.rf.resize(g.num_pixels());
  for (int ix = 0; ix < g.nx; ++ix) {
    const oracle::BandlimitedSignal sig(seed + ix, 12, 0.3);
    for (int iz = 0; iz < g.nz; ++iz) {
      f.rf[g.flat_index(ix, iz)] = sig(iz - axial_shift_samples);
    }
  }
  return f;
}

int interior_count(const DisplacementMap& m) {
  int n = 0;
  for (auto v : m.valid) n += v;
  return n;
}

}  // namespace

TEST_CASE("PSF-aligned aperture rule") {
  const double limit = deg_to_rad(30.0);
  AlignedApertures a = psf_aligned_apertures(0.0, 0.0, 0.0, limit);
  CHECK(a.rx_i == doctest::Approx(0.0));
  CHECK(a.ok);

  a = psf_aligned_apertures(deg_to_rad(10.0), deg_to_rad(-10.0), 0.0, limit);
  CHECK(a.rx_i == doctest::Approx(deg_to_rad(-10.0)));
  CHECK(a.rx_j == doctest::Approx(deg_to_rad(10.0)));
  CHECK(a.ok);

  // 2*15 - (-12) = 42 degrees: beyond the default acceptance.
  a = psf_aligned_apertures(deg_to_rad(-12.0), deg_to_rad(-10.0), deg_to_rad(15.0), limit);
  CHECK(a.rx_i == doctest::Approx(deg_to_rad(42.0)));
  CHECK_FALSE(a.ok);
}

TEST_CASE("integer axial shifts are recovered exactly") {
  const ImagingGrid g = tracking_grid(9, 160);
  const BeamformedFrame a = make_frame(g, 0.0, 100);
  const BeamformedFrame b = make_frame(g, 3.0, 100);  // content sits 3 samples deeper
  TrackingConfig cfg;
  cfg.quality_threshold = 0.9;
  const DisplacementMap m = ncc_displacement(a, b, cfg, kSigma0, 2);
  REQUIRE(interior_count(m) > 300);
  const double px_to_tau = 2.0 * kSigma0 * g.dz;
  for (std::int64_t k = 0; k < g.num_pixels(); ++k) {
    if (!m.valid[k]) continue;
    CHECK(m.dtau[k] == doctest::Approx(3.0 * px_to_tau).epsilon(1e-12));
    CHECK(m.quality[k] == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("tracking a frame against itself gives zero at quality one") {
  const ImagingGrid g = tracking_grid(7, 120);
  const BeamformedFrame a = make_frame(g, 0.0, 200);
  TrackingConfig cfg;
  const DisplacementMap m = ncc_displacement(a, a, cfg, kSigma0, 1);
  REQUIRE(interior_count(m) > 100);
  for (std::int64_t k = 0; k < g.num_pixels(); ++k) {
    if (!m.valid[k]) continue;
    CHECK(m.dtau[k] == 0.0);
    CHECK(m.quality[k] == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("a 2.5-sample band-limited shift is recovered within 0.1 sample") {
  const ImagingGrid g = tracking_grid(9, 200);
  const BeamformedFrame a = make_frame(g, 0.0, 300);
  const BeamformedFrame b = make_frame(g, 2.5, 300);
  TrackingConfig cfg;
  cfg.quality_threshold = 0.8;
  const DisplacementMap m = ncc_displacement(a, b, cfg, kSigma0, 2);
  REQUIRE(interior_count(m) > 300);
  const double px_to_tau = 2.0 * kSigma0 * g.dz;
  for (std::int64_t k = 0; k < g.num_pixels(); ++k) {
    if (!m.valid[k]) continue;
    CHECK(std::abs(m.dtau[k] / px_to_tau - 2.5) <= 0.1);
  }
}

TEST_CASE("antisymmetry within a tenth of a sample") {
  const ImagingGrid g = tracking_grid(9, 200);
  const BeamformedFrame a = make_frame(g, 0.0, 400);
  const BeamformedFrame b = make_frame(g, 1.7, 400);
  TrackingConfig cfg;
  cfg.quality_threshold = 0.8;
  const DisplacementMap ab = ncc_displacement(a, b, cfg, kSigma0, 2);
  const DisplacementMap ba = ncc_displacement(b, a, cfg, kSigma0, 2);
  const double px_to_tau = 2.0 * kSigma0 * g.dz;
  int checked = 0;
  for (std::int64_t k = 0; k < g.num_pixels(); ++k) {
    if (!ab.valid[k] || !ba.valid[k]) continue;
    CHECK(std::abs((ab.dtau[k] + ba.dtau[k]) / px_to_tau) <= 0.1);
    ++checked;
  }
  CHECK(checked > 300);
}

TEST_CASE("uncorrelated noise is masked by the quality threshold") {
  const ImagingGrid g = tracking_grid(9, 160);
  const BeamformedFrame a = make_frame(g, 0.0, 500);
  BeamformedFrame noise;
  noise.grid = g;
  noise.rf.resize(g.num_pixels());
  std::mt19937_64 rng(501);
  for (auto& v : noise.rf) v = std::uniform_real_distribution<double>(-1, 1)(rng);
  TrackingConfig cfg;
  const DisplacementMap m = ncc_displacement(a, noise, cfg, kSigma0, 2);
  int valid = 0;
  for (auto v : m.valid) valid += v;
  CHECK(valid < g.num_pixels() / 20);
}

TEST_CASE("NCC quality is invariant under positive affine amplitude maps") {
  const ImagingGrid g = tracking_grid(7, 140);
  const BeamformedFrame a = make_frame(g, 0.0, 600);
  const BeamformedFrame b = make_frame(g, 1.3, 600);
  BeamformedFrame b_scaled = b;
  for (auto& v : b_scaled.rf) v = 2.75 * v + 0.4;
  TrackingConfig cfg;
  cfg.quality_threshold = 0.0;
  const DisplacementMap m1 = ncc_displacement(a, b, cfg, kSigma0, 1);
  const DisplacementMap m2 = ncc_displacement(a, b_scaled, cfg, kSigma0, 1);
  for (std::int64_t k = 0; k < g.num_pixels(); ++k) {
    if (!m1.valid[k] || !m2.valid[k]) continue;
    CHECK(m2.quality[k] == doctest::Approx(m1.quality[k]).epsilon(1e-9));
    CHECK(m2.dtau[k] == doctest::Approx(m1.dtau[k]).epsilon(1e-9));
  }
}

TEST_CASE("projection and empirical scaling") {
  const ImagingGrid g = tracking_grid(5, 60);
  DisplacementMap m;
  m.grid = g;
  m.dtau.assign(g.num_pixels(), 2e-9);
  m.quality.assign(g.num_pixels(), 1.0);
  m.valid.assign(g.num_pixels(), 1);
  TrackingConfig cfg;

  SUBCASE("straight PSF keeps the plain 1.5 factor") {
    project_and_scale(m, 0.0, cfg);
    for (double v : m.dtau) CHECK(v == doctest::Approx(3e-9).epsilon(1e-12));
  }
  SUBCASE("tilted PSF projects with the cosine") {
    project_and_scale(m, deg_to_rad(15.0), cfg);
    for (double v : m.dtau) {
      CHECK(v == doctest::Approx(2e-9 * 1.4489).epsilon(1e-4));
    }
  }
  SUBCASE("the inverse-cosine alternative divides instead") {
    cfg.projection = TrackingConfig::Projection::inverse_cosine;
    project_and_scale(m, deg_to_rad(15.0), cfg);
    for (double v : m.dtau) {
      CHECK(v == doctest::Approx(2e-9 * 1.5 / std::cos(deg_to_rad(15.0))).epsilon(1e-9));
    }
  }
  SUBCASE("zero stays zero") {
    m.dtau.assign(g.num_pixels(), 0.0);
    project_and_scale(m, deg_to_rad(15.0), cfg);
    for (double v : m.dtau) CHECK(v == 0.0);
  }
}

TEST_CASE("decimation block-averages valid entries") {
  ImagingGrid g = tracking_grid(8, 32);
  DisplacementMap m;
  m.grid = g;
  m.dtau.assign(g.num_pixels(), 0.0);
  m.quality.assign(g.num_pixels(), 0.8);
  m.valid.assign(g.num_pixels(), 1);
  for (int ix = 0; ix < g.nx; ++ix) {
    for (int iz = 0; iz < g.nz; ++iz) m.dtau[g.flat_index(ix, iz)] = iz;
  }
  const DisplacementMap d = decimate(m, 4, 8, 0.3);
  CHECK(d.grid.nx == 2);
  CHECK(d.grid.nz == 4);
  CHECK(d.grid.dx == doctest::Approx(4 * g.dx));
  CHECK(d.grid.dz == doctest::Approx(8 * g.dz));
  // First block averages axial indices 0..7 -> 3.5.
  CHECK(d.dtau[d.grid.flat_index(0, 0)] == doctest::Approx(3.5));
  // Block centers line up with the mean of the member pixel positions.
  CHECK(d.grid.pixel_position(0, 0).x ==
        doctest::Approx(0.5 * (g.pixel_position(0, 0).x + g.pixel_position(3, 0).x)));

  // Masking: a block with too few valid members goes invalid.
  DisplacementMap sparse = m;
  for (int ix = 0; ix < 4; ++ix) {
    for (int iz = 0; iz < 8; ++iz) {
      if (!(ix == 0 && iz == 0)) sparse.valid[g.flat_index(ix, iz)] = 0;
    }
  }
  const DisplacementMap ds = decimate(sparse, 4, 8, 0.3);
  CHECK(ds.valid[ds.grid.flat_index(0, 0)] == 0);
}

TEST_CASE("measurement stacking preserves pair-major z-fastest order") {
  const ImagingGrid g = tracking_grid(3, 4);
  std::vector<DisplacementMap> maps(2);
  for (int p = 0; p < 2; ++p) {
    maps[p].grid = g;
    maps[p].dtau.resize(g.num_pixels());
    maps[p].quality.assign(g.num_pixels(), 1.0);
    maps[p].valid.assign(g.num_pixels(), 1);
    for (int ix = 0; ix < g.nx; ++ix) {
      for (int iz = 0; iz < g.nz; ++iz) {
        maps[p].dtau[g.flat_index(ix, iz)] = 100.0 * p + 10.0 * ix + iz;
      }
    }
  }
  const MeasurementVector mv = build_measurement_vector(maps);
  REQUIRE(mv.dtau.size() == 2 * g.num_pixels());
  for (int p = 0; p < 2; ++p) {
    for (int ix = 0; ix < g.nx; ++ix) {
      for (int iz = 0; iz < g.nz; ++iz) {
        const std::size_t flat = p * g.num_pixels() + g.flat_index(ix, iz);
        CHECK(mv.dtau[flat] == doctest::Approx(100.0 * p + 10.0 * ix + iz));
      }
    }
  }

  // Single map: identity stacking.
  const MeasurementVector one = build_measurement_vector({maps[0]});
  CHECK(one.dtau == maps[0].dtau);

  // Grid mismatch is rejected.
  std::vector<DisplacementMap> bad = maps;
  bad[1].grid.nx = 4;
  bad[1].dtau.resize(bad[1].grid.num_pixels());
  bad[1].quality.resize(bad[1].grid.num_pixels());
  bad[1].valid.resize(bad[1].grid.num_pixels());
  CHECK_THROWS_AS(build_measurement_vector(bad), ConfigError);
}

TEST_CASE("tracking config validation") {
  TrackingConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.window_ax = 2;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TrackingConfig{};
  cfg.quality_threshold = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
