////////////////////////////////////////////////////////////////////////////////
// Copyright 2026 the sosbeam project developers.
// SPDX-License-Identifier: Apache-2.0
//
// sosbeam: plane-wave ultrasound beamforming with local speed-of-sound maps
////////////////////////////////////////////////////////////////////////////////

#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "sosbeam/metrics.hpp"

using namespace sosbeam;

namespace {

ImagingGrid make_img(int nx, int nz, double dx, double dz, double x0 = 0.0, double z0 = 0.0) {
  ImagingGrid g;
  g.nx = nx;
  g.nz = nz;
  g.dx = dx;
  g.dz = dz;
  g.x0 = x0;
  g.z0 = z0;
  return g;
}

EnvelopeImage gaussian_env(const ImagingGrid& g, Vec2 center, double sx, double sz,
                           double amp = 1.0) {
  EnvelopeImage env;
  env.grid = g;
  env.mag.resize(g.num_pixels());
  for (int ix = 0; ix < g.nx; ++ix) {
    for (int iz = 0; iz < g.nz; ++iz) {
      const Vec2 p = g.pixel_position(ix, iz);
      const double ddx = (p.x - center.x) / sx;
      const double ddz = (p.z - center.z) / sz;
      env.mag[g.flat_index(ix, iz)] = amp * std::exp(-0.5 * (ddx * ddx + ddz * ddz));
    }
  }
  return env;
}

}  // namespace

TEST_CASE("peak detection on a mid-pixel Gaussian is subpixel-accurate") {
  const ImagingGrid g = make_img(64, 64, 0.1e-3, 0.12e-3, -3e-3, 1e-3);
  // Center deliberately between grid nodes.
  const Vec2 center = {g.x0 + 31.5 * g.dx, g.z0 + 30.52 * g.dz};
  const EnvelopeImage env = gaussian_env(g, center, 0.4e-3, 0.5e-3);
  const PeakDetection det = detect_peak(env, center, 1.5e-3);
  CHECK_FALSE(det.flagged);
  CHECK(std::abs(det.position.x - center.x) <= 0.05 * g.dx);
  CHECK(std::abs(det.position.z - center.z) <= 0.05 * g.dz);
  CHECK(det.value == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("a peak exactly on a node stays on the node") {
  const ImagingGrid g = make_img(48, 48, 0.1e-3, 0.1e-3);
  const Vec2 center = g.pixel_position(24, 20);
  const EnvelopeImage env = gaussian_env(g, center, 0.3e-3, 0.3e-3);
  const PeakDetection det = detect_peak(env, center, 1.2e-3);
  CHECK_FALSE(det.flagged);
  CHECK(det.position.x == doctest::Approx(center.x).epsilon(1e-12));
  CHECK(det.position.z == doctest::Approx(center.z).epsilon(1e-12));
}

TEST_CASE("flat ROI and out-of-image ROI are flagged or rejected") {
  const ImagingGrid g = make_img(32, 32, 0.1e-3, 0.1e-3);
  EnvelopeImage flat;
  flat.grid = g;
  flat.mag.assign(g.num_pixels(), 0.7);
  const PeakDetection det = detect_peak(flat, g.pixel_position(16, 16), 0.8e-3);
  CHECK(det.flagged);

  CHECK_THROWS_AS(detect_peak(flat, g.pixel_position(1, 1), 0.8e-3), NumericError);
}

TEST_CASE("a peak drifting to the ROI rim is flagged") {
  const ImagingGrid g = make_img(64, 64, 0.1e-3, 0.1e-3);
  const Vec2 truth = g.pixel_position(32, 32);
  // Actual maximum sits a full ROI radius away.
  const Vec2 offset = {truth.x + 1.1e-3, truth.z};
  const EnvelopeImage env = gaussian_env(g, offset, 0.5e-3, 0.5e-3);
  const PeakDetection det = detect_peak(env, truth, 1.1e-3);
  CHECK(det.flagged);
}

TEST_CASE("lateral FWHM of analytic profiles") {
  SUBCASE("Gaussian width maps to 2.3548 sigma") {
    const ImagingGrid g = make_img(128, 32, 0.05e-3, 0.1e-3, -3e-3, 0.5e-3);
    const double sx = 0.45e-3;
    const Vec2 center = {0.12e-3, 0.5e-3 + 16 * 0.1e-3};
    const EnvelopeImage env = gaussian_env(g, center, sx, 0.6e-3);
    const PeakDetection det = detect_peak(env, center, 1.4e-3);
    REQUIRE_FALSE(det.flagged);
    const FwhmResult fwhm = fwhm_lateral(env, det);
    REQUIRE_FALSE(fwhm.flagged);
    CHECK(fwhm.width == doctest::Approx(2.3548 * sx).epsilon(0.01));
  }

  SUBCASE("rectangular profile returns its width") {
    const ImagingGrid g = make_img(64, 16, 0.1e-3, 0.1e-3);
    EnvelopeImage env;
    env.grid = g;
    env.mag.assign(g.num_pixels(), 0.0);
    for (int ix = 30; ix <= 34; ++ix) {
      for (int iz = 0; iz < g.nz; ++iz) env.mag[g.flat_index(ix, iz)] = 1.0;
    }
    PeakDetection det;
    det.position = g.pixel_position(32, 8);
    det.value = 1.0;
    const FwhmResult fwhm = fwhm_lateral(env, det);
    REQUIRE_FALSE(fwhm.flagged);
    CHECK(fwhm.width == doctest::Approx(5 * g.dx).epsilon(1e-9));
  }

  SUBCASE("matches a densely oversampled profile oracle") {
    const ImagingGrid g = make_img(96, 32, 0.0375e-3, 0.075e-3, -2e-3, 1e-3);
    const Vec2 center = {-0.23e-3, 1e-3 + 16 * 0.075e-3};
    const EnvelopeImage env = gaussian_env(g, center, 0.31e-3, 0.4e-3);
    const PeakDetection det = detect_peak(env, center, 1.0e-3);
    const FwhmResult fwhm = fwhm_lateral(env, det);
    REQUIRE_FALSE(fwhm.flagged);
    std::vector<double> profile(g.nx);
    const int iz_peak = static_cast<int>(std::lround((det.position.z - g.z0) / g.dz));
    for (int ix = 0; ix < g.nx; ++ix) profile[ix] = env.at(ix, iz_peak);
    const double ref = oracle::oversampled_fwhm(profile, g.dx, 256);
    CHECK(std::abs(fwhm.width - ref) <= g.dx);
  }

  SUBCASE("profiles that never cross half-max are flagged") {
    const ImagingGrid g = make_img(24, 16, 0.1e-3, 0.1e-3);
    EnvelopeImage env;
    env.grid = g;
    env.mag.assign(g.num_pixels(), 1.0);  // plateau across the whole image
    PeakDetection det;
    det.position = g.pixel_position(12, 8);
    det.value = 1.0;
    CHECK(fwhm_lateral(env, det).flagged);
  }
}

TEST_CASE("metrics are invariant under global envelope scaling") {
  const ImagingGrid g = make_img(64, 48, 0.08e-3, 0.1e-3, -2e-3, 0.5e-3);
  const Vec2 center = {0.31e-3, 0.5e-3 + 23.7 * 0.1e-3};
  const EnvelopeImage env = gaussian_env(g, center, 0.4e-3, 0.5e-3, 1.0);
  EnvelopeImage scaled = env;
  for (auto& v : scaled.mag) v *= 137.0;
  const PeakDetection d1 = detect_peak(env, center, 1.3e-3);
  const PeakDetection d2 = detect_peak(scaled, center, 1.3e-3);
  CHECK(d1.position.x == doctest::Approx(d2.position.x).epsilon(1e-12));
  CHECK(d1.position.z == doctest::Approx(d2.position.z).epsilon(1e-12));
  const FwhmResult f1 = fwhm_lateral(env, d1);
  const FwhmResult f2 = fwhm_lateral(scaled, d2);
  CHECK(f1.width == doctest::Approx(f2.width).epsilon(1e-12));
}

TEST_CASE("summaries and the below-inclusion subset") {
  const MetricSummary s = summarize({1.0, 2.0, 3.0, 4.0});
  CHECK(s.mean == doctest::Approx(2.5));
  CHECK(s.stdev == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(s.n == 4);

  CircleInclusion inc;
  inc.center = {0.0, 16e-3};
  inc.radius = 5e-3;
  std::vector<PointScatterer> scatterers;
  for (double x : {-10e-3, -5e-3, 0.0, 5e-3, 10e-3}) {
    for (double z : {8e-3, 14e-3, 20e-3, 26e-3, 32e-3, 38e-3}) {
      scatterers.push_back({{x, z}, 1.0});
    }
  }
  const std::vector<int> below = below_inclusion_indices(scatterers, inc);
  // Columns within +-5 mm, rows deeper than 21 mm: 3 x 3.
  CHECK(below.size() == 9);
  for (int k : below) {
    CHECK(scatterers[k].pos.z > 21e-3);
    CHECK(std::abs(scatterers[k].pos.x) <= 5e-3);
  }

  std::vector<ScattererReport> reports(scatterers.size());
  for (std::size_t k = 0; k < reports.size(); ++k) {
    reports[k].lateral_fwhm = static_cast<double>(k);
    reports[k].flagged = k == 3;
  }
  const ReportSummary rs = summarize_reports(reports);
  CHECK(rs.flagged == 1);
  CHECK(rs.fwhm.n == static_cast<int>(reports.size()) - 1);
}
