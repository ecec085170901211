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
#include "sosbeam/raytrace.hpp"

using namespace sosbeam;

namespace {

ReconGrid make_grid(int nx, int nz, double w, double h, double x0 = 0.0, double z0 = 0.0) {
  ReconGrid g;
  g.nx = nx;
  g.nz = nz;
  g.cell_w = w;
  g.cell_h = h;
  g.x0 = x0;
  g.z0 = z0;
  g.validate();
  return g;
}

double row_total(const TraceResult& r) {
  double s = 0.0;
  for (double v : r.lens) s += v;
  return s;
}

}  // namespace

TEST_CASE("vertical ray conserves its length exactly") {
  const ReconGrid g = make_grid(10, 30, 1e-3, 1e-3, -5e-3, 0.0);
  const TraceResult r = trace_ray({0.0, 0.0}, {0.0, 30e-3}, g);
  CHECK(row_total(r) == doctest::Approx(30e-3).epsilon(1e-12));
  CHECK(r.outside_length == 0.0);
  CHECK(r.in_grid_length == doctest::Approx(30e-3).epsilon(1e-15));
  CHECK(r.cols.size() == 30);
}

TEST_CASE("cell diagonal gives a single sqrt(2) entry") {
  const ReconGrid g = make_grid(4, 4, 1e-3, 1e-3);
  const TraceResult r = trace_ray({1e-3, 1e-3}, {2e-3, 2e-3}, g);
  REQUIRE(r.cols.size() == 1);
  CHECK(r.cols[0] == g.flat_index(1, 1));
  CHECK(r.lens[0] == doctest::Approx(std::sqrt(2.0) * 1e-3).epsilon(1e-12));
}

TEST_CASE("random rays match the midpoint-sampling oracle") {
  const ReconGrid g = make_grid(16, 16, 0.7e-3, 1.1e-3, -4e-3, 1e-3);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> ux(g.x0, g.x_max());
  std::uniform_real_distribution<double> uz(g.z0, g.z_max());
  for (int trial = 0; trial < 25; ++trial) {
    const Vec2 a = {ux(rng), uz(rng)};
    const Vec2 b = {ux(rng), uz(rng)};
    const TraceResult r = trace_ray(a, b, g);
    // The midpoint oracle quantizes cell boundaries at the substep length,
    // so its per-cell error is bounded by a few substeps.
    const int steps = 4000000;
    const std::vector<double> ref = oracle::sampled_cell_lengths(a, b, g, steps);
    std::vector<double> mine(g.num_cells(), 0.0);
    for (std::size_t k = 0; k < r.cols.size(); ++k) mine[r.cols[k]] = r.lens[k];
    const double total = norm(b - a);
    for (std::int64_t c = 0; c < g.num_cells(); ++c) {
      CHECK(std::abs(mine[c] - ref[c]) <= 1e-6 * std::max(total, 1e-6));
    }
  }
}

TEST_CASE("length conservation holds for clipped rays") {
  const ReconGrid g = make_grid(12, 9, 0.9e-3, 1.3e-3, -6e-3, 2e-3);
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> ux(-15e-3, 15e-3);
  std::uniform_real_distribution<double> uz(-5e-3, 25e-3);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec2 a = {ux(rng), uz(rng)};
    const Vec2 b = {ux(rng), uz(rng)};
    const TraceResult r = trace_ray_clipped(a, b, g);
    const double total = norm(b - a);
    CHECK(std::abs(r.in_grid_length + r.outside_length - total) <= 1e-9 * std::max(total, 1e-12));
    CHECK(std::abs(row_total(r) - r.in_grid_length) <= 1e-9 * std::max(total, 1e-12));
    for (double len : r.lens) CHECK(len >= 0.0);
  }
}

TEST_CASE("strict tracing rejects endpoints outside the box") {
  const ReconGrid g = make_grid(4, 4, 1e-3, 1e-3);
  CHECK_THROWS_AS(trace_ray({-1e-3, 0.0}, {2e-3, 2e-3}, g), NumericError);
  CHECK_THROWS_AS(trace_ray({0.0, 0.0}, {2e-3, 5e-3}, g), NumericError);
}

TEST_CASE("zero-length ray yields an empty row") {
  const ReconGrid g = make_grid(4, 4, 1e-3, 1e-3);
  const TraceResult r = trace_ray({1e-3, 1e-3}, {1e-3, 1e-3}, g);
  CHECK(r.cols.empty());
  CHECK(r.in_grid_length == 0.0);
}

TEST_CASE("transmit path times under a uniform medium") {
  const ReconGrid g = make_grid(40, 40, 1e-3, 1e-3, -20e-3, 0.0);
  const double sigma = 1.0 / 1500.0;

  SUBCASE("straight-down transmit") {
    const TraceResult r = tx_path({0.0, 30e-3}, 0.0, g);
    CHECK(row_total(r) * sigma == doctest::Approx(20e-6).epsilon(1e-9));
  }
  SUBCASE("15 degree transmit") {
    const double theta = deg_to_rad(15.0);
    const TraceResult r = tx_path({0.0, 30e-3}, theta, g);
    const double expect_len = 30e-3 / std::cos(theta);
    CHECK(r.in_grid_length == doctest::Approx(expect_len).epsilon(1e-9));
    CHECK(row_total(r) == doctest::Approx(31.058e-3).epsilon(1e-4));
    CHECK(row_total(r) * sigma == doctest::Approx(20.706e-6).epsilon(1e-4));
  }
  SUBCASE("pixel at the array plane degenerates to an empty row") {
    const TraceResult r = tx_path({1e-3, 0.0}, 0.0, g);
    CHECK(r.cols.empty());
  }
  SUBCASE("entry beyond the lateral extent is rejected") {
    CHECK_THROWS_AS(tx_path({-19e-3, 30e-3}, deg_to_rad(20.0), g), NumericError);
  }
}

TEST_CASE("receive path geometry") {
  const ReconGrid g = make_grid(40, 40, 1e-3, 1e-3, -20e-3, 0.0);
  const double sigma = 1.0 / 1500.0;
  const TraceResult straight = rx_path({0.0, 30e-3}, {0.0, 0.0}, g);
  CHECK(row_total(straight) * sigma == doctest::Approx(20e-6).epsilon(1e-9));

  const TraceResult oblique = rx_path({10e-3, 30e-3}, {0.0, 0.0}, g);
  CHECK(row_total(oblique) == doctest::Approx(31.623e-3).epsilon(1e-4));

  // Symmetric endpoints give identical row sums.
  const TraceResult left = rx_path({0.0, 25e-3}, {-7e-3, 0.0}, g);
  const TraceResult right = rx_path({0.0, 25e-3}, {7e-3, 0.0}, g);
  CHECK(row_total(left) == doctest::Approx(row_total(right)).epsilon(1e-12));
}

TEST_CASE("rx endpoint rules") {
  TransducerArray arr(65, 0.3e-3);  // +-9.6 mm
  ApodizationSpec apod;
  apod.f_number = 1.0;
  const Vec2 pixel = {0.0, 10e-3};
  // Unsteered, fully inside the array: centroid equals the pixel lateral position.
  CHECK(rx_endpoint(pixel, 0.0, arr, apod, RxEndpointRule::aperture_centroid).x ==
        doctest::Approx(0.0).epsilon(1e-12));
  // Steered centroid follows the aperture center while it stays inside.
  const double steer = deg_to_rad(10.0);
  CHECK(rx_endpoint(pixel, steer, arr, apod, RxEndpointRule::fixed_angle).x ==
        doctest::Approx(aperture_center(pixel, steer)));
  // A deep pixel pushes the aperture past the array edge: the clipped
  // centroid stays within the array.
  const Vec2 deep = {8e-3, 30e-3};
  const double x = rx_endpoint(deep, steer, arr, apod, RxEndpointRule::aperture_centroid).x;
  CHECK(x <= arr.x_max());
  CHECK(x >= arr.x_min());
}

TEST_CASE("build_P reproduces homogeneous delays and scales linearly") {
  ImagingGrid img;
  img.nx = 64;
  img.nz = 64;
  img.dx = 0.35e-3;
  img.dz = 0.5e-3;
  img.x0 = -11e-3;
  img.z0 = 1e-3;
  const ReconGrid rec = make_grid(32, 32, 1.1e-3, 1.05e-3, -17.6e-3, 0.5e-3);
  TransducerArray arr(16, 1.2e-3);
  const std::vector<double> angles = {deg_to_rad(-10.0), 0.0, deg_to_rad(10.0)};
  const PathMatrices pm = build_P(img, rec, arr, angles, 2);
  REQUIRE(pm.p_tx.size() == angles.size());
  REQUIRE(pm.p_rx.rows == arr.num_elements() * img.num_pixels());

  const double c0 = 1540.0;
  const double sigma0 = 1.0 / c0;
  double worst = 0.0;
  for (std::size_t a = 0; a < angles.size(); ++a) {
    for (int e = 0; e < arr.num_elements(); e += 5) {
      for (std::int64_t p = 0; p < img.num_pixels(); p += 17) {
        const int ix = static_cast<int>(p / img.nz);
        const int iz = static_cast<int>(p % img.nz);
        const Vec2 pixel = img.pixel_position(ix, iz);
        const std::int64_t rx_row = (static_cast<std::int64_t>(e) * img.nx + ix) * img.nz + iz;
        const double lead = plane_wave_lead(tx_entry_x(pixel, angles[a]), angles[a]) * sigma0;
        const double tau = lead +
                           (pm.p_tx[a].row_sum(p) + pm.p_tx[a].outside_length[p]) * sigma0 +
                           (pm.p_rx.row_sum(rx_row) + pm.p_rx.outside_length[rx_row]) * sigma0;
        const double ref = oracle::homogeneous_delay(pixel, arr.element_position(e), angles[a], c0);
        worst = std::max(worst, std::abs(tau - ref) / ref);
      }
    }
  }
  CHECK(worst < 1e-4);

  // Linearity: scaling the slowness scales every product.
  std::vector<double> sig(rec.num_cells(), sigma0);
  std::vector<double> sig2(rec.num_cells(), 2.0 * sigma0);
  std::vector<double> y1, y2;
  pm.p_rx.multiply(sig, y1, 2);
  pm.p_rx.multiply(sig2, y2, 2);
  for (std::int64_t r = 0; r < pm.p_rx.rows; r += 97) {
    CHECK(y2[r] == doctest::Approx(2.0 * y1[r]).epsilon(1e-12));
  }
}

TEST_CASE("build_P with no angles yields only receive paths") {
  ImagingGrid img;
  img.nx = 4;
  img.nz = 4;
  img.dx = 1e-3;
  img.dz = 1e-3;
  img.x0 = -1.5e-3;
  img.z0 = 0.5e-3;
  const ReconGrid rec = make_grid(8, 8, 0.5e-3, 0.6e-3, -2e-3, 0.0);
  TransducerArray arr(4, 1e-3);
  const PathMatrices pm = build_P(img, rec, arr, {}, 1);
  CHECK(pm.p_tx.empty());
  CHECK(pm.p_rx.rows == 4 * 16);
}

TEST_CASE("build_P enforces its memory budget with an estimate") {
  ImagingGrid img;
  img.nx = 64;
  img.nz = 64;
  img.dx = 0.2e-3;
  img.dz = 0.2e-3;
  img.x0 = -6.3e-3;
  img.z0 = 0.0;
  const ReconGrid rec = make_grid(64, 64, 0.2e-3, 0.2e-3, -6.4e-3, 0.0);
  TransducerArray arr(128, 0.1e-3);
  CHECK_THROWS_WITH_AS(build_P(img, rec, arr, {0.0}, 1, 1 << 20),
                       doctest::Contains("MiB"), NumericError);
}

TEST_CASE("differential path rows") {
  const ReconGrid rec = make_grid(24, 24, 1e-3, 1.2e-3, -12e-3, 0.0);
  TransducerArray arr(64, 0.35e-3);
  ApodizationSpec apod;
  DiffPathParams params;
  params.sos_angles = {deg_to_rad(-8.0), deg_to_rad(-4.0), 0.0, deg_to_rad(4.0), deg_to_rad(8.0)};
  params.array = &arr;
  params.apod = &apod;

  std::vector<Vec2> pixels;
  for (double x : {-6e-3, 0.0, 6e-3}) {
    for (double z : {5e-3, 12e-3, 20e-3}) pixels.push_back({x, z});
  }

  const std::vector<AnglePair> fwd = {{0, 4, 0.0}, {1, 3, 0.0}};
  const std::vector<AnglePair> rev = {{4, 0, 0.0}, {3, 1, 0.0}};
  const SparseRayMatrix l_fwd = build_L(fwd, pixels, rec, params, 2);
  const SparseRayMatrix l_rev = build_L(rev, pixels, rec, params, 2);
  REQUIRE(l_fwd.rows == static_cast<std::int64_t>(fwd.size() * pixels.size()));

  SUBCASE("uniform medium at the reference slowness predicts zero delay") {
    std::vector<double> zero_dev(rec.num_cells(), 0.0);
    std::vector<double> pred;
    l_fwd.multiply(zero_dev, pred, 1);
    for (double v : pred) CHECK(v == 0.0);
  }

  SUBCASE("swapping the pair order negates rows exactly") {
    for (std::int64_t r = 0; r < l_fwd.rows; ++r) {
      REQUIRE(l_fwd.indptr[r + 1] - l_fwd.indptr[r] == l_rev.indptr[r + 1] - l_rev.indptr[r]);
      for (std::int64_t k = l_fwd.indptr[r]; k < l_fwd.indptr[r + 1]; ++k) {
        CHECK(l_fwd.colidx[k] == l_rev.colidx[k]);
        CHECK(l_fwd.values[k] == doctest::Approx(-l_rev.values[k]).epsilon(1e-15));
      }
    }
  }

  SUBCASE("an off-center inclusion flips the predicted sign under pair swap") {
    std::vector<double> dev(rec.num_cells(), 0.0);
    // Slowness bump left of center, above the deepest pixels.
    for (int i = 4; i < 9; ++i) {
      for (int j = 6; j < 11; ++j) dev[rec.flat_index(i, j)] = 2e-5;
    }
    std::vector<double> pf, pr;
    l_fwd.multiply(dev, pf, 1);
    l_rev.multiply(dev, pr, 1);
    for (std::int64_t r = 0; r < l_fwd.rows; ++r) {
      CHECK(pf[r] == doctest::Approx(-pr[r]).epsilon(1e-12));
    }
  }

  SUBCASE("row sums equal the signed four-path lengths") {
    for (std::int64_t r = 0; r < l_fwd.rows; ++r) {
      CHECK(std::abs(l_fwd.row_sum(r) - l_fwd.euclid_length[r]) <= 1e-9 * 60e-3);
    }
  }

  SUBCASE("identical pair indices are rejected") {
    CHECK_THROWS_AS(build_L({{2, 2, 0.0}}, pixels, rec, params, 1), ConfigError);
  }
}

TEST_CASE("fused time tracing matches row times") {
  const ReconGrid g = make_grid(16, 16, 1e-3, 1e-3, -8e-3, 0.0);
  std::mt19937_64 rng(31);
  SlownessMap map;
  map.grid = g;
  map.sigma.resize(g.num_cells());
  std::uniform_real_distribution<double> s(1.0 / 1600.0, 1.0 / 1450.0);
  for (auto& v : map.sigma) v = s(rng);

  std::uniform_real_distribution<double> ux(-12e-3, 12e-3);
  std::uniform_real_distribution<double> uz(-2e-3, 20e-3);
  const double sigma_out = 1.0 / 1500.0;
  for (int trial = 0; trial < 60; ++trial) {
    const Vec2 a = {ux(rng), uz(rng)};
    const Vec2 b = {ux(rng), uz(rng)};
    const TraceResult r = trace_ray_clipped(a, b, g);
    double expect = r.outside_length * sigma_out;
    for (std::size_t k = 0; k < r.cols.size(); ++k) expect += r.lens[k] * map.sigma[r.cols[k]];
    CHECK(trace_time(a, b, map, sigma_out) == doctest::Approx(expect).epsilon(1e-12));
  }
}
