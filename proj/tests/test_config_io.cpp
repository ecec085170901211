////////////////////////////////////////////////////////////////////////////////
// Copyright 2026 the sosbeam project developers.
// SPDX-License-Identifier: Apache-2.0
//
// sosbeam: plane-wave ultrasound beamforming with local speed-of-sound maps
////////////////////////////////////////////////////////////////////////////////

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "sosbeam/config.hpp"
#include "sosbeam/io.hpp"
#include "sosbeam/pipeline.hpp"

using namespace sosbeam;

TEST_CASE("default configuration is valid and round-trips through JSON") {
  const Config cfg = Config::defaults();
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.acq.tx_angles.size() == 11);
  CHECK(cfg.acq.sos_angles.size() == 13);
  CHECK(cfg.recon.lambda == doctest::Approx(6.5e-2));
  CHECK(cfg.tracking.scale_factor == doctest::Approx(1.5));
  CHECK(cfg.display_grid.dx == doctest::Approx(37.5e-6));
  CHECK(cfg.display_grid.dz == doctest::Approx(75e-6));

  const std::string text = cfg.to_json_text();
  const Config back = Config::from_json_text(text);
  CHECK(back.acq.f0 == cfg.acq.f0);
  CHECK(back.acq.tx_angles == cfg.acq.tx_angles);
  CHECK(back.recon_grid.cell_w == cfg.recon_grid.cell_w);
  CHECK(back.phantom.inclusion.sos == cfg.phantom.inclusion.sos);
  CHECK(back.tracking.window_ax == cfg.tracking.window_ax);
  CHECK(back.seed == cfg.seed);
}

TEST_CASE("config errors carry the config category") {
  CHECK_THROWS_AS(Config::from_json_text("{ not json"), ConfigError);
  CHECK_THROWS_AS(Config::from_json_text(R"({"acquisition": {"sound_speed": "fast"}})"),
                  ConfigError);
  CHECK_THROWS_AS(Config::from_json_text(R"({"acquisition": {"sound_speed": 900.0}})"),
                  ConfigError);
  CHECK_THROWS_AS(Config::from_json_text(R"({"apodization": {"window": "hamming"}})"),
                  ConfigError);
  // Partial override keeps the other defaults.
  const Config cfg = Config::from_json_text(R"({"acquisition": {"sound_speed": 1540.0}})");
  CHECK(cfg.acq.c0 == 1540.0);
  CHECK(cfg.acq.f0 == 5e6);
}

TEST_CASE("default pair planning: symmetric plus adjacent with PSF assignment") {
  const Config cfg = Config::defaults();
  const std::vector<PlannedPair> pairs = cfg.make_pairs();
  // 6 symmetric pairs and 12 adjacent pairs survive the default acceptance.
  CHECK(pairs.size() == 18);
  int symmetric = 0;
  for (const auto& pp : pairs) {
    const double ti = cfg.acq.sos_angles[pp.pair.i];
    const double tj = cfg.acq.sos_angles[pp.pair.j];
    if (std::abs(ti + tj) < 1e-12) {
      ++symmetric;
      CHECK(pp.pair.theta_psf == 0.0);  // symmetric pairs center at zero
    }
    // The assigned PSF angle is the nearest of the configured three.
    const double mean = 0.5 * (ti + tj);
    for (double candidate : cfg.tracking.theta_psf) {
      CHECK(std::abs(pp.pair.theta_psf - mean) <= std::abs(candidate - mean) + 1e-12);
    }
  }
  CHECK(symmetric == 6);

  // A tight acceptance limit drops pairs needing steep receive steering.
  Config tight = cfg;
  tight.apod.max_rx_angle = deg_to_rad(12.0);
  CHECK(tight.make_pairs().size() < pairs.size());
}

TEST_CASE("csv matrix round trip") {
  ImagingGrid g;
  g.nx = 5;
  g.nz = 4;
  g.dx = 1e-4;
  g.dz = 2e-4;
  g.x0 = -2e-4;
  g.z0 = 1e-3;
  std::vector<double> values(g.num_pixels());
  std::mt19937_64 rng(3);
  for (auto& v : values) v = std::uniform_real_distribution<double>(-1, 1)(rng);
  const std::string path = "csv_roundtrip.csv";
  write_csv_matrix(path, g, values);
  ImagingGrid g2;
  const std::vector<double> back = read_csv_matrix(path, g2);
  CHECK(g2.nx == g.nx);
  CHECK(g2.nz == g.nz);
  CHECK(g2.dx == g.dx);
  CHECK(back == values);
  std::remove(path.c_str());
}

TEST_CASE("rf file round trip quantizes to float32") {
  RfChannelData rf;
  rf.angle = deg_to_rad(5.0);
  rf.fs = 40e6;
  rf.f0 = 5e6;
  rf.num_channels = 3;
  rf.num_samples = 16;
  rf.samples.resize(48);
  std::mt19937_64 rng(4);
  for (auto& v : rf.samples) v = std::uniform_real_distribution<double>(-1, 1)(rng);
  const std::string path = "rf_roundtrip.bin";
  write_rf(path, rf);
  const RfChannelData back = read_rf(path);
  CHECK(back.num_channels == rf.num_channels);
  CHECK(back.num_samples == rf.num_samples);
  CHECK(back.angle == rf.angle);
  CHECK(back.fs == rf.fs);
  for (std::size_t k = 0; k < rf.samples.size(); ++k) {
    CHECK(back.samples[k] == doctest::Approx(rf.samples[k]).epsilon(1e-6));
    CHECK(back.samples[k] == static_cast<double>(static_cast<float>(rf.samples[k])));
  }
  std::remove(path.c_str());
}

TEST_CASE("frame and measurement files round trip") {
  BeamformedFrame frame;
  frame.grid.nx = 4;
  frame.grid.nz = 6;
  frame.grid.dx = 1e-4;
  frame.grid.dz = 1e-4;
  frame.grid.x0 = 0.0;
  frame.grid.z0 = 1e-3;
  frame.tx_angle = 0.1;
  frame.rx_steer = -0.05;
  frame.rf.resize(frame.grid.num_pixels());
  for (std::size_t k = 0; k < frame.rf.size(); ++k) {
    frame.rf[k] = static_cast<float>(std::sin(0.1 * k));
  }
  const std::string fpath = "frame_roundtrip.bin";
  write_frame(fpath, frame);
  const BeamformedFrame fback = read_frame(fpath);
  CHECK(fback.grid.nx == frame.grid.nx);
  CHECK(fback.tx_angle == frame.tx_angle);
  CHECK(fback.rx_steer == frame.rx_steer);
  for (std::size_t k = 0; k < frame.rf.size(); ++k) CHECK(fback.rf[k] == frame.rf[k]);
  std::remove(fpath.c_str());

  MeasurementFile mf;
  mf.grid = frame.grid;
  for (int p = 0; p < 2; ++p) {
    AnglePair pair{p, p + 1, 0.1 * p};
    DisplacementMap m;
    m.grid = mf.grid;
    m.dtau.assign(mf.grid.num_pixels(), 1e-9 * (p + 1));
    m.quality.assign(mf.grid.num_pixels(), 0.9);
    m.valid.assign(mf.grid.num_pixels(), 1);
    m.valid[2] = 0;
    mf.pairs.push_back(pair);
    mf.maps.push_back(m);
  }
  const std::string mpath = "meas_roundtrip.bin";
  write_measurements(mpath, mf);
  const MeasurementFile mback = read_measurements(mpath);
  CHECK(mback.pairs.size() == 2);
  CHECK(mback.pairs[1].j == 2);
  CHECK(mback.maps[0].dtau == mf.maps[0].dtau);
  CHECK(mback.maps[1].valid == mf.maps[1].valid);
  std::remove(mpath.c_str());
}

TEST_CASE("slowness map csv round trip keeps meters per second") {
  ReconGrid g;
  g.nx = 6;
  g.nz = 5;
  g.cell_w = 0.5e-3;
  g.cell_h = 0.6e-3;
  g.x0 = -1.5e-3;
  g.z0 = 1e-3;
  SlownessMap map = SlownessMap::constant(g, 1.0 / 1500.0);
  map.sigma[7] = 1.0 / 1545.0;
  const std::string path = "sos_roundtrip.csv";
  write_sos_csv(path, map);
  const SlownessMap back = read_sos_csv(path);
  CHECK(back.grid.nx == g.nx);
  CHECK(back.grid.x0 == doctest::Approx(g.x0).epsilon(1e-12));
  for (std::size_t k = 0; k < map.sigma.size(); ++k) {
    CHECK(back.sigma[k] == doctest::Approx(map.sigma[k]).epsilon(1e-12));
  }
  std::remove(path.c_str());
}

TEST_CASE("pgm export writes the expected header and size") {
  const std::string path = "test.pgm";
  std::vector<double> db(12, -10.0);
  db[5] = 0.0;
  write_pgm(path, 3, 4, db, 50.0);
  const std::string content = read_text_file(path);
  CHECK(content.rfind("P5\n3 4\n255\n", 0) == 0);
  CHECK(content.size() == 11 + 12);
  std::remove(path.c_str());
}

TEST_CASE("angle tags are stable and unique") {
  CHECK(angle_tag(deg_to_rad(-12.0)) == "m12000");
  CHECK(angle_tag(deg_to_rad(5.0)) == "p05000");
  CHECK(angle_tag(0.0) == "p00000");
  CHECK(angle_tag(deg_to_rad(2.5)) == "p02500");
}

TEST_CASE("phantom json round trip preserves scatterers") {
  ReconGrid region;
  region.nx = 1;
  region.nz = 1;
  region.cell_w = 16e-3;
  region.cell_h = 18e-3;
  region.x0 = -8e-3;
  region.z0 = 1e-3;
  PhantomConfig pcfg;
  pcfg.inclusion = {{0.0, 9e-3}, 3e-3, 1545.0};
  pcfg.scatterer_nx = 2;
  pcfg.scatterer_nz = 2;
  pcfg.scatterer_x0 = -3e-3;
  pcfg.scatterer_dx = 3e-3;
  pcfg.scatterer_z0 = 5e-3;
  pcfg.scatterer_dz = 5e-3;
  pcfg.speckle_density = 0.02;
  pcfg.medium_pitch = 0.5e-3;
  std::mt19937_64 rng(5);
  const Phantom ph = make_simulation_phantom(pcfg, region, rng);
  const std::string text = phantom_to_json_text(ph);
  const Phantom back = phantom_from_json_text(text);
  CHECK(back.point_scatterers.size() == ph.point_scatterers.size());
  CHECK(back.speckle.size() == ph.speckle.size());
  for (std::size_t k = 0; k < ph.speckle.size(); ++k) {
    CHECK(back.speckle[k].pos.x == ph.speckle[k].pos.x);
    CHECK(back.speckle[k].reflectivity == ph.speckle[k].reflectivity);
  }
  CHECK(back.true_map.grid.nx == ph.true_map.grid.nx);
  CHECK(back.true_map.sigma == ph.true_map.sigma);
  CHECK_THROWS_AS(phantom_from_json_text("{}"), IoError);
}

TEST_CASE("missing stage inputs surface as io errors") {
  const Config cfg = Config::defaults();
  CHECK_THROWS_AS(run_simulate(cfg, "definitely_missing_dir"), IoError);
  CHECK_THROWS_AS(run_evaluate(cfg, "definitely_missing_dir"), IoError);
}
