////////////////////////////////////////////////////////////////////////////////
// Copyright 2026 the sosbeam project developers.
// SPDX-License-Identifier: Apache-2.0
//
// sosbeam: plane-wave ultrasound beamforming with local speed-of-sound maps
// Pipeline configuration: defaults, JSON round-trip, derived objects.
////////////////////////////////////////////////////////////////////////////////

#include "sosbeam/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "sosbeam/errors.hpp"
#include "sosbeam/io.hpp"

namespace sosbeam {

using nlohmann::json;

namespace {

std::vector<double> angle_ramp_deg(double lo, double hi, double step) {
  std::vector<double> out;
  for (double a = lo; a <= hi + 1e-9; a += step) out.push_back(deg_to_rad(a));
  return out;
}

template <typename T>
void get_if(const json& j, const char* key, T& value) {
  if (j.contains(key)) value = j.at(key).get<T>();
}

json grid_to_json(const ImagingGrid& g) {
  return json{{"nx", g.nx}, {"nz", g.nz}, {"dx", g.dx},
              {"dz", g.dz}, {"x0", g.x0}, {"z0", g.z0}};
}

void grid_from_json(const json& j, ImagingGrid& g) {
  get_if(j, "nx", g.nx);
  get_if(j, "nz", g.nz);
  get_if(j, "dx", g.dx);
  get_if(j, "dz", g.dz);
  get_if(j, "x0", g.x0);
  get_if(j, "z0", g.z0);
}

}  // namespace

std::vector<double> SweepSpec::values() const {
  std::vector<double> out;
  for (double c = c_min; c <= c_max + 1e-9; c += step) out.push_back(c);
  return out;
}

Config Config::defaults() {
  Config cfg;

  cfg.acq.f0 = 5.0e6;
  cfg.acq.fs = 40.0e6;
  cfg.acq.c0 = 1500.0;
  cfg.acq.frac_bandwidth = 0.6;
  // The compounding set steps 5 degrees across +-25; the estimation subset
  // steps 2 degrees across +-12.
  cfg.acq.tx_angles = angle_ramp_deg(-25.0, 25.0, 5.0);
  cfg.acq.sos_angles = angle_ramp_deg(-12.0, 12.0, 2.0);

  // Region box: 25.04 mm x 38.08 mm starting just below the array.
  cfg.recon_grid.nx = 64;
  cfg.recon_grid.nz = 64;
  cfg.recon_grid.x0 = -12.52e-3;
  cfg.recon_grid.z0 = 1.96e-3;
  cfg.recon_grid.cell_w = 25.04e-3 / 64;
  cfg.recon_grid.cell_h = 38.08e-3 / 64;

  cfg.display_grid.nx = 667;
  cfg.display_grid.nz = 507;
  cfg.display_grid.dx = 37.5e-6;
  cfg.display_grid.dz = 75.0e-6;
  cfg.display_grid.x0 = -12.5e-3;
  cfg.display_grid.z0 = 2.0e-3;

  cfg.tracking_grid.nx = 167;
  cfg.tracking_grid.nz = 1012;
  cfg.tracking_grid.dx = 150.0e-6;
  cfg.tracking_grid.dz = 37.5e-6;
  cfg.tracking_grid.x0 = -12.5e-3;
  cfg.tracking_grid.z0 = 2.0e-3;

  return cfg;
}

void Config::validate() const {
  acq.validate();
  apod.validate();
  display_grid.validate();
  tracking_grid.validate();
  recon_grid.validate();
  tracking.validate();
  if (!recon_grid.covers(display_grid)) {
    throw ConfigError("recon grid does not cover the display grid");
  }
  if (!recon_grid.covers(tracking_grid)) {
    throw ConfigError("recon grid does not cover the tracking grid");
  }
  if (recon_grid.cell_w < display_grid.dx || recon_grid.cell_h < display_grid.dz) {
    throw ConfigError("recon grid must be coarser than the display grid");
  }
  if (acq.sos_angles.size() < 2) throw ConfigError("need at least two SoS-estimation angles");
  if (measurement.decimate_lateral < 1 || measurement.decimate_axial < 1) {
    throw ConfigError("decimation factors must be >= 1");
  }
  if (recon.nx != recon_grid.nx || recon.nz != recon_grid.nz) {
    throw ConfigError("recon grid counts disagree between sections");
  }
  (void)make_array();
}

std::vector<PlannedPair> Config::make_pairs() const {
  const std::vector<double>& angles = acq.sos_angles;
  const int n = static_cast<int>(angles.size());
  std::vector<std::pair<int, int>> raw;

  // Symmetric combinations (-theta, +theta), ascending magnitude.
  for (int i = 0; i < n; ++i) {
    for (int j = n - 1; j > i; --j) {
      if (std::abs(angles[i] + angles[j]) < 1e-12 && std::abs(angles[i]) > 1e-12) {
        raw.emplace_back(i, j);
      }
    }
  }
  std::sort(raw.begin(), raw.end(),
            [&](auto a, auto b) { return angles[a.first] < angles[b.first]; });
  // Adjacent combinations.
  for (int i = 0; i + 1 < n; ++i) raw.emplace_back(i, i + 1);

  std::vector<PlannedPair> planned;
  for (auto [i, j] : raw) {
    const double mean = 0.5 * (angles[i] + angles[j]);
    int best_psf = 0;
    for (int p = 1; p < static_cast<int>(tracking.theta_psf.size()); ++p) {
      if (std::abs(tracking.theta_psf[p] - mean) <
          std::abs(tracking.theta_psf[best_psf] - mean)) {
        best_psf = p;
      }
    }
    const double psf = tracking.theta_psf.empty() ? 0.0 : tracking.theta_psf[best_psf];
    const AlignedApertures aligned =
        psf_aligned_apertures(angles[i], angles[j], psf, apod.max_rx_angle);
    if (!aligned.ok) continue;  // beyond the aperture acceptance: drop the pair
    PlannedPair pp;
    pp.pair.i = i;
    pp.pair.j = j;
    pp.pair.theta_psf = psf;
    pp.psf_idx = best_psf;
    planned.push_back(pp);
  }
  if (planned.empty()) throw ConfigError("no tracked angle pairs survive the acceptance limit");
  return planned;
}

std::vector<double> Config::all_angles() const {
  std::set<double> set(acq.tx_angles.begin(), acq.tx_angles.end());
  set.insert(acq.sos_angles.begin(), acq.sos_angles.end());
  return {set.begin(), set.end()};
}

std::string Config::to_json_text() const {
  json j;
  j["array"] = {{"num_elements", array.num_elements}, {"pitch", array.pitch}};
  j["acquisition"] = {{"center_frequency", acq.f0},
                      {"sampling_rate", acq.fs},
                      {"sound_speed", acq.c0},
                      {"fractional_bandwidth", acq.frac_bandwidth},
                      {"tx_angles", acq.tx_angles},
                      {"sos_angles", acq.sos_angles}};
  j["apodization"] = {{"f_number", apod.f_number},
                      {"window", apod.window == ApodizationSpec::Window::hann ? "hann" : "rect"},
                      {"max_rx_angle", apod.max_rx_angle}};
  j["grids"] = {{"display", grid_to_json(display_grid)},
                {"tracking", grid_to_json(tracking_grid)},
                {"recon",
                 {{"nx", recon_grid.nx},
                  {"nz", recon_grid.nz},
                  {"cell_w", recon_grid.cell_w},
                  {"cell_h", recon_grid.cell_h},
                  {"x0", recon_grid.x0},
                  {"z0", recon_grid.z0}}}};
  j["phantom"] = {{"background_sos", phantom.background_sos},
                  {"inclusion",
                   {{"x", phantom.inclusion.center.x},
                    {"z", phantom.inclusion.center.z},
                    {"radius", phantom.inclusion.radius},
                    {"sos", phantom.inclusion.sos}}},
                  {"scatterer_nx", phantom.scatterer_nx},
                  {"scatterer_nz", phantom.scatterer_nz},
                  {"scatterer_x0", phantom.scatterer_x0},
                  {"scatterer_dx", phantom.scatterer_dx},
                  {"scatterer_z0", phantom.scatterer_z0},
                  {"scatterer_dz", phantom.scatterer_dz},
                  {"point_reflectivity", phantom.point_reflectivity},
                  {"speckle_density", phantom.speckle_density},
                  {"speckle_amp_lo", phantom.speckle_amp_lo},
                  {"speckle_amp_hi", phantom.speckle_amp_hi},
                  {"medium_pitch", phantom.medium_pitch}};
  j["tracking"] = {{"window_ax", tracking.window_ax},
                   {"window_lat", tracking.window_lat},
                   {"search", tracking.search},
                   {"theta_psf", tracking.theta_psf},
                   {"scale_factor", tracking.scale_factor},
                   {"projection",
                    tracking.projection == TrackingConfig::Projection::cosine ? "cosine"
                                                                              : "inverse_cosine"},
                   {"quality_threshold", tracking.quality_threshold},
                   {"subpixel",
                    tracking.subpixel == TrackingConfig::Subpixel::cosine_fit ? "cosine_fit"
                                                                              : "parabolic"}};
  j["measurement"] = {{"decimate_lateral", measurement.decimate_lateral},
                      {"decimate_axial", measurement.decimate_axial},
                      {"min_valid_fraction", measurement.min_valid_fraction}};
  j["recon"] = {{"nx", recon.nx},
                {"nz", recon.nz},
                {"lambda", recon.lambda},
                {"kappa_h", recon.kappa_h},
                {"kappa_v", recon.kappa_v},
                {"kappa_d", recon.kappa_d},
                {"max_iters", recon.solve.max_iters},
                {"continuation_stages", recon.solve.continuation_stages},
                {"rel_obj_tol", recon.solve.rel_obj_tol},
                {"lbfgs_memory", recon.solve.lbfgs_memory},
                {"data_eps_scale", recon.solve.data_eps_scale},
                {"reg_eps_scale", recon.solve.reg_eps_scale},
                {"cache_matrices", recon.cache_matrices}};
  j["simulation"] = {{"table_nodes_x", sim.table_nodes_x},
                     {"table_nodes_z", sim.table_nodes_z},
                     {"noise_std", sim.noise_std}};
  j["metrics"] = {{"roi_radius", metrics.roi_radius},
                  {"sweep",
                   {{"c_min", metrics.sweep.c_min},
                    {"c_max", metrics.sweep.c_max},
                    {"step", metrics.sweep.step}}},
                  {"evaluate_true_map", metrics.evaluate_true_map}};
  j["beamform"] = {{"pass", beamform.pass}, {"source", beamform.source}, {"label", beamform.label}};
  j["output"] = {{"dynamic_range_db", output.dynamic_range_db},
                 {"export_pgm", output.export_pgm}};
  j["seed"] = seed;
  j["threads"] = threads;
  return j.dump(2) + "\n";
}

Config Config::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  Config cfg = Config::defaults();
  try {
    if (j.contains("array")) {
      get_if(j["array"], "num_elements", cfg.array.num_elements);
      get_if(j["array"], "pitch", cfg.array.pitch);
    }
    if (j.contains("acquisition")) {
      const json& a = j["acquisition"];
      get_if(a, "center_frequency", cfg.acq.f0);
      get_if(a, "sampling_rate", cfg.acq.fs);
      get_if(a, "sound_speed", cfg.acq.c0);
      get_if(a, "fractional_bandwidth", cfg.acq.frac_bandwidth);
      get_if(a, "tx_angles", cfg.acq.tx_angles);
      get_if(a, "sos_angles", cfg.acq.sos_angles);
    }
    if (j.contains("apodization")) {
      const json& a = j["apodization"];
      get_if(a, "f_number", cfg.apod.f_number);
      get_if(a, "max_rx_angle", cfg.apod.max_rx_angle);
      if (a.contains("window")) {
        const std::string w = a["window"].get<std::string>();
        if (w == "hann") {
          cfg.apod.window = ApodizationSpec::Window::hann;
        } else if (w == "rect") {
          cfg.apod.window = ApodizationSpec::Window::rect;
        } else {
          throw ConfigError("unknown apodization window: " + w);
        }
      }
    }
    if (j.contains("grids")) {
      const json& g = j["grids"];
      if (g.contains("display")) grid_from_json(g["display"], cfg.display_grid);
      if (g.contains("tracking")) grid_from_json(g["tracking"], cfg.tracking_grid);
      if (g.contains("recon")) {
        const json& r = g["recon"];
        get_if(r, "nx", cfg.recon_grid.nx);
        get_if(r, "nz", cfg.recon_grid.nz);
        get_if(r, "cell_w", cfg.recon_grid.cell_w);
        get_if(r, "cell_h", cfg.recon_grid.cell_h);
        get_if(r, "x0", cfg.recon_grid.x0);
        get_if(r, "z0", cfg.recon_grid.z0);
        cfg.recon.nx = cfg.recon_grid.nx;
        cfg.recon.nz = cfg.recon_grid.nz;
      }
    }
    if (j.contains("phantom")) {
      const json& p = j["phantom"];
      get_if(p, "background_sos", cfg.phantom.background_sos);
      if (p.contains("inclusion")) {
        const json& inc = p["inclusion"];
        get_if(inc, "x", cfg.phantom.inclusion.center.x);
        get_if(inc, "z", cfg.phantom.inclusion.center.z);
        get_if(inc, "radius", cfg.phantom.inclusion.radius);
        get_if(inc, "sos", cfg.phantom.inclusion.sos);
      }
      get_if(p, "scatterer_nx", cfg.phantom.scatterer_nx);
      get_if(p, "scatterer_nz", cfg.phantom.scatterer_nz);
      get_if(p, "scatterer_x0", cfg.phantom.scatterer_x0);
      get_if(p, "scatterer_dx", cfg.phantom.scatterer_dx);
      get_if(p, "scatterer_z0", cfg.phantom.scatterer_z0);
      get_if(p, "scatterer_dz", cfg.phantom.scatterer_dz);
      get_if(p, "point_reflectivity", cfg.phantom.point_reflectivity);
      get_if(p, "speckle_density", cfg.phantom.speckle_density);
      get_if(p, "speckle_amp_lo", cfg.phantom.speckle_amp_lo);
      get_if(p, "speckle_amp_hi", cfg.phantom.speckle_amp_hi);
      get_if(p, "medium_pitch", cfg.phantom.medium_pitch);
    }
    if (j.contains("tracking")) {
      const json& t = j["tracking"];
      get_if(t, "window_ax", cfg.tracking.window_ax);
      get_if(t, "window_lat", cfg.tracking.window_lat);
      get_if(t, "search", cfg.tracking.search);
      get_if(t, "theta_psf", cfg.tracking.theta_psf);
      get_if(t, "scale_factor", cfg.tracking.scale_factor);
      get_if(t, "quality_threshold", cfg.tracking.quality_threshold);
      if (t.contains("projection")) {
        const std::string p = t["projection"].get<std::string>();
        if (p == "cosine") {
          cfg.tracking.projection = TrackingConfig::Projection::cosine;
        } else if (p == "inverse_cosine") {
          cfg.tracking.projection = TrackingConfig::Projection::inverse_cosine;
        } else {
          throw ConfigError("unknown projection: " + p);
        }
      }
      if (t.contains("subpixel")) {
        const std::string s = t["subpixel"].get<std::string>();
        if (s == "cosine_fit") {
          cfg.tracking.subpixel = TrackingConfig::Subpixel::cosine_fit;
        } else if (s == "parabolic") {
          cfg.tracking.subpixel = TrackingConfig::Subpixel::parabolic;
        } else {
          throw ConfigError("unknown subpixel mode: " + s);
        }
      }
    }
    if (j.contains("measurement")) {
      const json& m = j["measurement"];
      get_if(m, "decimate_lateral", cfg.measurement.decimate_lateral);
      get_if(m, "decimate_axial", cfg.measurement.decimate_axial);
      get_if(m, "min_valid_fraction", cfg.measurement.min_valid_fraction);
    }
    if (j.contains("recon")) {
      const json& r = j["recon"];
      get_if(r, "nx", cfg.recon.nx);
      get_if(r, "nz", cfg.recon.nz);
      get_if(r, "lambda", cfg.recon.lambda);
      get_if(r, "kappa_h", cfg.recon.kappa_h);
      get_if(r, "kappa_v", cfg.recon.kappa_v);
      get_if(r, "kappa_d", cfg.recon.kappa_d);
      get_if(r, "max_iters", cfg.recon.solve.max_iters);
      get_if(r, "continuation_stages", cfg.recon.solve.continuation_stages);
      get_if(r, "rel_obj_tol", cfg.recon.solve.rel_obj_tol);
      get_if(r, "lbfgs_memory", cfg.recon.solve.lbfgs_memory);
      get_if(r, "data_eps_scale", cfg.recon.solve.data_eps_scale);
      get_if(r, "reg_eps_scale", cfg.recon.solve.reg_eps_scale);
      get_if(r, "cache_matrices", cfg.recon.cache_matrices);
    }
    if (j.contains("simulation")) {
      const json& s = j["simulation"];
      get_if(s, "table_nodes_x", cfg.sim.table_nodes_x);
      get_if(s, "table_nodes_z", cfg.sim.table_nodes_z);
      get_if(s, "noise_std", cfg.sim.noise_std);
    }
    if (j.contains("metrics")) {
      const json& m = j["metrics"];
      get_if(m, "roi_radius", cfg.metrics.roi_radius);
      if (m.contains("sweep")) {
        get_if(m["sweep"], "c_min", cfg.metrics.sweep.c_min);
        get_if(m["sweep"], "c_max", cfg.metrics.sweep.c_max);
        get_if(m["sweep"], "step", cfg.metrics.sweep.step);
      }
      get_if(m, "evaluate_true_map", cfg.metrics.evaluate_true_map);
    }
    if (j.contains("beamform")) {
      get_if(j["beamform"], "pass", cfg.beamform.pass);
      get_if(j["beamform"], "source", cfg.beamform.source);
      get_if(j["beamform"], "label", cfg.beamform.label);
    }
    if (j.contains("output")) {
      get_if(j["output"], "dynamic_range_db", cfg.output.dynamic_range_db);
      get_if(j["output"], "export_pgm", cfg.output.export_pgm);
    }
    get_if(j, "seed", cfg.seed);
    get_if(j, "threads", cfg.threads);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field has the wrong type: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

Config Config::load(const std::string& path) {
  if (path.empty()) {
    Config cfg = Config::defaults();
    cfg.validate();
    return cfg;
  }
  return Config::from_json_text(read_text_file(path));
}

std::string phantom_to_json_text(const Phantom& phantom) {
  json j;
  const PhantomConfig& c = phantom.cfg;
  j["config"] = {{"background_sos", c.background_sos},
                 {"inclusion",
                  {{"x", c.inclusion.center.x},
                   {"z", c.inclusion.center.z},
                   {"radius", c.inclusion.radius},
                   {"sos", c.inclusion.sos}}},
                 {"scatterer_nx", c.scatterer_nx},
                 {"scatterer_nz", c.scatterer_nz},
                 {"scatterer_x0", c.scatterer_x0},
                 {"scatterer_dx", c.scatterer_dx},
                 {"scatterer_z0", c.scatterer_z0},
                 {"scatterer_dz", c.scatterer_dz},
                 {"point_reflectivity", c.point_reflectivity},
                 {"speckle_density", c.speckle_density},
                 {"speckle_amp_lo", c.speckle_amp_lo},
                 {"speckle_amp_hi", c.speckle_amp_hi},
                 {"medium_pitch", c.medium_pitch}};
  j["medium_grid"] = {{"nx", phantom.true_map.grid.nx},
                      {"nz", phantom.true_map.grid.nz},
                      {"cell_w", phantom.true_map.grid.cell_w},
                      {"cell_h", phantom.true_map.grid.cell_h},
                      {"x0", phantom.true_map.grid.x0},
                      {"z0", phantom.true_map.grid.z0}};
  auto scatterers_to_json = [](const std::vector<PointScatterer>& list) {
    json arr = json::array();
    for (const auto& s : list) arr.push_back({s.pos.x, s.pos.z, s.reflectivity});
    return arr;
  };
  j["point_scatterers"] = scatterers_to_json(phantom.point_scatterers);
  j["speckle"] = scatterers_to_json(phantom.speckle);
  return j.dump() + "\n";
}

Phantom phantom_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(std::string("phantom file is not valid JSON: ") + e.what());
  }
  Phantom ph;
  try {
    const json& c = j.at("config");
    ph.cfg.background_sos = c.at("background_sos").get<double>();
    ph.cfg.inclusion.center.x = c.at("inclusion").at("x").get<double>();
    ph.cfg.inclusion.center.z = c.at("inclusion").at("z").get<double>();
    ph.cfg.inclusion.radius = c.at("inclusion").at("radius").get<double>();
    ph.cfg.inclusion.sos = c.at("inclusion").at("sos").get<double>();
    ph.cfg.scatterer_nx = c.at("scatterer_nx").get<int>();
    ph.cfg.scatterer_nz = c.at("scatterer_nz").get<int>();
    ph.cfg.scatterer_x0 = c.at("scatterer_x0").get<double>();
    ph.cfg.scatterer_dx = c.at("scatterer_dx").get<double>();
    ph.cfg.scatterer_z0 = c.at("scatterer_z0").get<double>();
    ph.cfg.scatterer_dz = c.at("scatterer_dz").get<double>();
    ph.cfg.point_reflectivity = c.at("point_reflectivity").get<double>();
    ph.cfg.speckle_density = c.at("speckle_density").get<double>();
    ph.cfg.speckle_amp_lo = c.at("speckle_amp_lo").get<double>();
    ph.cfg.speckle_amp_hi = c.at("speckle_amp_hi").get<double>();
    ph.cfg.medium_pitch = c.at("medium_pitch").get<double>();
    const json& g = j.at("medium_grid");
    ph.true_map.grid.nx = g.at("nx").get<int>();
    ph.true_map.grid.nz = g.at("nz").get<int>();
    ph.true_map.grid.cell_w = g.at("cell_w").get<double>();
    ph.true_map.grid.cell_h = g.at("cell_h").get<double>();
    ph.true_map.grid.x0 = g.at("x0").get<double>();
    ph.true_map.grid.z0 = g.at("z0").get<double>();
    auto scatterers_from_json = [](const json& arr) {
      std::vector<PointScatterer> list;
      for (const auto& e : arr) {
        list.push_back({{e.at(0).get<double>(), e.at(1).get<double>()}, e.at(2).get<double>()});
      }
      return list;
    };
    ph.point_scatterers = scatterers_from_json(j.at("point_scatterers"));
    ph.speckle = scatterers_from_json(j.at("speckle"));
  } catch (const json::exception& e) {
    throw IoError(std::string("phantom file is missing fields: ") + e.what());
  }
  ph.true_map = ph.sample_on(ph.true_map.grid);
  return ph;
}

}  // namespace sosbeam
