////////////////////////////////////////////////////////////////////////////////
// Copyright 2026 the sosbeam project developers.
// SPDX-License-Identifier: Apache-2.0
//
// sosbeam: plane-wave ultrasound beamforming with local speed-of-sound maps
// File-coupled pipeline stages shared by the CLI and the test suites.
////////////////////////////////////////////////////////////////////////////////

#include "sosbeam/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <random>
#include <set>

#include <json.hpp>

#include "sosbeam/envelope.hpp"
#include "sosbeam/io.hpp"

namespace sosbeam {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void log_stage(bool verbose, const std::string& msg) {
  if (verbose) std::fprintf(stderr, "[sosbeam] %s\n", msg.c_str());
}

void ensure_dir(const std::string& path) {
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec) throw IoError("cannot create directory " + path);
}

std::string frame_path(const std::string& out, int angle_idx, int psf_idx) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "/frames/tracking/fr_a%02d_p%d.bin", angle_idx, psf_idx);
  return out + buf;
}

SlownessMap load_adaptive_map(const Config& cfg, const std::string& out) {
  const std::string path = out + "/recon/sos_map.csv";
  if (!fs::exists(path)) throw IoError("no reconstructed map at " + path + "; run reconstruct first");
  SlownessMap map = read_sos_csv(path);
  if (map.grid.nx != cfg.recon_grid.nx || map.grid.nz != cfg.recon_grid.nz) {
    throw ConfigError("reconstructed map grid does not match the configuration");
  }
  return map;
}

void export_envelope(const Config& cfg, const std::string& path_base, const EnvelopeImage& env) {
  write_csv_matrix(path_base + ".csv", env.grid, env.mag);
  if (cfg.output.export_pgm) {
    const std::vector<double> db = log_compress(env, cfg.output.dynamic_range_db);
    write_pgm(path_base + ".pgm", env.grid.nx, env.grid.nz, db, cfg.output.dynamic_range_db);
  }
}

// Beamforms one display pass (all compounding angles) and persists the
// compound frame plus its envelope.
void display_pass(const Config& cfg, const std::string& out, const std::string& label,
                  const SlownessMap& map, double sigma_steer, double sigma_outside,
                  bool verbose) {
  const TransducerArray array = cfg.make_array();
  const std::vector<RfChannelData> rf_set = load_rf_set(out, cfg.acq.tx_angles);
  TravelTimeTables::Params nodes;
  nodes.nodes_x = cfg.sim.table_nodes_x;
  nodes.nodes_z = cfg.sim.table_nodes_z;
  const DelayCalculator calc(map, array, cfg.acq.tx_angles, sigma_steer, sigma_outside, nodes,
                             cfg.threads);
  std::vector<BeamformedFrame> frames;
  for (std::size_t a = 0; a < rf_set.size(); ++a) {
    frames.push_back(das_streamed(rf_set[a], calc, static_cast<int>(a), cfg.display_grid,
                                  cfg.apod, array, 0.0, cfg.threads));
  }
  BeamformedFrame comp = compound(frames);
  comp.provenance = label;
  ensure_dir(out + "/frames/" + label);
  write_frame(out + "/frames/" + label + "/compound.bin", comp);
  export_envelope(cfg, out + "/frames/" + label + "/envelope", envelope(comp));
  log_stage(verbose, "beamformed display pass '" + label + "'");
}

std::string summary_line(const std::string& label, const ReportSummary& s) {
  std::string line = label;
  auto add = [&](const MetricSummary& m) {
    line += "," + format_double(m.mean * 1e6) + "," + format_double(m.stdev * 1e6) + "," +
            std::to_string(m.n);
  };
  add(s.fwhm);
  add(s.lateral_error);
  add(s.axial_error);
  line += "," + std::to_string(s.flagged);
  return line + "\n";
}

}  // namespace

std::string angle_tag(double angle_rad) {
  const long mdeg = std::lround(rad_to_deg(angle_rad) * 1000.0);
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%c%05ld", mdeg < 0 ? 'm' : 'p', std::labs(mdeg));
  return buf;
}

std::string rf_path(const std::string& out, double angle_rad) {
  return out + "/rf/rf_" + angle_tag(angle_rad) + ".bin";
}

std::vector<RfChannelData> load_rf_set(const std::string& out,
                                       const std::vector<double>& angles) {
  std::vector<RfChannelData> set;
  set.reserve(angles.size());
  for (double a : angles) set.push_back(read_rf(rf_path(out, a)));
  return set;
}

Phantom load_phantom(const std::string& out) {
  return phantom_from_json_text(read_text_file(out + "/phantom.json"));
}

SweepContext make_sweep_context(const Config& cfg, const TransducerArray& array) {
  SweepContext ctx;
  ctx.array = &array;
  ctx.acq = cfg.acq;
  ctx.apod = cfg.apod;
  ctx.grid = cfg.display_grid;
  ctx.recon_grid = cfg.recon_grid;
  ctx.table_nodes_x = cfg.sim.table_nodes_x;
  ctx.table_nodes_z = cfg.sim.table_nodes_z;
  ctx.roi_radius = cfg.metrics.roi_radius;
  ctx.threads = cfg.threads;
  return ctx;
}

void run_phantom(const Config& cfg, const std::string& out, bool verbose) {
  cfg.validate();
  ensure_dir(out);
  std::mt19937_64 rng(cfg.seed);
  const Phantom phantom = make_simulation_phantom(cfg.phantom, cfg.recon_grid, rng);
  write_text_file(out + "/phantom.json", phantom_to_json_text(phantom));
  write_text_file(out + "/effective_config.json", cfg.to_json_text());
  write_sos_csv(out + "/phantom_sos.csv", phantom.sample_on(cfg.recon_grid));
  log_stage(verbose, "phantom written: " + std::to_string(phantom.point_scatterers.size()) +
                         " point scatterers, " + std::to_string(phantom.speckle.size()) +
                         " speckle scatterers");
}

void run_simulate(const Config& cfg, const std::string& out, bool verbose) {
  cfg.validate();
  const Phantom phantom = load_phantom(out);
  const TransducerArray array = cfg.make_array();
  const std::vector<double> angles = cfg.all_angles();
  TravelTimeTables::Params nodes;
  nodes.nodes_x = cfg.sim.table_nodes_x;
  nodes.nodes_z = cfg.sim.table_nodes_z;
  const RfSynthesizer synth(phantom, array, cfg.acq, angles, nodes, cfg.threads);
  ensure_dir(out + "/rf");
  for (std::size_t a = 0; a < angles.size(); ++a) {
    write_rf(rf_path(out, angles[a]), synth.synthesize(static_cast<int>(a)));
    log_stage(verbose, "synthesized RF for angle tag " + angle_tag(angles[a]));
  }
}

void run_beamform(const Config& cfg, const std::string& out, bool verbose) {
  cfg.validate();
  if (cfg.beamform.pass == "tracking") {
    const TransducerArray array = cfg.make_array();
    const std::vector<PlannedPair> pairs = cfg.make_pairs();
    // Unique (angle, psf) frame keys over both pair sides.
    std::set<std::pair<int, int>> keys;
    for (const auto& pp : pairs) {
      keys.insert({pp.pair.i, pp.psf_idx});
      keys.insert({pp.pair.j, pp.psf_idx});
    }
    const SlownessMap map = SlownessMap::constant(cfg.recon_grid, cfg.acq.sigma0());
    TravelTimeTables::Params nodes;
    nodes.nodes_x = cfg.sim.table_nodes_x;
    nodes.nodes_z = cfg.sim.table_nodes_z;
    const DelayCalculator calc(map, array, cfg.acq.sos_angles, cfg.acq.sigma0(),
                               cfg.acq.sigma0(), nodes, cfg.threads);
    const std::vector<RfChannelData> rf_set = load_rf_set(out, cfg.acq.sos_angles);
    ensure_dir(out + "/frames/tracking");
    for (const auto& [angle_idx, psf_idx] : keys) {
      const double rx_steer =
          2.0 * cfg.tracking.theta_psf[psf_idx] - cfg.acq.sos_angles[angle_idx];
      const BeamformedFrame frame =
          das_streamed(rf_set[angle_idx], calc, angle_idx, cfg.tracking_grid, cfg.apod, array,
                       rx_steer, cfg.threads);
      write_frame(frame_path(out, angle_idx, psf_idx), frame);
    }
    log_stage(verbose, "beamformed " + std::to_string(keys.size()) + " tracking frames");
    return;
  }
  if (cfg.beamform.pass != "display") {
    throw ConfigError("beamform pass must be 'tracking' or 'display'");
  }

  const std::string& source = cfg.beamform.source;
  if (source == "global") {
    const std::string label = cfg.beamform.label.empty() ? "global" : cfg.beamform.label;
    display_pass(cfg, out, label, SlownessMap::constant(cfg.recon_grid, cfg.acq.sigma0()),
                 cfg.acq.sigma0(), cfg.acq.sigma0(), verbose);
  } else if (source == "adaptive") {
    const std::string label = cfg.beamform.label.empty() ? "adaptive" : cfg.beamform.label;
    display_pass(cfg, out, label, load_adaptive_map(cfg, out), cfg.acq.sigma0(),
                 cfg.acq.sigma0(), verbose);
  } else if (source == "true") {
    const std::string label = cfg.beamform.label.empty() ? "true" : cfg.beamform.label;
    const Phantom phantom = load_phantom(out);
    display_pass(cfg, out, label, phantom.sample_on(cfg.recon_grid), cfg.acq.sigma0(),
                 cfg.acq.sigma0(), verbose);
  } else if (source.rfind("c0:", 0) == 0) {
    const double c0 = std::stod(source.substr(3));
    if (c0 < 1000.0 || c0 > 2000.0) throw ConfigError("beamform c0 outside [1000, 2000] m/s");
    char label[32];
    std::snprintf(label, sizeof(label), "c0_%04d", static_cast<int>(std::lround(c0)));
    display_pass(cfg, out, cfg.beamform.label.empty() ? label : cfg.beamform.label,
                 SlownessMap::constant(cfg.recon_grid, 1.0 / c0), 1.0 / c0, 1.0 / c0, verbose);
  } else {
    throw ConfigError("unknown beamform source: " + source);
  }
}

void run_track(const Config& cfg, const std::string& out, bool verbose) {
  cfg.validate();
  const std::vector<PlannedPair> pairs = cfg.make_pairs();
  std::map<std::pair<int, int>, BeamformedFrame> frames;
  auto get_frame = [&](int angle_idx, int psf_idx) -> const BeamformedFrame& {
    const auto key = std::make_pair(angle_idx, psf_idx);
    auto it = frames.find(key);
    if (it == frames.end()) {
      it = frames.emplace(key, read_frame(frame_path(out, angle_idx, psf_idx))).first;
    }
    return it->second;
  };

  MeasurementFile mf;
  ensure_dir(out + "/track");
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const PlannedPair& pp = pairs[k];
    const BeamformedFrame& fa = get_frame(pp.pair.i, pp.psf_idx);
    const BeamformedFrame& fb = get_frame(pp.pair.j, pp.psf_idx);
    DisplacementMap dm = ncc_displacement(fa, fb, cfg.tracking, cfg.acq.sigma0(), cfg.threads);
    project_and_scale(dm, pp.pair.theta_psf, cfg.tracking);
    DisplacementMap dec = decimate(dm, cfg.measurement.decimate_lateral,
                                   cfg.measurement.decimate_axial,
                                   cfg.measurement.min_valid_fraction);
    if (k == 0) mf.grid = dec.grid;
    mf.pairs.push_back(pp.pair);
    mf.maps.push_back(std::move(dec));

    // Per-pair exports: delays in ns, quality as PGM.
    const DisplacementMap& m = mf.maps.back();
    std::vector<double> ns(m.dtau.size());
    for (std::size_t q = 0; q < ns.size(); ++q) ns[q] = m.valid[q] ? m.dtau[q] * 1e9 : 0.0;
    char name[48];
    std::snprintf(name, sizeof(name), "/track/dtau_pair%02zu.csv", k);
    write_csv_matrix(out + name, m.grid, ns);
    if (cfg.output.export_pgm) {
      std::vector<double> qdb(m.quality.size());
      for (std::size_t q = 0; q < qdb.size(); ++q) {
        qdb[q] = (std::clamp(m.quality[q], 0.0, 1.0) - 1.0) * cfg.output.dynamic_range_db;
      }
      std::snprintf(name, sizeof(name), "/track/quality_pair%02zu.pgm", k);
      write_pgm(out + name, m.grid.nx, m.grid.nz, qdb, cfg.output.dynamic_range_db);
    }
    log_stage(verbose, "tracked pair " + std::to_string(k));
  }
  write_measurements(out + "/track/measurements.bin", mf);
}

void run_reconstruct(const Config& cfg, const std::string& out, bool verbose) {
  cfg.validate();
  const MeasurementFile mf = read_measurements(out + "/track/measurements.bin");
  const TransducerArray array = cfg.make_array();
  const std::vector<Vec2> pixels = grid_pixel_positions(mf.grid);

  DiffPathParams params;
  params.sos_angles = cfg.acq.sos_angles;
  params.array = &array;
  params.apod = &cfg.apod;

  SparseRayMatrix L;
  const std::string cache_path = out + "/cache/L.srm";
  const std::int64_t want_rows = static_cast<std::int64_t>(mf.pairs.size()) * mf.grid.num_pixels();
  bool from_cache = false;
  if (cfg.recon.cache_matrices && fs::exists(cache_path)) {
    L = SparseRayMatrix::load(cache_path);
    from_cache = L.grid_hash == cfg.recon_grid.hash() && L.rows == want_rows;
  }
  if (!from_cache) {
    L = build_L(mf.pairs, pixels, cfg.recon_grid, params, cfg.threads);
    if (cfg.recon.cache_matrices) {
      ensure_dir(out + "/cache");
      L.save(cache_path);
    }
  }
  log_stage(verbose, "differential path matrix: " + std::to_string(L.rows) + " rows, " +
                         std::to_string(L.nnz()) + " nonzeros" +
                         (from_cache ? " (cached)" : ""));

  const MeasurementVector mv = build_measurement_vector(mf.maps);
  const Regularizer reg = build_regularizer(cfg.recon_grid, cfg.recon.kappa_h, cfg.recon.kappa_v,
                                            cfg.recon.kappa_d, cfg.recon.lambda);
  SolveOptions opt = cfg.recon.solve;
  opt.threads = cfg.threads;
  SolveReport report;
  const SlownessMap map =
      solve_slowness(L, mv.dtau, mv.valid, reg, cfg.acq.sigma0(), cfg.recon_grid, opt, &report);

  ensure_dir(out + "/recon");
  write_sos_csv(out + "/recon/sos_map.csv", map);
  if (cfg.output.export_pgm) {
    // SoS display window roughly centered on the background speed.
    std::vector<double> db(map.sigma.size());
    const double lo = cfg.phantom.background_sos - 10.0;
    const double hi = cfg.phantom.background_sos + 60.0;
    for (std::size_t k = 0; k < db.size(); ++k) {
      const double c = 1.0 / map.sigma[k];
      db[k] = (std::clamp((c - lo) / (hi - lo), 0.0, 1.0) - 1.0) * cfg.output.dynamic_range_db;
    }
    write_pgm(out + "/recon/sos_map.pgm", map.grid.nx, map.grid.nz, db,
              cfg.output.dynamic_range_db);
  }
  json rep;
  rep["objective"] = report.objective;
  rep["data_term"] = report.data_term;
  rep["reg_term"] = report.reg_term;
  rep["iterations"] = report.iterations;
  rep["converged"] = report.converged;
  rep["wall_time_s"] = report.wall_time_s;
  rep["trace_first"] = report.trace.empty() ? 0.0 : report.trace.front();
  rep["trace_last"] = report.trace.empty() ? 0.0 : report.trace.back();
  write_text_file(out + "/recon/solve_report.json", rep.dump(2) + "\n");
  log_stage(verbose, "reconstruction finished in " + std::to_string(report.iterations) +
                         " iterations");
}

void run_evaluate(const Config& cfg, const std::string& out, bool verbose) {
  cfg.validate();
  const Phantom phantom = load_phantom(out);
  const TransducerArray array = cfg.make_array();
  const std::vector<RfChannelData> rf_set = load_rf_set(out, cfg.acq.tx_angles);
  const SweepContext ctx = make_sweep_context(cfg, array);

  std::vector<std::pair<std::string, SlownessMap>> named;
  if (fs::exists(out + "/recon/sos_map.csv")) {
    named.emplace_back("adaptive", load_adaptive_map(cfg, out));
  }
  if (cfg.metrics.evaluate_true_map) {
    named.emplace_back("true_map", phantom.sample_on(cfg.recon_grid));
  }

  const std::vector<SweepPointResult> points = sweep_global_sos(
      rf_set, cfg.metrics.sweep.values(), named, phantom.point_scatterers, ctx);
  const std::vector<int> below =
      below_inclusion_indices(phantom.point_scatterers, phantom.cfg.inclusion);

  ensure_dir(out + "/eval");

  // Per-point metric summaries over all scatterers and the below-inclusion
  // subset, one row per (point, subset, metric).
  std::string metrics_csv = "label,c0_mps,subset,metric,mean_um,std_um,n,flagged\n";
  auto add_rows = [&](const SweepPointResult& p, const std::string& subset,
                      const ReportSummary& s) {
    const std::string head =
        p.label + "," + format_double(p.c0) + "," + subset + ",";
    metrics_csv += head + "lateral_fwhm," + format_double(s.fwhm.mean * 1e6) + "," +
                   format_double(s.fwhm.stdev * 1e6) + "," + std::to_string(s.fwhm.n) + "," +
                   std::to_string(s.flagged) + "\n";
    metrics_csv += head + "lateral_error," + format_double(s.lateral_error.mean * 1e6) + "," +
                   format_double(s.lateral_error.stdev * 1e6) + "," +
                   std::to_string(s.lateral_error.n) + "," + std::to_string(s.flagged) + "\n";
    metrics_csv += head + "axial_error," + format_double(s.axial_error.mean * 1e6) + "," +
                   format_double(s.axial_error.stdev * 1e6) + "," +
                   std::to_string(s.axial_error.n) + "," + std::to_string(s.flagged) + "\n";
  };
  std::string detail_csv =
      "label,c0_mps,scatterer,true_x_mm,true_z_mm,peak_x_mm,peak_z_mm,lateral_error_um,"
      "axial_error_um,lateral_fwhm_um,flagged\n";
  for (const auto& p : points) {
    add_rows(p, "all", summarize_reports(p.reports));
    add_rows(p, "below_inclusion", summarize_reports(select_reports(p.reports, below)));
    for (std::size_t s = 0; s < p.reports.size(); ++s) {
      const ScattererReport& r = p.reports[s];
      detail_csv += p.label + "," + format_double(p.c0) + "," + std::to_string(s) + "," +
                    format_double(r.true_pos.x * 1e3) + "," + format_double(r.true_pos.z * 1e3) +
                    "," + format_double(r.peak_pos.x * 1e3) + "," +
                    format_double(r.peak_pos.z * 1e3) + "," +
                    format_double(r.lateral_error * 1e6) + "," +
                    format_double(r.axial_error * 1e6) + "," +
                    format_double(r.lateral_fwhm * 1e6) + "," + (r.flagged ? "1" : "0") + "\n";
    }
  }
  write_text_file(out + "/eval/metrics.csv", metrics_csv);
  write_text_file(out + "/eval/scatterers.csv", detail_csv);

  // Best global point by mean lateral FWHM over all scatterers.
  const SweepPointResult* best_global = nullptr;
  double best_fwhm = 1e300;
  for (const auto& p : points) {
    if (p.c0 == 0.0) continue;
    const ReportSummary s = summarize_reports(p.reports);
    if (s.fwhm.n > 0 && s.fwhm.mean < best_fwhm) {
      best_fwhm = s.fwhm.mean;
      best_global = &p;
    }
  }
  std::string summary_csv =
      "label,fwhm_mean_um,fwhm_std_um,fwhm_n,lat_err_mean_um,lat_err_std_um,lat_err_n,"
      "ax_err_mean_um,ax_err_std_um,ax_err_n,flagged\n";
  if (best_global) {
    summary_csv += summary_line("best_global_" + best_global->label,
                                summarize_reports(best_global->reports));
  }
  for (const auto& p : points) {
    if (p.c0 == 0.0) summary_csv += summary_line(p.label, summarize_reports(p.reports));
  }
  write_text_file(out + "/eval/summary.csv", summary_csv);

  if (cfg.output.export_pgm) {
    for (const auto& p : points) {
      if (p.c0 != 0.0 && (!best_global || &p != best_global)) continue;
      const std::vector<double> db = log_compress(p.envelope, cfg.output.dynamic_range_db);
      write_pgm(out + "/eval/env_" + p.label + ".pgm", p.envelope.grid.nx, p.envelope.grid.nz,
                db, cfg.output.dynamic_range_db);
    }
  }
  log_stage(verbose, "evaluated " + std::to_string(points.size()) + " beamforming passes");
}

void run_pipeline(const Config& cfg, const std::string& out, bool verbose) {
  run_phantom(cfg, out, verbose);
  run_simulate(cfg, out, verbose);
  Config tracking_cfg = cfg;
  tracking_cfg.beamform.pass = "tracking";
  run_beamform(tracking_cfg, out, verbose);
  run_track(cfg, out, verbose);
  run_reconstruct(cfg, out, verbose);
  Config adaptive_cfg = cfg;
  adaptive_cfg.beamform.pass = "display";
  adaptive_cfg.beamform.source = "adaptive";
  adaptive_cfg.beamform.label.clear();
  run_beamform(adaptive_cfg, out, verbose);
  run_evaluate(cfg, out, verbose);
}

}  // namespace sosbeam
