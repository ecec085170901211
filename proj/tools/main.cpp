////////////////////////////////////////////////////////////////////////////////
// Copyright 2026 the sosbeam project developers.
// SPDX-License-Identifier: Apache-2.0
//
// sosbeam: plane-wave ultrasound beamforming with local speed-of-sound maps
// Command line driver.
////////////////////////////////////////////////////////////////////////////////

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "sosbeam/pipeline.hpp"

namespace {

struct CliArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = -1;
  bool verbose = false;
};

using StageFn = void (*)(const sosbeam::Config&, const std::string&, bool);

int run_stage(const CliArgs& args, StageFn fn) {
  try {
    sosbeam::Config cfg = sosbeam::Config::load(args.config_path);
    if (args.seed_given) cfg.seed = args.seed;
    if (args.threads >= 0) cfg.threads = args.threads;
    fn(cfg, args.out_dir, args.verbose);
    return sosbeam::exit_ok;
  } catch (const sosbeam::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return sosbeam::exit_config;
  } catch (const sosbeam::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return sosbeam::exit_io;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return sosbeam::exit_numeric;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Plane-wave ultrasound beamforming with local speed-of-sound maps"};
  app.require_subcommand(1);

  CliArgs args;
  app.add_option("--config", args.config_path, "JSON configuration file (defaults when omitted)");
  app.add_option("--out", args.out_dir, "Artifact directory");
  app.add_option("--seed", args.seed, "Override the configured RNG seed")
      ->each([&](const std::string&) { args.seed_given = true; });
  app.add_option("--threads", args.threads, "Worker threads (0 = all cores)");
  app.add_flag("--verbose", args.verbose, "Progress output on stderr");

  StageFn stage = nullptr;
  app.add_subcommand("phantom", "Generate the phantom and persist it")
      ->callback([&] { stage = sosbeam::run_phantom; });
  app.add_subcommand("simulate", "Synthesize plane-wave RF data from the phantom")
      ->callback([&] { stage = sosbeam::run_simulate; });
  app.add_subcommand("beamform", "Beamform a tracking or display pass (see config.beamform)")
      ->callback([&] { stage = sosbeam::run_beamform; });
  app.add_subcommand("track", "Track apparent displacements between angled frames")
      ->callback([&] { stage = sosbeam::run_track; });
  app.add_subcommand("reconstruct", "Reconstruct the local speed-of-sound map")
      ->callback([&] { stage = sosbeam::run_reconstruct; });
  app.add_subcommand("evaluate", "Global-SoS sweep and adaptive evaluation metrics")
      ->callback([&] { stage = sosbeam::run_evaluate; });
  app.add_subcommand("pipeline", "Run every stage in order")
      ->callback([&] { stage = sosbeam::run_pipeline; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? sosbeam::exit_ok : sosbeam::exit_config;
  }
  return run_stage(args, stage);
}
