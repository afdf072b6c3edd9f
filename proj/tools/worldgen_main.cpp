// Command-line front end for the scene-generation pipeline.
//
// Verbs share one JSON config file; a handful of flags override its most
// common fields. Exit codes: 0 ok, 2 configuration error, 3 oracle error,
// 4 any other failure.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <string>

#include "worldgen/core/error.hpp"
#include "worldgen/pipeline/config.hpp"
#include "worldgen/pipeline/run.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitOracle = 3;
constexpr int kExitFailure = 4;

struct Overrides {
  std::string config_path;
  std::string output_dir;
  std::string input_image;
  std::string heuristic;
  bool has_seed = false;
  uint64_t seed = 0;
};

worldgen::PipelineConfig resolve_config(const Overrides& ov) {
  worldgen::PipelineConfig cfg;
  if (!ov.config_path.empty()) cfg = worldgen::load_config(ov.config_path);
  if (!ov.output_dir.empty()) cfg.output_dir = ov.output_dir;
  if (!ov.input_image.empty()) cfg.input_image = ov.input_image;
  if (!ov.heuristic.empty()) cfg.heuristic = ov.heuristic;
  if (ov.has_seed) cfg.seed = ov.seed;
  cfg.validate();
  return cfg;
}

int exit_code_of(const worldgen::Error& e) {
  switch (e.kind()) {
    case worldgen::ErrorKind::Config: return kExitConfig;
    case worldgen::ErrorKind::Oracle: return kExitOracle;
    default: return kExitFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"single-image panorama, point-cloud and reconstruction-asset pipeline"};
  app.require_subcommand(1);

  Overrides ov;
  app.add_option("-c,--config", ov.config_path, "JSON config file (defaults when omitted)");
  app.add_option("-o,--out", ov.output_dir, "override output_dir");
  app.add_option("-i,--input", ov.input_image, "override input_image");
  app.add_option("--heuristic", ov.heuristic, "override heuristic (adhoc|sequential|anchored)");
  auto* seed_opt = app.add_option("--seed", ov.seed, "override seed");

  auto* cmd_init = app.add_subcommand("init-config", "write a config with all defaults");
  std::string init_path;
  cmd_init->add_option("path", init_path, "destination file (stdout when omitted)");

  std::string stop_after;
  auto* cmd_run = app.add_subcommand("run", "pano -> lift -> grid -> export");
  cmd_run->add_option("--stop-after", stop_after, "stop after this stage")
      ->check(CLI::IsMember({"pano", "lift", "grid", "export"}));

  auto* cmd_pano = app.add_subcommand("pano", "progressive panorama outpainting");
  auto* cmd_lift = app.add_subcommand("lift", "depth estimation and metric point cloud");
  auto* cmd_grid = app.add_subcommand("grid", "camera-grid renders and hole inpainting");
  auto* cmd_export = app.add_subcommand("export", "reconstruction dataset and trainer settings");
  auto* cmd_eval = app.add_subcommand("eval", "ring-trajectory renders and metrics");
  auto* cmd_pairs = app.add_subcommand("pairs", "forward-backward warp training pairs");
  auto* cmd_distort = app.add_subcommand("distort-fit", "fit the grid distortion field");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  ov.has_seed = seed_opt->count() > 0;

  try {
    if (cmd_init->parsed()) {
      worldgen::PipelineConfig cfg;
      if (!ov.output_dir.empty()) cfg.output_dir = ov.output_dir;
      if (!ov.input_image.empty()) cfg.input_image = ov.input_image;
      if (!ov.heuristic.empty()) cfg.heuristic = ov.heuristic;
      if (ov.has_seed) cfg.seed = ov.seed;
      if (init_path.empty()) {
        std::cout << worldgen::serialize_config(cfg);
      } else {
        worldgen::save_config(cfg, init_path);
        std::fprintf(stderr, "wrote %s\n", init_path.c_str());
      }
      return kExitOk;
    }

    worldgen::PipelineConfig cfg = resolve_config(ov);
    if (cmd_run->parsed()) {
      worldgen::run_pipeline(cfg, stop_after);
    } else if (cmd_pano->parsed()) {
      worldgen::stage_pano(cfg);
    } else if (cmd_lift->parsed()) {
      worldgen::stage_lift(cfg);
    } else if (cmd_grid->parsed()) {
      worldgen::stage_grid(cfg);
    } else if (cmd_export->parsed()) {
      worldgen::stage_export(cfg);
    } else if (cmd_eval->parsed()) {
      worldgen::stage_eval(cfg);
    } else if (cmd_pairs->parsed()) {
      worldgen::stage_pairs(cfg);
    } else if (cmd_distort->parsed()) {
      worldgen::stage_distort_fit(cfg);
    }
  } catch (const worldgen::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_of(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
  return kExitOk;
}
