#pragma once

#include <cstdint>
#include <json.hpp>
#include <string>

#include "worldgen/pano/plan.hpp"
#include "worldgen/pipeline/oracles.hpp"

namespace worldgen {

// All defaults are the production values; tests and small runs override them.
// Serialization is lossless: parse(serialize(c)) == c for every field,
// including doubles and the full 64-bit seed.

struct PanoParams {
  int width = 2048;            // equirect canvas width (height = width / 2)
  int view_resolution = 1024;  // outpainting view size (square)
  double fov_mid_deg = 85.0;   // equator-band views
  double fov_polar_deg = 120.0;
  double refine_strength = 0.3;
  bool refine_per_view = true;
  bool refine_final = true;

  bool operator==(const PanoParams&) const = default;
};

struct LiftParams {
  double quantile_low = 0.2;  // metric anchoring quantiles
  double quantile_high = 0.8;
  double conf_threshold = 0.3;  // depth pixels at or below this are ignored
  double min_overlap = 0.2;     // required matched fraction when chaining views
  int bin_width = 2048;         // angular dedup grid width
  double ground_clearance = 1.5;  // meters; cloud is scaled up to restore it

  bool operator==(const LiftParams&) const = default;
};

struct GridParams {
  double cube_side = 2.0;  // camera cube edge length, meters
  double fov_deg = 85.0;
  int resolution = 1024;
  int stride = 1;    // keep every stride-th of the 196 grid poses
  int splat_px = 1;  // point footprint when rendering the cloud

  bool operator==(const GridParams&) const = default;
};

struct EvalParams {
  double radius = 0.5;  // meters
  int views_per_ring = 8;
  double fov_deg = 60.0;
  int resolution = 1024;
  double z_offset = 0.5;  // vertical offset of the rolled rings

  bool operator==(const EvalParams&) const = default;
};

struct PairsParams {
  int stride = 7;    // grid poses used as warp-pair targets
  int splat_px = 1;  // forward-pass footprint (visibility test)

  bool operator==(const PairsParams&) const = default;
};

struct DistortParams {
  int grid_res = 32;  // offset grid resolution for pipeline fits
  int n_freq = 8;
  int code_dim = 32;
  int hidden = 128;
  double offset_scale = 0.02;
  int steps = 150;
  double lr = 1e-3;
  int max_views = 8;  // grid views entering the fit

  bool operator==(const DistortParams&) const = default;
};

struct GsSettings {
  int iterations = 5000;
  bool opacity_reset = false;
  int adc_start = 500;  // adaptive density control window
  int adc_stop = 2500;
  int sh_degree = 1;
  int batch_size = 2;

  bool operator==(const GsSettings&) const = default;
};

struct PipelineConfig {
  uint64_t seed = 0;
  std::string input_image;  // path to the source PNG (RGB)
  double input_fov_deg = 85.0;
  std::string output_dir = "out";
  std::string heuristic = "anchored";  // adhoc | sequential | anchored
  int workers = 1;                     // fan-out for per-view work inside a stage

  PromptSet prompts{"a detailed scene", "the sky above", "the ground below"};
  OracleSpecs oracles;
  PanoParams pano;
  LiftParams lift;
  GridParams grid;
  EvalParams eval;
  PairsParams pairs;
  DistortParams distortion;
  GsSettings gs;

  bool operator==(const PipelineConfig&) const = default;

  // Raises Config on out-of-range values or an unknown heuristic.
  void validate() const;
};

nlohmann::json config_to_json(const PipelineConfig& c);
// Raises Config on unknown keys, wrong types, or failed validation.
PipelineConfig config_from_json(const nlohmann::json& j);

std::string serialize_config(const PipelineConfig& c);  // pretty JSON + newline
PipelineConfig parse_config(const std::string& text);

PipelineConfig load_config(const std::string& path);
void save_config(const PipelineConfig& c, const std::string& path);

nlohmann::json gs_to_json(const GsSettings& s);
GsSettings gs_from_json(const nlohmann::json& j);

}  // namespace worldgen
