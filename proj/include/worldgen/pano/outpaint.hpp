#pragma once

#include "worldgen/geometry/equirect.hpp"
#include "worldgen/oracle/oracle.hpp"
#include "worldgen/pano/plan.hpp"

namespace worldgen {

struct OutpaintConfig {
  int pano_width = 2048;
  double feather_radius_px = 5.0;
  double refine_strength = 0.3;
  bool refine_per_view = true;
  bool refine_final = true;
  double min_known_fraction = 0.25;  // sequential context floor
  PlanConfig plan;
  std::string checkpoint_dir;  // empty disables checkpointing/resume
  uint64_t seed = 0;
};

struct OutpaintResult {
  EquirectPanorama pano;
  Mask input_footprint;  // pano pixels carrying the untouched input
  int inpaint_calls = 0;
  int refine_calls = 0;
  int anchor_actions = 0;
};

// Blend a refined image over its base: outside `mask` the base is kept
// bit-exactly, inside the blurred mask ramps the refined content in.
ImageF32 refine_blend(const ImageF32& base, const ImageF32& refined, const Mask& mask,
                      double feather_radius_px);

// Progressive panorama synthesis. The input view sits at yaw 0 / pitch 0 and
// is preserved bit-exactly on the canvas (the oracle never overwrites it).
OutpaintResult run_outpaint(const ImageF32& input_view, const Intrinsics& input_K,
                            const PromptSet& prompts, HeuristicKind kind, OracleClient& oracle,
                            const OutpaintConfig& cfg = {});

}  // namespace worldgen
