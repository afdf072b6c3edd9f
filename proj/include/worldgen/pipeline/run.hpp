#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "worldgen/pipeline/config.hpp"
#include "worldgen/warp/poses.hpp"

namespace worldgen {

// Pipeline stages. Each stage writes its artifacts under
// <output_dir>/<stage>/ and drops a ".done" marker on success; a stage whose
// marker exists is skipped, which makes interrupted runs resumable. Stages
// read their inputs from the artifacts of earlier stages, never from process
// state, so any stage can also run as its own CLI verb.
//
// Artifact layout under output_dir:
//   pano/     pano.pfm (exact float canvas), pano.png, fill.png,
//             input_footprint.png, meta.json, checkpoints/
//   lift/     points.ply, meta.json
//   grid/     render_NNN.png, mask_NNN.png (255 = hole), view_NNN.png
//             (inpainted), meta.json
//   export/   images/, masks/, poses.json, points.ply, gs_config.json
//   eval/     ringR_viewVV.png, eval.json
//   pairs/    pair_NNN/{condition,mask,target,meta.json}, meta.json
//   distort/  checkpoint.wgdf, losses.json

void stage_pano(const PipelineConfig& cfg);
void stage_lift(const PipelineConfig& cfg);
void stage_grid(const PipelineConfig& cfg);
void stage_export(const PipelineConfig& cfg);
void stage_eval(const PipelineConfig& cfg);
void stage_pairs(const PipelineConfig& cfg);
void stage_distort_fit(const PipelineConfig& cfg);

// pano -> lift -> grid -> export, stopping early when stop_after names one of
// those stages (empty runs everything). Also writes the resolved config to
// <output_dir>/config.json. Errors out of a stage re-raise with the stage
// name prefixed; an unknown stop_after raises Config.
void run_pipeline(const PipelineConfig& cfg, const std::string& stop_after = "");

// Inverse of camera_meta: reads {"pose":{"rotation":[9 row-major],
// "position":[3]}} back into a pose (raises Io on malformed blocks).
CameraPose pose_from_meta(const nlohmann::json& camera);

// Walks every exported image and asserts the usage-mask policy on the
// finished export directory: grid views usable only inside their hole masks,
// pano views never usable inside the anchor (backside) frustum, the input
// fully usable. Raises Contract on any violation. Runs at the end of the
// export stage; callable separately for audits.
void check_export_masks(const PipelineConfig& cfg);

// The 17 shared-center views depth is estimated on: the input view first
// (metric anchor), then the 8 mid-band + 8 polar outpainting poses.
std::vector<CameraView> lift_rig(const PipelineConfig& cfg);

}  // namespace worldgen
