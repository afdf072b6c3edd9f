#pragma once

#include <string>

#include "worldgen/warp/render.hpp"

namespace worldgen {

// Inpainting training sample: the initial view with self-occlusion holes
// punched in, next to the intact original.
struct WarpPair {
  ImageF32 condition_rgb;  // initial view, holes blacked out
  Mask hole_mask;          // 255 = lost to self-occlusion or frustum exit
  ImageF32 target_rgb;     // initial view, untouched
};

struct WarpPairOptions {
  double conf_threshold = 0.3;  // depth pixels at or below this carry no point
  int splat_px = 1;             // forward-pass footprint (visibility test)
};

// Forward-backward warp: unproject the source view, render it at the novel
// pose, keep only points that won a pixel there, and render those back at the
// source. Source pixels whose point did not survive become holes; everything
// else is preserved bit-exactly (asserted).
WarpPair make_warp_pair(const ImageF32& rgb, const DepthMap& depth, const CameraPose& pose_src,
                        const CameraPose& pose_dst, const Intrinsics& K,
                        const WarpPairOptions& opt = {});

// Dataset layout: <dir>/condition.png, mask.png (255 = hole), target.png,
// meta.json (both poses and the intrinsics).
void save_warp_pair(const std::string& dir, const WarpPair& pair, const CameraPose& pose_src,
                    const CameraPose& pose_dst, const Intrinsics& K);

}  // namespace worldgen
