#pragma once

#include <cstdint>
#include <vector>

#include "worldgen/lift/pointcloud.hpp"

namespace worldgen {

struct RenderedView {
  ImageF32 rgb;    // winner colors; 0 where invalid
  ImageF32 depth;  // range along the ray, meters; +inf where invalid
  Mask valid;      // 255 = covered by at least one point
};

// Sequential z-buffered splatting. Each point covers a square of side
// (2*splat_px - 1) centered on its projected pixel; the strictly nearest
// range wins, ties keep the lowest point index (renders are reproducible and
// permutation-invariant away from exact ties). winners, if given, receives
// the winning point index per pixel (-1 where empty).
RenderedView render_pointcloud(const PointCloud& pc, const CameraPose& pose, const Intrinsics& K,
                               int splat_px = 1, std::vector<int64_t>* winners = nullptr);

}  // namespace worldgen
