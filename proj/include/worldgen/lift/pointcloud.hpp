#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "worldgen/core/image.hpp"
#include "worldgen/geometry/camera.hpp"
#include "worldgen/lift/depth.hpp"

namespace worldgen {

// Colored world-space point set. Positions are double so rescaling and
// stitching stay exact; file IO narrows to float32.
struct PointCloud {
  std::vector<Vec3> positions;               // meters, world frame
  std::vector<std::array<float, 3>> colors;  // 0..255 working domain
  std::vector<float> confidence;             // [0, 1]
  std::vector<uint32_t> source_view;

  size_t size() const { return positions.size(); }
  void reserve(size_t n);
  void push(const Vec3& p, const std::array<float, 3>& c, float conf, uint32_t view);
  void append(const PointCloud& other);
  void validate() const;
};

struct UnprojectOptions {
  double conf_threshold = 0.3;  // pixels at or below this are dropped
  uint32_t view_id = 0;
};

// Lift every confident pixel: position = camera position + world ray * range.
// Depth must already be metric.
PointCloud unproject_view(const ImageF32& rgb, const DepthMap& depth, const CameraPose& pose,
                          const Intrinsics& K, const UnprojectOptions& opt = {});

// Points with z < 0 count as ground. If their mean distance below the origin
// is under min_height, the whole cloud is scaled up to restore it; returns
// the applied scale (1 when already clear or when there is no ground).
double enforce_ground_clearance(PointCloud& pc, double min_height = 1.5);

}  // namespace worldgen
