#pragma once

#include <vector>

#include "worldgen/geometry/camera.hpp"

namespace worldgen {

struct CameraView {
  CameraPose pose;
  Intrinsics intr;
};

// Inpainting pose grid: cameras at the 6 face centers and 8 corners of a
// cube centered on the origin, each combined with 14 rotations (6 principal
// axes + {forward, backward, left, right} x roll +-45 deg, world-frame).
// Deterministic order: translation-major, rotations in the listed order.
std::vector<CameraView> camera_grid(double cube_side = 2.0,
                                    const Intrinsics& intr = Intrinsics::square(1024,
                                                                                deg2rad(85.0)));

// Three circular evaluation sweeps of n views each, all looking at the
// origin: (1) radius-r ring at z = 0, no roll; (2) roll +45 deg, ring lowered
// to z = -z_offset; (3) roll -45 deg, ring raised to z = +z_offset.
std::vector<std::vector<CameraView>> eval_trajectories(double radius = 0.5, int n = 8,
                                                       double fov = deg2rad(60.0), int res = 1024,
                                                       double z_offset = 0.5);

}  // namespace worldgen
