#pragma once

#include <string>

#include "worldgen/lift/pointcloud.hpp"

namespace worldgen {

// Binary little-endian PLY. Per vertex: x,y,z float32 (meters), red,green,
// blue uint8, confidence float32, source_view uint16. read_ply accepts
// exactly this layout.
void write_ply(const std::string& path, const PointCloud& pc);
PointCloud read_ply(const std::string& path);

}  // namespace worldgen
