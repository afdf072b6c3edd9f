#include "worldgen/warp/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace worldgen {

RenderedView render_pointcloud(const PointCloud& pc, const CameraPose& pose, const Intrinsics& K,
                               int splat_px, std::vector<int64_t>* winners) {
  K.validate();
  pose.validate();
  require(!pc.positions.empty(), ErrorKind::Contract, "render: point cloud is empty");
  require(splat_px >= 1, ErrorKind::Domain, "render: splat_px must be >= 1");

  const size_t n_px = size_t(K.width) * K.height;
  std::vector<double> zbuf(n_px, std::numeric_limits<double>::infinity());
  std::vector<int64_t> win(n_px, -1);
  const Mat3 rt = pose.rotation.transpose();
  const int r = splat_px - 1;

  for (size_t i = 0; i < pc.size(); ++i) {
    Vec3 cam = rt * (pc.positions[i] - pose.position);
    double range = cam.norm();
    if (!(range > 0.0) || !std::isfinite(range)) continue;
    double x = 0.0, y = 0.0;
    if (!dir_to_view_pixel(cam, K, x, y)) continue;
    int cx = std::clamp(int(std::floor(x)), 0, K.width - 1);
    int cy = std::clamp(int(std::floor(y)), 0, K.height - 1);
    for (int dy = -r; dy <= r; ++dy) {
      int py = cy + dy;
      if (py < 0 || py >= K.height) continue;
      for (int dx = -r; dx <= r; ++dx) {
        int px = cx + dx;
        if (px < 0 || px >= K.width) continue;
        size_t idx = size_t(py) * K.width + px;
        if (range < zbuf[idx]) {
          zbuf[idx] = range;
          win[idx] = int64_t(i);
        }
      }
    }
  }

  RenderedView out;
  out.rgb = ImageF32(K.width, K.height, 3, 0.0f);
  out.depth = ImageF32(K.width, K.height, 1, std::numeric_limits<float>::infinity());
  out.valid = Mask(K.width, K.height, 1, 0);
  for (size_t idx = 0; idx < n_px; ++idx) {
    int64_t w = win[idx];
    if (w < 0) continue;
    out.valid.data()[idx] = kMaskOn;
    out.depth.data()[idx] = float(zbuf[idx]);
    const auto& c = pc.colors[size_t(w)];
    float* px = out.rgb.data() + idx * 3;
    px[0] = c[0];
    px[1] = c[1];
    px[2] = c[2];
  }
  if (winners) *winners = std::move(win);
  return out;
}

}  // namespace worldgen
