#include "worldgen/lift/pointcloud.hpp"

#include <cmath>

namespace worldgen {

void PointCloud::reserve(size_t n) {
  positions.reserve(n);
  colors.reserve(n);
  confidence.reserve(n);
  source_view.reserve(n);
}

void PointCloud::push(const Vec3& p, const std::array<float, 3>& c, float conf, uint32_t view) {
  positions.push_back(p);
  colors.push_back(c);
  confidence.push_back(conf);
  source_view.push_back(view);
}

void PointCloud::append(const PointCloud& other) {
  positions.insert(positions.end(), other.positions.begin(), other.positions.end());
  colors.insert(colors.end(), other.colors.begin(), other.colors.end());
  confidence.insert(confidence.end(), other.confidence.begin(), other.confidence.end());
  source_view.insert(source_view.end(), other.source_view.begin(), other.source_view.end());
}

void PointCloud::validate() const {
  size_t n = positions.size();
  require(colors.size() == n && confidence.size() == n && source_view.size() == n,
          ErrorKind::Domain, "cloud: attribute arrays disagree in length");
  for (size_t i = 0; i < n; ++i)
    require(positions[i].allFinite(), ErrorKind::Domain, "cloud: non-finite position");
}

PointCloud unproject_view(const ImageF32& rgb, const DepthMap& depth, const CameraPose& pose,
                          const Intrinsics& K, const UnprojectOptions& opt) {
  depth.validate();
  require(depth.scale_class == ScaleClass::Metric, ErrorKind::Contract,
          "unproject: depth must be metric-scaled first");
  require(rgb.width() == K.width && rgb.height() == K.height && rgb.channels() == 3,
          ErrorKind::Contract, "unproject: rgb does not match the intrinsics");
  require(depth.values.width() == K.width && depth.values.height() == K.height,
          ErrorKind::Contract, "unproject: depth does not match the intrinsics");

  PointCloud pc;
  pc.reserve(size_t(K.width) * K.height);
  for (int y = 0; y < K.height; ++y) {
    const float* d = depth.values.row(y);
    const float* c = depth.confidence.row(y);
    const float* col = rgb.row(y);
    for (int x = 0; x < K.width; ++x) {
      if (c[x] <= opt.conf_threshold) continue;
      Vec3 dir = pose.rotation * view_ray(x + 0.5, y + 0.5, K);
      pc.push(pose.position + dir * double(d[x]),
              {col[3 * x], col[3 * x + 1], col[3 * x + 2]}, c[x], opt.view_id);
    }
  }
  return pc;
}

double enforce_ground_clearance(PointCloud& pc, double min_height) {
  require(min_height > 0.0, ErrorKind::Domain, "clearance: min_height must be positive");
  double sum = 0.0;
  size_t n_ground = 0;
  for (const Vec3& p : pc.positions) {
    if (p.z() < 0.0) {
      sum += -p.z();
      ++n_ground;
    }
  }
  if (n_ground == 0) return 1.0;  // nothing counts as ground; leave the cloud alone
  double h = sum / double(n_ground);
  if (h >= min_height) return 1.0;
  double s = min_height / h;
  for (Vec3& p : pc.positions) p *= s;
  return s;
}

}  // namespace worldgen
