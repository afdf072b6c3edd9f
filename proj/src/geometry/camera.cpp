#include "worldgen/geometry/camera.hpp"

namespace worldgen {

static CameraPose pose_from_axes(const Vec3& right0, const Vec3& forward, double roll,
                                 const Vec3& position) {
  Vec3 up0 = right0.cross(forward);
  double cg = std::cos(roll), sg = std::sin(roll);
  Vec3 right = cg * right0 + sg * up0;
  Vec3 up = -sg * right0 + cg * up0;
  CameraPose p;
  p.rotation.col(0) = right;
  p.rotation.col(1) = forward;
  p.rotation.col(2) = up;
  p.position = position;
  return p;
}

CameraPose pose_from_angles(double yaw, double pitch, double roll, const Vec3& position) {
  Vec3 f = angles_to_dir(yaw, pitch);
  Vec3 r0(std::cos(yaw), -std::sin(yaw), 0.0);
  return pose_from_axes(r0, f, roll, position);
}

CameraPose look_at(const Vec3& from, const Vec3& target, double roll) {
  Vec3 f = target - from;
  require(f.norm() > 1e-12, ErrorKind::Domain, "look_at: target coincides with camera");
  f.normalize();
  Vec3 r0 = f.cross(Vec3::UnitZ());  // horizontal right vector
  if (r0.norm() < 1e-9) r0 = Vec3::UnitX();  // looking straight up/down
  r0.normalize();
  return pose_from_axes(r0, f, roll, from);
}

Vec3 view_ray(double x, double y, const Intrinsics& K) {
  double u = 2.0 * x / K.width - 1.0;
  double v = 1.0 - 2.0 * y / K.height;
  return angles_to_dir(u * K.fov_x / 2.0, v * K.fov_y / 2.0);
}

bool dir_to_view_pixel(const Vec3& d_cam, const Intrinsics& K, double& x, double& y) {
  double theta, phi;
  dir_to_angles(d_cam, theta, phi);
  double u = theta / (K.fov_x / 2.0);
  double v = phi / (K.fov_y / 2.0);
  x = (u + 1.0) * 0.5 * K.width;
  y = (1.0 - v) * 0.5 * K.height;
  return std::abs(u) <= 1.0 && std::abs(v) <= 1.0;
}

double frustum_solid_angle(const Intrinsics& K) {
  return K.fov_x * 2.0 * std::sin(K.fov_y / 2.0);
}

}  // namespace worldgen
