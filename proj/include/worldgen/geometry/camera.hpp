#pragma once

#include "worldgen/core/error.hpp"
#include "worldgen/core/mat.hpp"

namespace worldgen {

// World and camera frames are right-handed with x right, y forward, z up.
// The camera maps pixels to angles linearly: a pixel at normalized
// coordinates (u, v) in [-1, 1]^2 sees the direction with local yaw
// u*fov_x/2 and local elevation v*fov_y/2.
struct Intrinsics {
  int width = 0, height = 0;
  double fov_x = 0.0, fov_y = 0.0;  // radians, in (0, pi)

  static Intrinsics square(int size, double fov) { return {size, size, fov, fov}; }
  // fov_y chosen so angular pixel pitch matches horizontally and vertically
  static Intrinsics from_fov_x(int width, int height, double fov_x) {
    return {width, height, fov_x, fov_x * height / width};
  }
  void validate() const {
    require(width > 0 && height > 0, ErrorKind::Domain, "intrinsics: bad resolution");
    require(fov_x > 0 && fov_x < kPi && fov_y > 0 && fov_y < kPi, ErrorKind::Domain,
            "intrinsics: fov must lie in (0, pi)");
  }
};

struct CameraPose {
  Mat3 rotation = Mat3::Identity();  // columns: right, forward, up (world frame)
  Vec3 position = Vec3::Zero();

  void validate(double tol = 1e-9) const {
    require(is_rotation(rotation, tol), ErrorKind::Domain, "pose: rotation not orthonormal");
  }
};

// Unit direction for yaw theta (from +y toward +x) and elevation phi.
inline Vec3 angles_to_dir(double theta, double phi) {
  double cp = std::cos(phi);
  return {std::sin(theta) * cp, std::cos(theta) * cp, std::sin(phi)};
}

inline void dir_to_angles(const Vec3& d, double& theta, double& phi) {
  theta = std::atan2(d.x(), d.y());
  double n = d.norm();
  double s = n > 0 ? d.z() / n : 0.0;
  phi = std::asin(std::clamp(s, -1.0, 1.0));
}

// Yaw/pitch/roll pose builder. Positive roll rotates the up vector toward the
// left of frame (counterclockwise around the forward axis).
CameraPose pose_from_angles(double yaw, double pitch, double roll = 0.0,
                            const Vec3& position = Vec3::Zero());

CameraPose look_at(const Vec3& from, const Vec3& target, double roll = 0.0);

// Camera-frame ray of the pixel-center coordinate (x, y) (centers at
// half-integers, x in [0, width]).
Vec3 view_ray(double x, double y, const Intrinsics& K);

// Inverse: where does a camera-frame direction land on the sensor. Returns
// false when the direction is outside the field of view.
bool dir_to_view_pixel(const Vec3& d_cam, const Intrinsics& K, double& x, double& y);

// Analytic solid angle of the frustum (sr): fov_x * 2 sin(fov_y / 2).
double frustum_solid_angle(const Intrinsics& K);

}  // namespace worldgen
