#include "worldgen/warp/poses.hpp"

namespace worldgen {

std::vector<CameraView> camera_grid(double cube_side, const Intrinsics& intr) {
  require(cube_side > 0.0, ErrorKind::Domain, "camera grid: cube_side must be positive");
  intr.validate();
  const double h = cube_side / 2.0;

  std::vector<Vec3> translations = {{h, 0, 0}, {-h, 0, 0}, {0, h, 0},
                                    {0, -h, 0}, {0, 0, h}, {0, 0, -h}};
  for (double sx : {1.0, -1.0})
    for (double sy : {1.0, -1.0})
      for (double sz : {1.0, -1.0}) translations.push_back(Vec3(sx * h, sy * h, sz * h));

  struct Angles {
    double yaw, pitch, roll;
  };
  const double q = kPi / 2.0, e = kPi / 4.0;
  std::vector<Angles> rotations = {
      {0, 0, 0}, {kPi, 0, 0}, {-q, 0, 0}, {q, 0, 0}, {0, q, 0}, {0, -q, 0},  // principal axes
      {0, 0, e}, {0, 0, -e},  {kPi, 0, e}, {kPi, 0, -e},                     // rolled horizontals
      {-q, 0, e}, {-q, 0, -e}, {q, 0, e}, {q, 0, -e}};

  std::vector<CameraView> views;
  views.reserve(translations.size() * rotations.size());
  for (const Vec3& t : translations)
    for (const Angles& a : rotations)
      views.push_back({pose_from_angles(a.yaw, a.pitch, a.roll, t), intr});
  return views;
}

std::vector<std::vector<CameraView>> eval_trajectories(double radius, int n, double fov, int res,
                                                       double z_offset) {
  require(radius > 0.0 && n >= 1, ErrorKind::Domain, "eval trajectories: bad radius or count");
  Intrinsics intr = Intrinsics::square(res, fov);
  intr.validate();

  struct Ring {
    double roll, z;
  };
  const std::vector<Ring> rings = {{0.0, 0.0}, {kPi / 4.0, -z_offset}, {-kPi / 4.0, z_offset}};

  std::vector<std::vector<CameraView>> out;
  for (const Ring& ring : rings) {
    std::vector<CameraView> traj;
    traj.reserve(size_t(n));
    for (int k = 0; k < n; ++k) {
      double a = 2.0 * kPi * k / n;
      Vec3 pos(radius * std::cos(a), radius * std::sin(a), ring.z);
      traj.push_back({look_at(pos, Vec3::Zero(), ring.roll), intr});
    }
    out.push_back(std::move(traj));
  }
  return out;
}

}  // namespace worldgen
