#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <deque>
#include <filesystem>
#include <map>
#include <set>

#include <json.hpp>

#include "worldgen/core/io_png.hpp"
#include "worldgen/core/rng.hpp"
#include "worldgen/warp/poses.hpp"
#include "worldgen/warp/render.hpp"
#include "worldgen/warp/warp_pair.hpp"

using namespace worldgen;
namespace fs = std::filesystem;

namespace {

// wall at y = yb with a centered square occluder (half-size 0.5) at y = yf
struct OccluderScene {
  double yf = 3.0, yb = 6.0, half = 0.5;

  double range(const Vec3& dir) const {
    Vec3 d = dir.normalized();
    if (d.y() <= 1e-9) return -1.0;
    Vec3 at_f = d * (yf / d.y());
    if (std::abs(at_f.x()) <= half && std::abs(at_f.z()) <= half) return yf / d.y();
    return yb / d.y();
  }
  bool on_occluder(const Vec3& dir) const {
    Vec3 d = dir.normalized();
    Vec3 at_f = d * (yf / d.y());
    return std::abs(at_f.x()) <= half && std::abs(at_f.z()) <= half;
  }
};

// rgb encodes the pixel id so any misplaced color is caught
ImageF32 id_rgb(int w, int h) {
  ImageF32 img(w, h, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      img.at(x, y, 0) = float((x * 7) % 256);
      img.at(x, y, 1) = float((y * 11) % 256);
      img.at(x, y, 2) = float((x + y) % 256);
    }
  return img;
}

DepthMap scene_depth(const OccluderScene& scene, const Intrinsics& K) {
  DepthMap d;
  d.values = ImageF32(K.width, K.height, 1);
  d.confidence = ImageF32(K.width, K.height, 1, 1.0f);
  d.scale_class = ScaleClass::Metric;
  for (int y = 0; y < K.height; ++y)
    for (int x = 0; x < K.width; ++x)
      d.values.at(x, y) = float(scene.range(view_ray(x + 0.5, y + 0.5, K)));
  return d;
}

DepthMap plane_depth(double dist, const Intrinsics& K) {
  DepthMap d;
  d.values = ImageF32(K.width, K.height, 1);
  d.confidence = ImageF32(K.width, K.height, 1, 1.0f);
  d.scale_class = ScaleClass::Metric;
  for (int y = 0; y < K.height; ++y)
    for (int x = 0; x < K.width; ++x) {
      Vec3 r = view_ray(x + 0.5, y + 0.5, K);
      d.values.at(x, y) = float(dist / r.y());
    }
  return d;
}

int count_components(const Mask& m) {
  Mask seen(m.width(), m.height(), 1, 0);
  int comps = 0;
  for (int sy = 0; sy < m.height(); ++sy)
    for (int sx = 0; sx < m.width(); ++sx) {
      if (!m.at(sx, sy) || seen.at(sx, sy)) continue;
      ++comps;
      std::deque<std::pair<int, int>> work{{sx, sy}};
      seen.at(sx, sy) = 1;
      while (!work.empty()) {
        auto [x, y] = work.front();
        work.pop_front();
        const int nx[4] = {x - 1, x + 1, x, x};
        const int ny[4] = {y, y, y - 1, y + 1};
        for (int k = 0; k < 4; ++k) {
          if (nx[k] < 0 || nx[k] >= m.width() || ny[k] < 0 || ny[k] >= m.height()) continue;
          if (!m.at(nx[k], ny[k]) || seen.at(nx[k], ny[k])) continue;
          seen.at(nx[k], ny[k]) = 1;
          work.emplace_back(nx[k], ny[k]);
        }
      }
    }
  return comps;
}

size_t mask_area(const Mask& m) {
  size_t n = 0;
  for (size_t i = 0; i < m.count(); ++i) n += m.data()[i] ? 1 : 0;
  return n;
}

}  // namespace

TEST_CASE("rendering from the unprojection pose reproduces the image") {
  OccluderScene scene;
  Intrinsics K = Intrinsics::square(96, deg2rad(60.0));
  ImageF32 rgb = id_rgb(K.width, K.height);
  DepthMap depth = scene_depth(scene, K);
  CameraPose pose = pose_from_angles(deg2rad(10.0), deg2rad(-5.0), 0.0, Vec3(0.1, -0.2, 0.05));

  PointCloud pc = unproject_view(rgb, depth, pose, K);
  RenderedView rv = render_pointcloud(pc, pose, K, 1);
  for (size_t i = 0; i < rv.valid.count(); ++i) REQUIRE(rv.valid.data()[i] == kMaskOn);
  CHECK(rv.rgb == rgb);  // bit-exact colors
  for (int y = 0; y < K.height; ++y)
    for (int x = 0; x < K.width; ++x)
      CHECK(std::abs(double(rv.depth.at(x, y)) - double(depth.values.at(x, y))) < 1e-4);
}

TEST_CASE("z-buffer keeps the nearest point and breaks ties by index") {
  Intrinsics K = Intrinsics::square(15, deg2rad(60.0));
  Vec3 dir = view_ray(7.5, 7.5, K);  // center pixel

  PointCloud pc;
  pc.push(dir * 3.0, {10, 10, 10}, 1.0f, 0);
  pc.push(dir * 2.0, {200, 200, 200}, 1.0f, 0);
  RenderedView rv = render_pointcloud(pc, CameraPose{}, K, 1);
  CHECK(rv.rgb.at(7, 7, 0) == 200.0f);  // nearer wins regardless of order

  PointCloud tie;
  tie.push(dir * 2.0, {1, 2, 3}, 1.0f, 0);
  tie.push(dir * 2.0, {4, 5, 6}, 1.0f, 0);
  std::vector<int64_t> winners;
  rv = render_pointcloud(tie, CameraPose{}, K, 1, &winners);
  CHECK(rv.rgb.at(7, 7, 0) == 1.0f);  // exact tie: lowest index
  CHECK(winners[7 * 15 + 7] == 0);

  std::swap(tie.colors[0], tie.colors[1]);  // same geometry, relabeled
  rv = render_pointcloud(tie, CameraPose{}, K, 1);
  CHECK(rv.rgb.at(7, 7, 0) == 4.0f);
}

TEST_CASE("rendering is permutation-invariant away from depth ties") {
  Rng rng(7);
  PointCloud pc;
  for (int i = 0; i < 500; ++i)
    pc.push(Vec3(rng.uniform(-2, 2), rng.uniform(1, 6), rng.uniform(-2, 2)),
            {float(rng.next() % 256), float(rng.next() % 256), float(rng.next() % 256)}, 1.0f, 0);
  PointCloud rev;
  for (size_t i = pc.size(); i-- > 0;)
    rev.push(pc.positions[i], pc.colors[i], pc.confidence[i], pc.source_view[i]);

  Intrinsics K = Intrinsics::square(64, deg2rad(70.0));
  for (int splat : {1, 2}) {
    RenderedView a = render_pointcloud(pc, CameraPose{}, K, splat);
    RenderedView b = render_pointcloud(rev, CameraPose{}, K, splat);
    CHECK(a.rgb == b.rgb);
    CHECK(a.depth == b.depth);
    CHECK(a.valid == b.valid);
  }
}

TEST_CASE("translation opens a parallax-sized disocclusion band") {
  OccluderScene scene;
  Intrinsics K = Intrinsics::square(240, deg2rad(60.0));
  ImageF32 rgb(K.width, K.height, 3, 0.0f);
  // tag occluder pixels so the band can be located next to them
  for (int y = 0; y < K.height; ++y)
    for (int x = 0; x < K.width; ++x)
      rgb.at(x, y, 0) = scene.on_occluder(view_ray(x + 0.5, y + 0.5, K)) ? 255.0f : 64.0f;
  DepthMap depth = scene_depth(scene, K);

  double t = 0.5;
  PointCloud pc = unproject_view(rgb, depth, CameraPose{}, K);
  CameraPose moved;
  moved.position = Vec3(t, 0, 0);
  RenderedView rv = render_pointcloud(pc, moved, K, 1);

  int row = K.height / 2;
  int occ_right = -1;
  for (int x = 0; x < K.width; ++x)
    if (rv.valid.at(x, row) && rv.rgb.at(x, row, 0) == 255.0f) occ_right = x;
  REQUIRE(occ_right >= 0);

  // camera moved right: the background hidden beyond the occluder's right
  // edge was never seen, so the empty band opens there
  int band = 0;
  for (int x = occ_right + 1; x < K.width && !rv.valid.at(x, row); ++x) ++band;
  double parallax_rad = t * (1.0 / scene.yf - 1.0 / scene.yb);
  double expect_px = parallax_rad / (K.fov_x / K.width);
  CHECK(std::abs(band - expect_px) <= 1.0);

  int occ_left = -1;
  for (int x = 0; x < K.width; ++x)
    if (rv.valid.at(x, row) && rv.rgb.at(x, row, 0) == 255.0f) {
      occ_left = x;
      break;
    }
  REQUIRE(occ_left > 0);
  CHECK(rv.valid.at(occ_left - 1, row));  // no band on the occluder's left
}

TEST_CASE("warping to the same pose is the identity") {
  OccluderScene scene;
  Intrinsics K = Intrinsics::square(64, deg2rad(60.0));
  ImageF32 rgb = id_rgb(K.width, K.height);
  DepthMap depth = scene_depth(scene, K);
  CameraPose pose = pose_from_angles(deg2rad(25.0), 0.0);

  WarpPair pair = make_warp_pair(rgb, depth, pose, pose, K);
  CHECK(mask_area(pair.hole_mask) == 0);
  CHECK(pair.condition_rgb == rgb);
  CHECK(pair.target_rgb == rgb);
}

TEST_CASE("sub-pixel rotation of a plane loses nothing") {
  Intrinsics K = Intrinsics::square(64, deg2rad(60.0));
  ImageF32 rgb = id_rgb(K.width, K.height);
  DepthMap depth = plane_depth(4.0, K);
  double pitch = K.fov_x / K.width;
  CameraPose dst = pose_from_angles(0.4 * pitch, 0.0);  // under half a pixel

  WarpPair pair = make_warp_pair(rgb, depth, CameraPose{}, dst, K);
  CHECK(mask_area(pair.hole_mask) == 0);
  CHECK(pair.condition_rgb == rgb);
}

TEST_CASE("forward-backward holes match a brute-force visibility oracle") {
  OccluderScene scene;
  Intrinsics K = Intrinsics::square(160, deg2rad(60.0));
  ImageF32 rgb = id_rgb(K.width, K.height);
  DepthMap depth = scene_depth(scene, K);
  // a block without depth: never warped, never a hole
  for (int y = 20; y < 30; ++y)
    for (int x = 20; x < 30; ++x) depth.confidence.at(x, y) = 0.0f;

  CameraPose src;
  CameraPose dst;
  dst.position = Vec3(0.4, 0, 0);
  WarpPair pair = make_warp_pair(rgb, depth, src, dst, K);

  // independent survivor computation: project every confident pixel's point,
  // keep the per-pixel nearest (ties to the lower index)
  PointCloud pc = unproject_view(rgb, depth, src, K);
  std::map<std::pair<int, int>, std::pair<double, size_t>> best;
  std::vector<std::pair<int, int>> src_px;
  for (int y = 0; y < K.height; ++y)
    for (int x = 0; x < K.width; ++x)
      if (depth.confidence.at(x, y) > 0.3f) src_px.emplace_back(x, y);
  REQUIRE(src_px.size() == pc.size());
  for (size_t i = 0; i < pc.size(); ++i) {
    Vec3 cam = dst.rotation.transpose() * (pc.positions[i] - dst.position);
    double x = 0, y = 0;
    if (!dir_to_view_pixel(cam, K, x, y)) continue;
    int px = std::clamp(int(std::floor(x)), 0, K.width - 1);
    int py = std::clamp(int(std::floor(y)), 0, K.height - 1);
    double range = cam.norm();
    auto key = std::make_pair(py, px);
    auto it = best.find(key);
    if (it == best.end() || range < it->second.first) best[key] = {range, i};
  }
  std::set<size_t> survivors;
  for (const auto& [key, val] : best) survivors.insert(val.second);

  Mask expect(K.width, K.height, 1, 0);
  for (size_t i = 0; i < pc.size(); ++i)
    if (!survivors.count(i)) expect.at(src_px[i].first, src_px[i].second) = kMaskOn;
  CHECK(pair.hole_mask == expect);

  CHECK(count_components(pair.hole_mask) >= 2);  // fragmented, not one blob
  for (int y = 0; y < K.height; ++y)
    for (int x = 0; x < K.width; ++x) {
      if (!pair.hole_mask.at(x, y))
        for (int c = 0; c < 3; ++c) CHECK(pair.condition_rgb.at(x, y, c) == rgb.at(x, y, c));
      if (y >= 20 && y < 30 && x >= 20 && x < 30) CHECK_FALSE(pair.hole_mask.at(x, y));
    }
}

TEST_CASE("larger translations never shrink the hole area") {
  OccluderScene scene;
  Intrinsics K = Intrinsics::square(96, deg2rad(60.0));
  ImageF32 rgb = id_rgb(K.width, K.height);
  DepthMap depth = scene_depth(scene, K);

  size_t prev = 0;
  for (double t : {0.1, 0.2, 0.3, 0.4, 0.5}) {
    CameraPose dst;
    dst.position = Vec3(t, 0, 0);
    WarpPair pair = make_warp_pair(rgb, depth, CameraPose{}, dst, K);
    size_t area = mask_area(pair.hole_mask);
    CHECK(area >= prev);
    prev = area;
  }
  CHECK(prev > 0);
}

TEST_CASE("camera grid enumerates 14 x 14 poses inside the cube") {
  std::vector<CameraView> grid = camera_grid();
  REQUIRE(grid.size() == 196);

  std::set<std::array<double, 3>> translations;
  std::vector<Mat3> rotations;
  for (const CameraView& v : grid) {
    translations.insert({v.pose.position.x(), v.pose.position.y(), v.pose.position.z()});
    bool fresh = true;
    for (const Mat3& r : rotations)
      if ((r - v.pose.rotation).norm() < 1e-12) fresh = false;
    if (fresh) rotations.push_back(v.pose.rotation);
    CHECK(is_rotation(v.pose.rotation, 1e-12));
    CHECK(v.pose.rotation.determinant() == doctest::Approx(1.0).epsilon(1e-12));
    for (int c = 0; c < 3; ++c) CHECK(std::abs(v.pose.position[c]) <= 1.0 + 1e-12);
  }
  CHECK(translations.size() == 14);
  CHECK(rotations.size() == 14);

  size_t face_count = 0, corner_count = 0;
  for (const auto& t : translations) {
    double norm = std::sqrt(t[0] * t[0] + t[1] * t[1] + t[2] * t[2]);
    if (std::abs(norm - 1.0) < 1e-12) ++face_count;
    if (std::abs(norm - std::sqrt(3.0)) < 1e-12) ++corner_count;
  }
  CHECK(face_count == 6);
  CHECK(corner_count == 8);

  std::vector<CameraView> again = camera_grid();
  for (size_t i = 0; i < grid.size(); ++i) {
    CHECK((grid[i].pose.rotation - again[i].pose.rotation).norm() == 0.0);
    CHECK((grid[i].pose.position - again[i].pose.position).norm() == 0.0);
  }

  // translation-major order: the first 14 share the first translation
  for (size_t i = 0; i < 14; ++i)
    CHECK((grid[i].pose.position - Vec3(1, 0, 0)).norm() == 0.0);
  CHECK(grid[0].intr.width == 1024);
  CHECK(grid[0].intr.fov_x == doctest::Approx(deg2rad(85.0)).epsilon(1e-12));
}

TEST_CASE("evaluation trajectories circle the origin with paired roll and height") {
  auto trajs = eval_trajectories();
  REQUIRE(trajs.size() == 3);
  size_t total = 0;
  for (const auto& t : trajs) total += t.size();
  CHECK(total == 24);

  const double want_z[3] = {0.0, -0.5, 0.5};
  const double want_roll[3] = {0.0, kPi / 4.0, -kPi / 4.0};
  for (size_t ti = 0; ti < 3; ++ti) {
    REQUIRE(trajs[ti].size() == 8);
    for (size_t k = 0; k < 8; ++k) {
      const CameraPose& pose = trajs[ti][k].pose;
      double a = 2.0 * kPi * double(k) / 8.0;
      CHECK(std::abs(pose.position.x() - 0.5 * std::cos(a)) < 1e-12);
      CHECK(std::abs(pose.position.y() - 0.5 * std::sin(a)) < 1e-12);
      CHECK(pose.position.z() == want_z[ti]);

      // the optical axis passes through the origin
      Vec3 f = pose.rotation.col(1);
      Vec3 to_origin = (-pose.position).normalized();
      CHECK(f.cross(to_origin).norm() < 1e-9);
      CHECK(f.dot(to_origin) > 0.0);

      // roll measured against the horizon-aligned frame
      Vec3 r0 = f.cross(Vec3::UnitZ()).normalized();
      Vec3 u0 = r0.cross(f);
      Vec3 up = pose.rotation.col(2);
      CHECK(up.dot(u0) == doctest::Approx(std::cos(want_roll[ti])).epsilon(1e-9));
      if (want_roll[ti] > 0) CHECK(pose.rotation.col(0).z() > 0.3);
      if (want_roll[ti] < 0) CHECK(pose.rotation.col(0).z() < -0.3);

      CHECK(trajs[ti][k].intr.width == 1024);
      CHECK(trajs[ti][k].intr.fov_x == doctest::Approx(deg2rad(60.0)).epsilon(1e-12));
    }
  }
}

TEST_CASE("warp pair dataset files round trip") {
  OccluderScene scene;
  Intrinsics K = Intrinsics::square(48, deg2rad(60.0));
  ImageF32 rgb = id_rgb(K.width, K.height);
  DepthMap depth = scene_depth(scene, K);
  CameraPose dst;
  dst.position = Vec3(0.3, 0, 0.1);
  WarpPair pair = make_warp_pair(rgb, depth, CameraPose{}, dst, K);

  auto dir = (fs::temp_directory_path() / "wg_warp_pair").string();
  fs::remove_all(dir);
  save_warp_pair(dir, pair, CameraPose{}, dst, K);

  CHECK(read_png(dir + "/condition.png") == to_u8(pair.condition_rgb));
  CHECK(read_png(dir + "/mask.png") == pair.hole_mask);
  CHECK(read_png(dir + "/target.png") == to_u8(pair.target_rgb));

  auto meta_raw = read_file(dir + "/meta.json");
  auto meta = nlohmann::json::parse(meta_raw.begin(), meta_raw.end());
  CHECK(meta.at("width") == K.width);
  CHECK(meta.at("src").at("pose").at("rotation").size() == 9);
  CHECK(meta.at("dst").at("pose").at("position")[0] == doctest::Approx(0.3));
  fs::remove_all(dir);
}
