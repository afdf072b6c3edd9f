#include "worldgen/warp/warp_pair.hpp"

#include <filesystem>
#include <fstream>

#include "worldgen/core/io_png.hpp"
#include "worldgen/oracle/oracle.hpp"

namespace worldgen {

WarpPair make_warp_pair(const ImageF32& rgb, const DepthMap& depth, const CameraPose& pose_src,
                        const CameraPose& pose_dst, const Intrinsics& K,
                        const WarpPairOptions& opt) {
  UnprojectOptions up;
  up.conf_threshold = opt.conf_threshold;
  PointCloud cloud = unproject_view(rgb, depth, pose_src, K, up);

  WarpPair out;
  out.target_rgb = rgb;
  out.condition_rgb = rgb;
  out.hole_mask = Mask(K.width, K.height, 1, 0);
  if (cloud.size() == 0) return out;  // nothing confident anywhere; nothing lost

  std::vector<int64_t> fwd_winners;
  render_pointcloud(cloud, pose_dst, K, opt.splat_px, &fwd_winners);

  std::vector<uint8_t> survived(cloud.size(), 0);
  for (int64_t w : fwd_winners)
    if (w >= 0) survived[size_t(w)] = 1;

  PointCloud kept;
  kept.reserve(cloud.size());
  for (size_t i = 0; i < cloud.size(); ++i)
    if (survived[i]) kept.push(cloud.positions[i], cloud.colors[i], cloud.confidence[i],
                               cloud.source_view[i]);

  Mask back_valid(K.width, K.height, 1, 0);
  if (kept.size() > 0) {
    // single-pixel splats: each survivor can only reclaim its own pixel, so
    // the preserved colors are the originals byte for byte
    RenderedView back = render_pointcloud(kept, pose_src, K, 1);
    back_valid = back.valid;
    out.condition_rgb = back.rgb;
  } else {
    out.condition_rgb.fill(0.0f);
  }

  const float* conf = depth.confidence.data();
  for (int y = 0; y < K.height; ++y)
    for (int x = 0; x < K.width; ++x) {
      size_t i = size_t(y) * K.width + x;
      bool had_point = conf[i] > opt.conf_threshold;
      if (had_point && !back_valid.data()[i]) {
        out.hole_mask.data()[i] = kMaskOn;
      } else if (!had_point) {
        // no depth here, nothing was warped; carry the target through
        for (int c = 0; c < 3; ++c)
          out.condition_rgb.at(x, y, c) = out.target_rgb.at(x, y, c);
      }
    }

  for (int y = 0; y < K.height; ++y)
    for (int x = 0; x < K.width; ++x)
      if (!out.hole_mask.at(x, y))
        for (int c = 0; c < 3; ++c)
          require(out.condition_rgb.at(x, y, c) == out.target_rgb.at(x, y, c),
                  ErrorKind::Contract, "warp pair lost a pixel outside the hole mask");
  return out;
}

void save_warp_pair(const std::string& dir, const WarpPair& pair, const CameraPose& pose_src,
                    const CameraPose& pose_dst, const Intrinsics& K) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  write_png((fs::path(dir) / "condition.png").string(), to_u8(pair.condition_rgb));
  write_png((fs::path(dir) / "mask.png").string(), pair.hole_mask);
  write_png((fs::path(dir) / "target.png").string(), to_u8(pair.target_rgb));
  nlohmann::json meta;
  meta["src"] = camera_meta(pose_src, K.fov_x, K.fov_y);
  meta["dst"] = camera_meta(pose_dst, K.fov_x, K.fov_y);
  meta["width"] = K.width;
  meta["height"] = K.height;
  std::string text = meta.dump(2) + "\n";
  write_file((fs::path(dir) / "meta.json").string(), text.data(), text.size());
}

}  // namespace worldgen
