#include "worldgen/lift/stitch.hpp"

#include <algorithm>
#include <cmath>

#include "worldgen/geometry/equirect.hpp"

namespace worldgen {

namespace {

struct BinPoint {
  Vec3 dir;            // world unit direction
  double range = 0.0;  // aligned metric range
  std::array<float, 3> color{};
  float conf = 0.0f;
  uint32_t view = 0;
};

struct ViewPixel {
  Vec3 dir;
  int64_t bin = 0;
  double d = 0.0;
  float conf = 0.0f;
  std::array<float, 3> color{};
};

}  // namespace

StitchResult stitch_depth_views(const std::vector<StitchView>& views,
                                const DepthMap& d_metric_anchor, const StitchOptions& opt) {
  require(!views.empty(), ErrorKind::Contract, "stitch: no views given");
  require(opt.bin_width >= 2 && opt.bin_width % 2 == 0, ErrorKind::Config,
          "stitch: bin_width must be even, >= 2");
  const Vec3 center = views[0].pose.position;
  for (size_t j = 0; j < views.size(); ++j) {
    const StitchView& v = views[j];
    v.intr.validate();
    v.pose.validate();
    v.d_rel.validate();
    require(v.rgb.width() == v.intr.width && v.rgb.height() == v.intr.height &&
                v.rgb.channels() == 3,
            ErrorKind::Contract, "stitch: view " + std::to_string(j) + " rgb/intrinsics mismatch");
    require(v.d_rel.values.width() == v.intr.width && v.d_rel.values.height() == v.intr.height,
            ErrorKind::Contract, "stitch: view " + std::to_string(j) + " depth/intrinsics mismatch");
    require((v.pose.position - center).norm() < 1e-9, ErrorKind::Contract,
            "stitch: views must share one camera center");
  }

  const int W = opt.bin_width, H = W / 2;
  std::vector<int32_t> bin_index(size_t(W) * H, -1);
  std::vector<BinPoint> points;

  StitchResult res;
  res.view_scales.assign(views.size(), 1.0);
  res.view_shifts.assign(views.size(), 0.0);

  for (size_t j = 0; j < views.size(); ++j) {
    const StitchView& v = views[j];
    const Intrinsics& K = v.intr;

    std::vector<ViewPixel> px;
    px.reserve(size_t(K.width) * K.height);
    for (int y = 0; y < K.height; ++y) {
      const float* dv = v.d_rel.values.row(y);
      const float* dc = v.d_rel.confidence.row(y);
      const float* col = v.rgb.row(y);
      for (int x = 0; x < K.width; ++x) {
        if (dc[x] <= opt.conf_threshold) continue;
        Vec3 dir = v.pose.rotation * view_ray(x + 0.5, y + 0.5, K);
        double theta, phi;
        dir_to_angles(dir, theta, phi);
        int bx = int(std::floor(theta_to_panox(theta, W)));
        bx = ((bx % W) + W) % W;
        int by = std::clamp(int(std::floor(phi_to_panoy(phi, H))), 0, H - 1);
        px.push_back({dir, int64_t(by) * W + bx, double(dv[x]), dc[x],
                      {col[3 * x], col[3 * x + 1], col[3 * x + 2]}});
      }
    }
    require(!px.empty(), ErrorKind::Stage,
            "stitch: view " + std::to_string(j) + " has no confident pixels");

    double s = 1.0, b = 0.0;
    if (j == 0) {
      s = opt.anchor_scale ? *opt.anchor_scale
                           : align_scale_quantile(v.d_rel, d_metric_anchor, opt.align);
    } else {
      double sd = 0.0, sD = 0.0, sdd = 0.0, sdD = 0.0;
      size_t matched = 0;
      for (const ViewPixel& p : px) {
        int32_t idx = bin_index[size_t(p.bin)];
        if (idx < 0) continue;
        double D = points[size_t(idx)].range;
        sd += p.d;
        sD += D;
        sdd += p.d * p.d;
        sdD += p.d * D;
        ++matched;
      }
      double frac = double(matched) / double(px.size());
      require(frac >= opt.min_overlap, ErrorKind::Stage,
              "stitch: view " + std::to_string(j) + " shares only " +
                  std::to_string(int(std::round(frac * 100))) +
                  "% of its pixels with aligned content (need >= " +
                  std::to_string(int(std::round(opt.min_overlap * 100))) + "%)");
      if (opt.solve_shift) {
        double n = double(matched);
        double det = n * sdd - sd * sd;
        require(det > 0.0, ErrorKind::Domain,
                "stitch: view " + std::to_string(j) + " overlap depth is constant; "
                "scale+shift is underdetermined");
        s = (n * sdD - sd * sD) / det;
        b = (sD - s * sd) / n;
      } else {
        require(sdd > 0.0, ErrorKind::Domain,
                "stitch: view " + std::to_string(j) + " overlap has zero depth energy");
        s = sdD / sdd;
      }
      require(std::isfinite(s) && s > 0.0, ErrorKind::Stage,
              "stitch: view " + std::to_string(j) + " solved a non-positive scale");
    }
    res.view_scales[j] = s;
    res.view_shifts[j] = b;

    for (const ViewPixel& p : px) {
      double range = s * p.d + b;
      if (!(range > 0.0)) continue;  // a shifted sample can land behind the camera; drop it
      int32_t& slot = bin_index[size_t(p.bin)];
      if (slot < 0) {
        slot = int32_t(points.size());
        points.push_back({p.dir, range, p.color, p.conf, uint32_t(j)});
      } else if (p.conf > points[size_t(slot)].conf) {
        points[size_t(slot)] = {p.dir, range, p.color, p.conf, uint32_t(j)};
      }
    }
  }

  res.cloud.reserve(points.size());
  for (size_t bin = 0; bin < bin_index.size(); ++bin) {
    int32_t idx = bin_index[bin];
    if (idx < 0) continue;
    const BinPoint& p = points[size_t(idx)];
    res.cloud.push(center + p.dir * p.range, p.color, p.conf, p.view);
  }
  return res;
}

}  // namespace worldgen
