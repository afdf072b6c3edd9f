#include "worldgen/oracle/mocks.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "worldgen/core/rng.hpp"
#include "worldgen/geometry/camera.hpp"

namespace worldgen {

static WireResponse error_response(const std::string& msg) {
  WireResponse r;
  r.ok = false;
  r.message = msg;
  return r;
}

WireResponse ConstantFillBackend::handle(const WireRequest& req) {
  if (req.kind != OracleKind::Inpaint) return error_response("constant-fill only handles inpaint");
  if (!req.mask) return error_response("inpaint request without mask");
  WireResponse resp;
  resp.ok = true;
  ImageU8 out = req.rgb;
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x)
      if (req.mask->at(x, y))
        for (int c = 0; c < 3; ++c) out.at(x, y, c) = color_[c];
  resp.rgb = std::move(out);
  return resp;
}

WireResponse MirrorFillBackend::handle(const WireRequest& req) {
  if (req.kind != OracleKind::Inpaint) return error_response("mirror-fill only handles inpaint");
  if (!req.mask) return error_response("inpaint request without mask");
  const ImageU8& in = req.rgb;
  const ImageU8& mask = *req.mask;
  int w = in.width(), h = in.height();

  // chamfer 3-4 distance transform carrying the nearest known pixel
  const int kInf = std::numeric_limits<int>::max() / 4;
  std::vector<int> dist(static_cast<size_t>(w) * h, kInf);
  std::vector<int> nx(dist.size(), -1), ny(dist.size(), -1);
  auto idx = [w](int x, int y) { return static_cast<size_t>(y) * w + x; };
  bool any_known = false;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (!mask.at(x, y)) {
        dist[idx(x, y)] = 0;
        nx[idx(x, y)] = x;
        ny[idx(x, y)] = y;
        any_known = true;
      }
  if (!any_known) {
    WireResponse resp;
    resp.ok = true;
    resp.rgb = ImageU8(w, h, 3, 127);
    return resp;
  }
  auto relax = [&](int x, int y, int px, int py, int cost) {
    if (px < 0 || px >= w || py < 0 || py >= h) return;
    int cand = dist[idx(px, py)];
    if (cand >= kInf) return;
    if (cand + cost < dist[idx(x, y)]) {
      dist[idx(x, y)] = cand + cost;
      nx[idx(x, y)] = nx[idx(px, py)];
      ny[idx(x, y)] = ny[idx(px, py)];
    }
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      relax(x, y, x - 1, y, 3);
      relax(x, y, x - 1, y - 1, 4);
      relax(x, y, x, y - 1, 3);
      relax(x, y, x + 1, y - 1, 4);
    }
  for (int y = h - 1; y >= 0; --y)
    for (int x = w - 1; x >= 0; --x) {
      relax(x, y, x + 1, y, 3);
      relax(x, y, x + 1, y + 1, 4);
      relax(x, y, x, y + 1, 3);
      relax(x, y, x - 1, y + 1, 4);
    }

  WireResponse resp;
  resp.ok = true;
  ImageU8 out = in;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!mask.at(x, y)) continue;
      int qx = nx[idx(x, y)], qy = ny[idx(x, y)];
      int mx = std::clamp(2 * qx - x, 0, w - 1);
      int my = std::clamp(2 * qy - y, 0, h - 1);
      if (mask.at(mx, my)) {
        mx = qx;
        my = qy;
      }
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = in.at(mx, my, c);
    }
  resp.rgb = std::move(out);
  return resp;
}

WireResponse RefineBackend::handle(const WireRequest& req) {
  if (req.kind != OracleKind::Refine) return error_response("refine backend got a non-refine request");
  WireResponse resp;
  resp.ok = true;
  if (!filter_enabled_) {
    resp.rgb = req.rgb;
    return resp;
  }
  const ImageU8& in = req.rgb;
  int w = in.width(), h = in.height();
  ImageU8 out = in;
  auto sample = [&](int x, int y, int c) {
    x = std::clamp(x, 0, w - 1);
    y = std::clamp(y, 0, h - 1);
    return static_cast<float>(in.at(x, y, c));
  };
  float s = static_cast<float>(req.strength);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (req.mask && !req.mask->at(x, y)) continue;
      for (int c = 0; c < 3; ++c) {
        float blur = 0.0f;
        static const float k3[3] = {0.25f, 0.5f, 0.25f};
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) blur += k3[dy + 1] * k3[dx + 1] * sample(x + dx, y + dy, c);
        float v = sample(x, y, c);
        out.at(x, y, c) = quantize_u8(v + s * (v - blur));
      }
    }
  resp.rgb = std::move(out);
  return resp;
}

Vec3 SyntheticScene::shade(const Vec3& p) const {
  auto cl = [](double v) { return std::clamp(v, 0.0, 255.0); };
  double r = 127.5 + 90.0 * std::sin(0.9 * p.x() + 0.3 * p.y()) + 30.0 * std::cos(1.7 * p.z());
  double g = 127.5 + 80.0 * std::sin(0.5 * p.y() + 1.1 * p.z());
  double b = 127.5 + 70.0 * std::cos(0.7 * p.x() - 0.6 * p.z()) + 40.0 * std::sin(0.4 * p.y());
  return {cl(r), cl(g), cl(b)};
}

double BoxRoomScene::ray_range(const Vec3& origin, const Vec3& dir) const {
  for (int i = 0; i < 3; ++i)
    require(std::abs(origin[i]) < half[i], ErrorKind::Domain, "box scene: camera must be inside");
  double t = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (std::abs(dir[i]) < 1e-14) continue;
    double boundary = dir[i] > 0 ? half[i] : -half[i];
    double ti = (boundary - origin[i]) / dir[i];
    if (ti > 0) t = std::min(t, ti);
  }
  require(std::isfinite(t), ErrorKind::Contract, "box scene: ray escaped");
  return t;
}

double SphereScene::ray_range(const Vec3& origin, const Vec3& dir) const {
  require(origin.norm() < radius, ErrorKind::Domain, "sphere scene: camera must be inside");
  Vec3 d = dir.normalized();
  double b = origin.dot(d);
  double c = origin.squaredNorm() - radius * radius;
  return -b + std::sqrt(b * b - c);
}

double SyntheticDepthBackend::hidden_scale(uint64_t seed) {
  uint64_t s = seed ^ 0x5eedbabe12345678ULL;
  double u = unit_double(splitmix64(s));
  return 0.5 * std::exp(u * std::log(4.0));
}

WireResponse SyntheticDepthBackend::handle(const WireRequest& req) {
  if (req.kind != (metric_ ? OracleKind::DepthMetric : OracleKind::DepthRel))
    return error_response("depth backend got a mismatched kind");
  if (!req.meta.is_object() || !req.meta.contains("pose") || !req.meta.contains("fov_x"))
    return error_response("depth request needs pose and fov in meta");
  Mat3 rot;
  Vec3 pos;
  try {
    auto r = req.meta.at("pose").at("rotation").get<std::vector<double>>();
    auto t = req.meta.at("pose").at("position").get<std::vector<double>>();
    if (r.size() != 9 || t.size() != 3) return error_response("bad pose in meta");
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) rot(i, j) = r[static_cast<size_t>(i) * 3 + j];
    pos = Vec3(t[0], t[1], t[2]);
  } catch (const nlohmann::json::exception& e) {
    return error_response(std::string("bad meta: ") + e.what());
  }
  double fov_x = req.meta.at("fov_x").get<double>();
  double fov_y = req.meta.value("fov_y", fov_x);

  ImageF32 range;
  raycast_scene(*scene_, rot, pos, fov_x, fov_y, req.rgb.width(), req.rgb.height(), nullptr,
                &range);
  if (!metric_) {
    float a = static_cast<float>(hidden_scale(req.seed));
    for (size_t i = 0; i < range.count(); ++i) range.data()[i] *= a;
  }
  WireResponse resp;
  resp.ok = true;
  resp.depth = std::move(range);
  resp.confidence = ImageU8(req.rgb.width(), req.rgb.height(), 1, 255);
  resp.metric = metric_;
  return resp;
}

void raycast_scene(const SyntheticScene& scene, const Mat3& rotation, const Vec3& position,
                   double fov_x, double fov_y, int width, int height, ImageF32* out_rgb,
                   ImageF32* out_range) {
  Intrinsics K{width, height, fov_x, fov_y};
  K.validate();
  if (out_rgb) *out_rgb = ImageF32(width, height, 3);
  if (out_range) *out_range = ImageF32(width, height, 1);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      Vec3 d = rotation * view_ray(x + 0.5, y + 0.5, K);
      double t = scene.ray_range(position, d);
      if (out_range) out_range->at(x, y) = static_cast<float>(t);
      if (out_rgb) {
        Vec3 col = scene.shade(position + t * d);
        for (int c = 0; c < 3; ++c) out_rgb->at(x, y, c) = static_cast<float>(col[c]);
      }
    }
}

}  // namespace worldgen
