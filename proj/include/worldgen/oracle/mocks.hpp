#pragma once

#include <array>
#include <memory>

#include "worldgen/core/mat.hpp"
#include "worldgen/oracle/oracle.hpp"

namespace worldgen {

// Deterministic stand-ins for the generative models. Outputs are pure
// functions of (request, seed).

// Fills masked pixels with a constant color.
class ConstantFillBackend : public OracleBackend {
 public:
  explicit ConstantFillBackend(std::array<uint8_t, 3> color = {90, 140, 190}) : color_(color) {}
  WireResponse handle(const WireRequest& req) override;

 private:
  std::array<uint8_t, 3> color_;
};

// Fills each masked pixel from known content reflected about the nearest
// known pixel; falls back to that nearest pixel when the reflection lands
// outside or in the hole.
class MirrorFillBackend : public OracleBackend {
 public:
  WireResponse handle(const WireRequest& req) override;
};

// Mild blur-sharpen inside the mask. With the filter disabled this is an
// exact pass-through (used to pin down plumbing bit-exactness).
class RefineBackend : public OracleBackend {
 public:
  explicit RefineBackend(bool filter_enabled = true) : filter_enabled_(filter_enabled) {}
  WireResponse handle(const WireRequest& req) override;

 private:
  bool filter_enabled_;
};

// Analytic scene for synthetic depth. Cameras sit near the origin, inside
// the geometry.
struct SyntheticScene {
  virtual ~SyntheticScene() = default;
  virtual double ray_range(const Vec3& origin, const Vec3& dir) const = 0;
  // smooth procedural surface color in the 0..255 domain
  Vec3 shade(const Vec3& p) const;
};

// Axis-aligned room centered at the origin.
struct BoxRoomScene : SyntheticScene {
  Vec3 half;
  explicit BoxRoomScene(const Vec3& half_extents = Vec3(4.0, 5.0, 2.0)) : half(half_extents) {}
  double ray_range(const Vec3& origin, const Vec3& dir) const override;
};

struct SphereScene : SyntheticScene {
  double radius;
  explicit SphereScene(double r = 5.0) : radius(r) {}
  double ray_range(const Vec3& origin, const Vec3& dir) const override;
};

// Ray-casts the scene with the camera carried in request meta
// ({"pose":{"rotation":[9 row-major],"position":[3]},"fov_x","fov_y"}).
// The metric variant returns true ranges; the relative variant multiplies by
// a hidden seed-derived factor in [0.5, 2] (log-uniform) the caller must
// recover.
class SyntheticDepthBackend : public OracleBackend {
 public:
  SyntheticDepthBackend(std::shared_ptr<SyntheticScene> scene, bool metric)
      : scene_(std::move(scene)), metric_(metric) {}
  WireResponse handle(const WireRequest& req) override;

  static double hidden_scale(uint64_t seed);

 private:
  std::shared_ptr<SyntheticScene> scene_;
  bool metric_;
};

// Renders a scene view directly (test helper, not an oracle): colors from
// SyntheticScene::shade at the ray hit, depth as range.
void raycast_scene(const SyntheticScene& scene, const Mat3& rotation, const Vec3& position,
                   double fov_x, double fov_y, int width, int height, ImageF32* out_rgb,
                   ImageF32* out_range);

}  // namespace worldgen
