#pragma once

#include "worldgen/core/image.hpp"
#include "worldgen/geometry/camera.hpp"

namespace worldgen {

// Equirectangular canvas, stored top-down: row 0 is straight up (phi = pi/2).
// Width must be 2 * height; x wraps, y clamps.
struct EquirectPanorama {
  ImageF32 rgb;  // H x W x 3
  Mask fill;     // 255 where the canvas holds content

  static EquirectPanorama create(int width) {
    require(width >= 2 && width % 2 == 0, ErrorKind::Domain, "pano width must be even, >= 2");
    EquirectPanorama p;
    p.rgb = ImageF32(width, width / 2, 3, 0.0f);
    p.fill = Mask(width, width / 2, 1, 0);
    return p;
  }
  int width() const { return rgb.width(); }
  int height() const { return rgb.height(); }
};

// Pixel-center coordinate x in [0, W) <-> azimuth theta in [-pi, pi).
inline double theta_to_panox(double theta, int w) { return (theta + kPi) / (2.0 * kPi) * w; }
inline double panox_to_theta(double x, int w) { return x / w * 2.0 * kPi - kPi; }
// Row coordinate y in [0, H] <-> elevation phi (row 0 = +pi/2, top-down).
inline double phi_to_panoy(double phi, int h) { return (kPi / 2.0 - phi) / kPi * h; }
inline double panoy_to_phi(double y, int h) { return kPi / 2.0 - y / h * kPi; }

struct ViewRender {
  ImageF32 rgb;  // sampled colors
  Mask known;    // 255 where every contributing pano tap was filled
};

// Render a perspective view by inverse-mapping each view pixel onto the pano.
// Only the pose rotation matters (the pano lives on the sphere at infinity).
ViewRender render_view_from_pano(const EquirectPanorama& pano, const CameraPose& pose,
                                 const Intrinsics& K);

struct ProjectOptions {
  double feather_radius_px = 5.0;  // soft blend band, view pixels
  const Mask* protect = nullptr;   // pano-space; true pixels are never altered
  Mask* out_written = nullptr;     // receives the pano-space hard-write footprint
};

// Forward-project view content onto the pano. Pixels whose write_mask center
// lands on unfilled canvas are written hard (and become filled); already
// filled pixels are blended with feathered weights so seams vanish.
void project_view_to_pano(const ImageF32& view, const Mask& write_mask, const CameraPose& pose,
                          const Intrinsics& K, EquirectPanorama& pano,
                          const ProjectOptions& opt = {});

// Fraction of the sphere that is filled (pixels weighted by cos(phi), i.e.
// true solid-angle coverage).
double weighted_fill_fraction(const EquirectPanorama& pano);

// Clear fill+rgb on a footprint (used to retract anchor content).
void clear_region(EquirectPanorama& pano, const Mask& region);

}  // namespace worldgen
