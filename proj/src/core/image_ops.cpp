#include "worldgen/core/image_ops.hpp"

#include <cmath>

#include "worldgen/kernels/kernels.hpp"

namespace worldgen {

std::vector<float> gaussian_taps(double sigma) {
  require(sigma > 0.0, ErrorKind::Domain, "gaussian sigma must be positive");
  int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> t(2 * radius + 1);
  double sum = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    double v = std::exp(-0.5 * (k / sigma) * (k / sigma));
    t[k + radius] = v;
    sum += v;
  }
  std::vector<float> taps(t.size());
  for (size_t i = 0; i < t.size(); ++i) taps[i] = static_cast<float>(t[i] / sum);
  return taps;
}

ImageF32 gaussian_blur(const ImageF32& img, double sigma) {
  auto taps = gaussian_taps(sigma);
  int radius = (static_cast<int>(taps.size()) - 1) / 2;
  const auto& k = kernels::active();
  ImageF32 out(img.width(), img.height(), img.channels());
  std::vector<float> plane(static_cast<size_t>(img.width()) * img.height());
  std::vector<float> tmp(plane.size());
  for (int c = 0; c < img.channels(); ++c) {
    const float* s = img.data();
    for (size_t i = 0; i < plane.size(); ++i) plane[i] = s[i * img.channels() + c];
    k.conv_h(plane.data(), img.width(), img.height(), taps.data(), radius, tmp.data());
    k.conv_v(tmp.data(), img.width(), img.height(), taps.data(), radius, plane.data());
    float* d = out.data();
    for (size_t i = 0; i < plane.size(); ++i) d[i * img.channels() + c] = plane[i];
  }
  return out;
}

ImageF32 mask_to_float01(const Mask& m) {
  ImageF32 out(m.width(), m.height(), 1);
  const uint8_t* s = m.data();
  float* d = out.data();
  for (size_t i = 0; i < m.count(); ++i) d[i] = s[i] ? 1.0f : 0.0f;
  return out;
}

ImageF32 feather_mask(const Mask& m, double radius_px) {
  require(radius_px > 0.0, ErrorKind::Domain, "feather radius must be positive");
  return gaussian_blur(mask_to_float01(m), radius_px / 3.0);
}

ImageF32 lerp_images(const ImageF32& a, const ImageF32& b, const ImageF32& w) {
  require(a.same_shape(b), ErrorKind::Domain, "lerp_images: shape mismatch");
  require(w.width() == a.width() && w.height() == a.height() && w.channels() == 1,
          ErrorKind::Domain, "lerp_images: weight must be 1-channel, same size");
  ImageF32 out(a.width(), a.height(), a.channels());
  if (a.channels() == 1) {
    kernels::active().lerp(a.data(), b.data(), w.data(), static_cast<int>(a.count()), out.data());
    return out;
  }
  std::vector<float> wb(a.count());
  const float* ws = w.data();
  for (size_t i = 0; i < w.count(); ++i)
    for (int c = 0; c < a.channels(); ++c) wb[i * a.channels() + c] = ws[i];
  kernels::active().lerp(a.data(), b.data(), wb.data(), static_cast<int>(a.count()), out.data());
  return out;
}

}  // namespace worldgen
