#include "worldgen/geometry/equirect.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "worldgen/core/image_ops.hpp"
#include "worldgen/kernels/kernels.hpp"

namespace worldgen {

namespace {

// Same tap selection as the bilinear kernels; true iff every tap with a
// nonzero weight is set in the mask.
bool taps_all_set(const Mask& m, float x, float y, bool wrap_x) {
  int w = m.width(), h = m.height();
  float xf = x - 0.5f, yf = y - 0.5f;
  float fx = std::floor(xf), fy = std::floor(yf);
  float tx = xf - fx, ty = yf - fy;
  int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
  int x1 = x0 + 1, y1 = y0 + 1;
  y0 = std::clamp(y0, 0, h - 1);
  y1 = std::clamp(y1, 0, h - 1);
  if (wrap_x) {
    if (x0 < 0) x0 = w - 1;
    if (x1 > w - 1) x1 = 0;
  } else {
    x0 = std::clamp(x0, 0, w - 1);
    x1 = std::clamp(x1, 0, w - 1);
  }
  bool need_x1 = tx != 0.0f, need_y1 = ty != 0.0f;
  if (!m.at(x0, y0)) return false;
  if (need_x1 && !m.at(x1, y0)) return false;
  if (need_y1 && !m.at(x0, y1)) return false;
  if (need_x1 && need_y1 && !m.at(x1, y1)) return false;
  return true;
}

}  // namespace

ViewRender render_view_from_pano(const EquirectPanorama& pano, const CameraPose& pose,
                                 const Intrinsics& K) {
  K.validate();
  pose.validate();
  int w = K.width, h = K.height;
  int pw = pano.width(), ph = pano.height();
  ViewRender out;
  out.rgb = ImageF32(w, h, 3, 0.0f);
  out.known = Mask(w, h, 1, 0);

  const auto& kf = kernels::active();
  std::vector<float> xs(w), ys(w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      Vec3 d = pose.rotation * view_ray(x + 0.5, y + 0.5, K);
      double theta, phi;
      dir_to_angles(d, theta, phi);
      double px = theta_to_panox(theta, pw);
      if (px >= pw) px -= pw;
      if (px < 0) px += pw;
      xs[x] = static_cast<float>(px);
      ys[x] = static_cast<float>(phi_to_panoy(phi, ph));
    }
    kf.bilinear_gather(pano.rgb.data(), pw, ph, 3, kernels::WrapX::Wrap, xs.data(), ys.data(), w,
                       out.rgb.row(y));
    uint8_t* krow = out.known.row(y);
    for (int x = 0; x < w; ++x)
      krow[x] = taps_all_set(pano.fill, xs[x], ys[x], true) ? kMaskOn : 0;
  }
  return out;
}

void project_view_to_pano(const ImageF32& view, const Mask& write_mask, const CameraPose& pose,
                          const Intrinsics& K, EquirectPanorama& pano, const ProjectOptions& opt) {
  K.validate();
  pose.validate();
  require(view.channels() == 3 && view.width() == K.width && view.height() == K.height,
          ErrorKind::Domain, "project: view does not match intrinsics");
  require(write_mask.width() == view.width() && write_mask.height() == view.height(),
          ErrorKind::Domain, "project: mask does not match view");
  if (opt.out_written &&
      (opt.out_written->width() != pano.width() || opt.out_written->height() != pano.height()))
    *opt.out_written = Mask(pano.width(), pano.height(), 1, 0);

  int pw = pano.width(), ph = pano.height();
  Mat3 rt = pose.rotation.transpose();
  ImageF32 soft = feather_mask(write_mask, opt.feather_radius_px);
  ImageF32 raw = mask_to_float01(write_mask);

  std::vector<double> sin_t(pw), cos_t(pw);
  for (int x = 0; x < pw; ++x) {
    double theta = panox_to_theta(x + 0.5, pw);
    sin_t[x] = std::sin(theta);
    cos_t[x] = std::cos(theta);
  }

  const auto& kf = kernels::active();
  std::vector<float> xs(pw), ys(pw);
  std::vector<int> cols(pw);
  std::vector<float> rgb_s(static_cast<size_t>(pw) * 3), soft_s(pw), raw_s(pw);

  for (int y = 0; y < ph; ++y) {
    double phi = panoy_to_phi(y + 0.5, ph);
    double sp = std::sin(phi), cp = std::cos(phi);
    int n = 0;
    for (int x = 0; x < pw; ++x) {
      Vec3 d(sin_t[x] * cp, cos_t[x] * cp, sp);
      Vec3 dc = rt * d;
      double vx, vy;
      if (!dir_to_view_pixel(dc, K, vx, vy)) continue;
      cols[n] = x;
      xs[n] = static_cast<float>(vx);
      ys[n] = static_cast<float>(vy);
      ++n;
    }
    if (n == 0) continue;
    kf.bilinear_gather(view.data(), K.width, K.height, 3, kernels::WrapX::Clamp, xs.data(),
                       ys.data(), n, rgb_s.data());
    kf.bilinear_gather(soft.data(), K.width, K.height, 1, kernels::WrapX::Clamp, xs.data(),
                       ys.data(), n, soft_s.data());
    kf.bilinear_gather(raw.data(), K.width, K.height, 1, kernels::WrapX::Clamp, xs.data(),
                       ys.data(), n, raw_s.data());

    float* prow = pano.rgb.row(y);
    uint8_t* frow = pano.fill.row(y);
    for (int i = 0; i < n; ++i) {
      int x = cols[i];
      if (opt.protect && opt.protect->at(x, y)) continue;
      bool hard = raw_s[i] > 0.5f;
      if (frow[x]) {
        float w = soft_s[i];
        if (w <= 0.0f) {
          if (hard && opt.out_written) opt.out_written->at(x, y) = kMaskOn;
          continue;
        }
        if (w > 1.0f) w = 1.0f;
        for (int c = 0; c < 3; ++c) {
          float base = prow[x * 3 + c];
          prow[x * 3 + c] = base + w * (rgb_s[i * 3 + c] - base);
        }
        if (hard && opt.out_written) opt.out_written->at(x, y) = kMaskOn;
      } else if (hard) {
        for (int c = 0; c < 3; ++c) prow[x * 3 + c] = rgb_s[i * 3 + c];
        frow[x] = kMaskOn;
        if (opt.out_written) opt.out_written->at(x, y) = kMaskOn;
      }
    }
  }
}

double weighted_fill_fraction(const EquirectPanorama& pano) {
  double num = 0.0, den = 0.0;
  for (int y = 0; y < pano.height(); ++y) {
    double wgt = std::cos(panoy_to_phi(y + 0.5, pano.height()));
    const uint8_t* frow = pano.fill.row(y);
    int cnt = 0;
    for (int x = 0; x < pano.width(); ++x) cnt += frow[x] ? 1 : 0;
    num += wgt * cnt;
    den += wgt * pano.width();
  }
  return den > 0 ? num / den : 0.0;
}

void clear_region(EquirectPanorama& pano, const Mask& region) {
  require(region.width() == pano.width() && region.height() == pano.height(), ErrorKind::Domain,
          "clear_region: shape mismatch");
  for (int y = 0; y < pano.height(); ++y) {
    const uint8_t* r = region.row(y);
    uint8_t* f = pano.fill.row(y);
    float* p = pano.rgb.row(y);
    for (int x = 0; x < pano.width(); ++x) {
      if (!r[x]) continue;
      f[x] = 0;
      p[x * 3] = p[x * 3 + 1] = p[x * 3 + 2] = 0.0f;
    }
  }
}

}  // namespace worldgen
