#include <algorithm>
#include <cmath>

#include "worldgen/kernels/kernels.hpp"

namespace worldgen::kernels {

namespace {

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

void bilinear_gather_scalar(const float* img, int width, int height, int channels, WrapX wrap,
                            const float* xs, const float* ys, int n, float* out) {
  for (int i = 0; i < n; ++i) {
    float xf = xs[i] - 0.5f;
    float yf = ys[i] - 0.5f;
    float fx = std::floor(xf);
    float fy = std::floor(yf);
    float tx = xf - fx;
    float ty = yf - fy;
    int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
    int x1 = x0 + 1, y1 = y0 + 1;
    y0 = clampi(y0, 0, height - 1);
    y1 = clampi(y1, 0, height - 1);
    if (wrap == WrapX::Clamp) {
      x0 = clampi(x0, 0, width - 1);
      x1 = clampi(x1, 0, width - 1);
    } else {
      if (x0 < 0) x0 = width - 1;
      if (x1 > width - 1) x1 = 0;
    }
    const float* r0 = img + static_cast<size_t>(y0) * width * channels;
    const float* r1 = img + static_cast<size_t>(y1) * width * channels;
    for (int c = 0; c < channels; ++c) {
      float c00 = r0[x0 * channels + c];
      float c01 = r0[x1 * channels + c];
      float c10 = r1[x0 * channels + c];
      float c11 = r1[x1 * channels + c];
      float top = c00 + tx * (c01 - c00);
      float bot = c10 + tx * (c11 - c10);
      out[i * channels + c] = top + ty * (bot - top);
    }
  }
}

void lerp_scalar(const float* a, const float* b, const float* w, int n, float* out) {
  for (int i = 0; i < n; ++i) {
    float wi = w[i];
    float r = a[i] + wi * (b[i] - a[i]);
    if (wi == 0.0f) r = a[i];
    if (wi == 1.0f) r = b[i];
    out[i] = r;
  }
}

void conv_h_scalar(const float* src, int width, int height, const float* taps, int radius,
                   float* dst) {
  for (int y = 0; y < height; ++y) {
    const float* row = src + static_cast<size_t>(y) * width;
    float* orow = dst + static_cast<size_t>(y) * width;
    for (int x = 0; x < width; ++x) {
      float acc = 0.0f;
      for (int k = -radius; k <= radius; ++k) {
        int sx = clampi(x + k, 0, width - 1);
        acc += taps[k + radius] * row[sx];
      }
      orow[x] = acc;
    }
  }
}

void conv_v_scalar(const float* src, int width, int height, const float* taps, int radius,
                   float* dst) {
  for (int y = 0; y < height; ++y) {
    float* orow = dst + static_cast<size_t>(y) * width;
    for (int x = 0; x < width; ++x) {
      float acc = 0.0f;
      for (int k = -radius; k <= radius; ++k) {
        int sy = clampi(y + k, 0, height - 1);
        acc += taps[k + radius] * src[static_cast<size_t>(sy) * width + x];
      }
      orow[x] = acc;
    }
  }
}

double sum_sq_diff_scalar(const float* a, const float* b, const uint8_t* mask, size_t n) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  for (size_t i = 0; i < n; ++i) {
    if (mask && mask[i] == 0) continue;
    double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    lane[i & 3] += d * d;
  }
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

void axpy64_scalar(double alpha, const double* x, double* y, int n) {
  for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double dot64_scalar(const double* a, const double* b, size_t n) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  for (size_t i = 0; i < n; ++i) lane[i & 3] += a[i] * b[i];
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

}  // namespace

const Funcs& scalar() {
  static const Funcs f = {bilinear_gather_scalar, lerp_scalar,        conv_h_scalar,
                          conv_v_scalar,          sum_sq_diff_scalar, axpy64_scalar,
                          dot64_scalar};
  return f;
}

}  // namespace worldgen::kernels
