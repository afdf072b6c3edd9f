#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace worldgen::kernels {

enum class Backend { Scalar, Avx2 };

enum class WrapX { Clamp, Wrap };  // y always clamps

// Every function has a scalar reference implementation and an AVX2 variant.
// The two are bit-exact by contract: no FMA, identical operation order, and
// reductions decomposed into fixed lanes. Tests enforce equality on random
// inputs, so a backend switch can never change any output byte.
struct Funcs {
  // Bilinear gather with pixel centers at half-integer coordinates: the
  // sample at (ix + 0.5, iy + 0.5) returns pixel (ix, iy) exactly.
  // `channels` is 1 or 3; out has n*channels entries. WrapX::Wrap requires
  // xs[i] in [0, width).
  void (*bilinear_gather)(const float* img, int width, int height, int channels,
                          WrapX wrap, const float* xs, const float* ys, int n, float* out);

  // out[i] = a[i] + w[i]*(b[i]-a[i]), with exact endpoints at w==0 / w==1.
  void (*lerp)(const float* a, const float* b, const float* w, int n, float* out);

  // Single-channel horizontal / vertical correlation with clamped borders.
  // taps has 2*radius+1 entries; accumulation runs in tap order.
  void (*conv_h)(const float* src, int width, int height, const float* taps, int radius,
                 float* dst);
  void (*conv_v)(const float* src, int width, int height, const float* taps, int radius,
                 float* dst);

  // Masked sum of squared differences in f64. Element i accumulates into
  // lane (i & 3); lanes combine as (l0+l1)+(l2+l3). mask==nullptr means all.
  double (*sum_sq_diff)(const float* a, const float* b, const uint8_t* mask, size_t n);

  // y[i] += alpha * x[i]
  void (*axpy64)(double alpha, const double* x, double* y, int n);

  // Dot product in f64. Element i accumulates into lane (i & 3); lanes
  // combine as (l0+l1)+(l2+l3), mirroring sum_sq_diff.
  double (*dot64)(const double* a, const double* b, size_t n);
};

const Funcs& scalar();
const Funcs& avx2();  // raises if the CPU lacks AVX2

Backend detect_backend();          // cpuid + WORLDGEN_KERNELS override
const Funcs& active();             // funcs for detect_backend()
std::string backend_name(Backend b);

}  // namespace worldgen::kernels
