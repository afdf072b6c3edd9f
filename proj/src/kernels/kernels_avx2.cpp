// AVX2 variants. Bit-exact with the scalar reference: identical operation
// order per element, no FMA, reductions in the same fixed lane layout.

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "worldgen/kernels/kernels.hpp"

namespace worldgen::kernels {

namespace {

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

// Same body as the scalar reference; used for remainders and borders.
void gather_one(const float* img, int width, int height, int channels, WrapX wrap, float x,
                float y, float* out) {
  float xf = x - 0.5f, yf = y - 0.5f;
  float fx = std::floor(xf), fy = std::floor(yf);
  float tx = xf - fx, ty = yf - fy;
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
    out[c] = top + ty * (bot - top);
  }
}

inline __m256 lerp_ps(__m256 c0, __m256 c1, __m256 t) {
  return _mm256_add_ps(c0, _mm256_mul_ps(t, _mm256_sub_ps(c1, c0)));
}

void bilinear_gather_avx2(const float* img, int width, int height, int channels, WrapX wrap,
                          const float* xs, const float* ys, int n, float* out) {
  const __m256 half = _mm256_set1_ps(0.5f);
  const __m256i zero = _mm256_setzero_si256();
  const __m256i wm1 = _mm256_set1_epi32(width - 1);
  const __m256i hm1 = _mm256_set1_epi32(height - 1);
  const __m256i one = _mm256_set1_epi32(1);
  const __m256i wvec = _mm256_set1_epi32(width);
  const __m256i cvec = _mm256_set1_epi32(channels);

  int i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 xf = _mm256_sub_ps(_mm256_loadu_ps(xs + i), half);
    __m256 yf = _mm256_sub_ps(_mm256_loadu_ps(ys + i), half);
    __m256 fx = _mm256_floor_ps(xf);
    __m256 fy = _mm256_floor_ps(yf);
    __m256 tx = _mm256_sub_ps(xf, fx);
    __m256 ty = _mm256_sub_ps(yf, fy);
    __m256i x0 = _mm256_cvttps_epi32(fx);
    __m256i y0 = _mm256_cvttps_epi32(fy);
    __m256i x1 = _mm256_add_epi32(x0, one);
    __m256i y1 = _mm256_add_epi32(y0, one);
    y0 = _mm256_min_epi32(_mm256_max_epi32(y0, zero), hm1);
    y1 = _mm256_min_epi32(_mm256_max_epi32(y1, zero), hm1);
    if (wrap == WrapX::Clamp) {
      x0 = _mm256_min_epi32(_mm256_max_epi32(x0, zero), wm1);
      x1 = _mm256_min_epi32(_mm256_max_epi32(x1, zero), wm1);
    } else {
      __m256i neg = _mm256_cmpgt_epi32(zero, x0);
      x0 = _mm256_blendv_epi8(x0, wm1, neg);
      __m256i over = _mm256_cmpgt_epi32(x1, wm1);
      x1 = _mm256_blendv_epi8(x1, zero, over);
    }
    __m256i row0 = _mm256_mullo_epi32(y0, wvec);
    __m256i row1 = _mm256_mullo_epi32(y1, wvec);
    __m256i i00 = _mm256_mullo_epi32(_mm256_add_epi32(row0, x0), cvec);
    __m256i i01 = _mm256_mullo_epi32(_mm256_add_epi32(row0, x1), cvec);
    __m256i i10 = _mm256_mullo_epi32(_mm256_add_epi32(row1, x0), cvec);
    __m256i i11 = _mm256_mullo_epi32(_mm256_add_epi32(row1, x1), cvec);
    for (int c = 0; c < channels; ++c) {
      __m256i off = _mm256_set1_epi32(c);
      __m256 c00 = _mm256_i32gather_ps(img, _mm256_add_epi32(i00, off), 4);
      __m256 c01 = _mm256_i32gather_ps(img, _mm256_add_epi32(i01, off), 4);
      __m256 c10 = _mm256_i32gather_ps(img, _mm256_add_epi32(i10, off), 4);
      __m256 c11 = _mm256_i32gather_ps(img, _mm256_add_epi32(i11, off), 4);
      __m256 top = lerp_ps(c00, c01, tx);
      __m256 bot = lerp_ps(c10, c11, tx);
      __m256 res = lerp_ps(top, bot, ty);
      if (channels == 1) {
        _mm256_storeu_ps(out + i, res);
      } else {
        alignas(32) float tmp[8];
        _mm256_store_ps(tmp, res);
        for (int l = 0; l < 8; ++l) out[(i + l) * channels + c] = tmp[l];
      }
    }
  }
  for (; i < n; ++i)
    gather_one(img, width, height, channels, wrap, xs[i], ys[i], out + static_cast<size_t>(i) * channels);
}

void lerp_avx2(const float* a, const float* b, const float* w, int n, float* out) {
  const __m256 zero = _mm256_setzero_ps();
  const __m256 ones = _mm256_set1_ps(1.0f);
  int i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 av = _mm256_loadu_ps(a + i);
    __m256 bv = _mm256_loadu_ps(b + i);
    __m256 wv = _mm256_loadu_ps(w + i);
    __m256 r = _mm256_add_ps(av, _mm256_mul_ps(wv, _mm256_sub_ps(bv, av)));
    r = _mm256_blendv_ps(r, av, _mm256_cmp_ps(wv, zero, _CMP_EQ_OQ));
    r = _mm256_blendv_ps(r, bv, _mm256_cmp_ps(wv, ones, _CMP_EQ_OQ));
    _mm256_storeu_ps(out + i, r);
  }
  for (; i < n; ++i) {
    float wi = w[i];
    float r = a[i] + wi * (b[i] - a[i]);
    if (wi == 0.0f) r = a[i];
    if (wi == 1.0f) r = b[i];
    out[i] = r;
  }
}

void conv_h_avx2(const float* src, int width, int height, const float* taps, int radius,
                 float* dst) {
  int taps_n = 2 * radius + 1;
  for (int y = 0; y < height; ++y) {
    const float* row = src + static_cast<size_t>(y) * width;
    float* orow = dst + static_cast<size_t>(y) * width;
    int x = 0;
    // borders where the window would clamp
    for (; x < std::min(radius, width); ++x) {
      float acc = 0.0f;
      for (int k = -radius; k <= radius; ++k) acc += taps[k + radius] * row[clampi(x + k, 0, width - 1)];
      orow[x] = acc;
    }
    for (; x + 8 <= width - radius; x += 8) {
      __m256 acc = _mm256_setzero_ps();
      for (int k = 0; k < taps_n; ++k) {
        __m256 t = _mm256_set1_ps(taps[k]);
        __m256 v = _mm256_loadu_ps(row + x - radius + k);
        acc = _mm256_add_ps(acc, _mm256_mul_ps(t, v));
      }
      _mm256_storeu_ps(orow + x, acc);
    }
    for (; x < width; ++x) {
      float acc = 0.0f;
      for (int k = -radius; k <= radius; ++k) acc += taps[k + radius] * row[clampi(x + k, 0, width - 1)];
      orow[x] = acc;
    }
  }
}

void conv_v_avx2(const float* src, int width, int height, const float* taps, int radius,
                 float* dst) {
  int taps_n = 2 * radius + 1;
  for (int y = 0; y < height; ++y) {
    float* orow = dst + static_cast<size_t>(y) * width;
    int x = 0;
    for (; x + 8 <= width; x += 8) {
      __m256 acc = _mm256_setzero_ps();
      for (int k = 0; k < taps_n; ++k) {
        int sy = clampi(y + k - radius, 0, height - 1);
        __m256 t = _mm256_set1_ps(taps[k]);
        __m256 v = _mm256_loadu_ps(src + static_cast<size_t>(sy) * width + x);
        acc = _mm256_add_ps(acc, _mm256_mul_ps(t, v));
      }
      _mm256_storeu_ps(orow + x, acc);
    }
    for (; x < width; ++x) {
      float acc = 0.0f;
      for (int k = -radius; k <= radius; ++k) {
        int sy = clampi(y + k, 0, height - 1);
        acc += taps[k + radius] * src[static_cast<size_t>(sy) * width + x];
      }
      orow[x] = acc;
    }
  }
}

double sum_sq_diff_avx2(const float* a, const float* b, const uint8_t* mask, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d av = _mm256_cvtps_pd(_mm_loadu_ps(a + i));
    __m256d bv = _mm256_cvtps_pd(_mm_loadu_ps(b + i));
    __m256d d = _mm256_sub_pd(av, bv);
    __m256d sq = _mm256_mul_pd(d, d);
    if (mask) {
      int32_t m4;
      std::memcpy(&m4, mask + i, 4);
      __m128i mb = _mm_cvtsi32_si128(m4);
      __m128i mz = _mm_cmpeq_epi8(mb, _mm_setzero_si128());
      __m256d keep = _mm256_castsi256_pd(_mm256_cvtepi8_epi64(mz));
      sq = _mm256_andnot_pd(keep, sq);
    }
    acc = _mm256_add_pd(acc, sq);
  }
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  for (; i < n; ++i) {
    if (mask && mask[i] == 0) continue;
    double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    lane[i & 3] += d * d;
  }
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

void axpy64_avx2(double alpha, const double* x, double* y, int n) {
  const __m256d av = _mm256_set1_pd(alpha);
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d xv = _mm256_loadu_pd(x + i);
    __m256d yv = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(y + i, _mm256_add_pd(yv, _mm256_mul_pd(av, xv)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double dot64_avx2(const double* a, const double* b, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d av = _mm256_loadu_pd(a + i);
    __m256d bv = _mm256_loadu_pd(b + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(av, bv));
  }
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  for (; i < n; ++i) lane[i & 3] += a[i] * b[i];
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

}  // namespace

const Funcs& avx2() {
  static const Funcs f = {bilinear_gather_avx2, lerp_avx2,        conv_h_avx2,
                          conv_v_avx2,          sum_sq_diff_avx2, axpy64_avx2,
                          dot64_avx2};
  return f;
}

}  // namespace worldgen::kernels
