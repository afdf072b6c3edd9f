#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "worldgen/core/error.hpp"
#include "worldgen/core/rng.hpp"
#include "worldgen/kernels/kernels.hpp"

using namespace worldgen;
using namespace worldgen::kernels;

namespace {

bool have_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") != 0;
#else
  return false;
#endif
}

std::vector<float> random_image(Rng& rng, int w, int h, int c) {
  std::vector<float> img(static_cast<size_t>(w) * h * c);
  for (auto& v : img) v = static_cast<float>(rng.uniform(0.0, 255.0));
  return img;
}

}  // namespace

TEST_CASE("bilinear gather at pixel centers reproduces the image bit-exactly") {
  Rng rng(7);
  int w = 37, h = 23;
  for (int c : {1, 3}) {
    auto img = random_image(rng, w, h, c);
    std::vector<float> xs, ys;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        xs.push_back(x + 0.5f);
        ys.push_back(y + 0.5f);
      }
    std::vector<float> out(img.size());
    for (const Funcs* f : {&scalar(), have_avx2() ? &avx2() : &scalar()}) {
      f->bilinear_gather(img.data(), w, h, c, WrapX::Clamp, xs.data(), ys.data(),
                         static_cast<int>(xs.size()), out.data());
      CHECK(std::memcmp(out.data(), img.data(), img.size() * sizeof(float)) == 0);
      f->bilinear_gather(img.data(), w, h, c, WrapX::Wrap, xs.data(), ys.data(),
                         static_cast<int>(xs.size()), out.data());
      CHECK(std::memcmp(out.data(), img.data(), img.size() * sizeof(float)) == 0);
    }
  }
}

TEST_CASE("bilinear gather matches a plain double-precision reference") {
  Rng rng(11);
  int w = 19, h = 13, c = 3, n = 500;
  auto img = random_image(rng, w, h, c);
  std::vector<float> xs(n), ys(n), out(static_cast<size_t>(n) * c);
  for (int i = 0; i < n; ++i) {
    xs[i] = static_cast<float>(rng.uniform(0.0, w));  // wrap domain [0, W)
    if (xs[i] >= w) xs[i] = 0.0f;
    ys[i] = static_cast<float>(rng.uniform(-2.0, h + 2.0));
  }
  scalar().bilinear_gather(img.data(), w, h, c, WrapX::Wrap, xs.data(), ys.data(), n, out.data());
  for (int i = 0; i < n; ++i) {
    double xf = static_cast<double>(xs[i]) - 0.5, yf = static_cast<double>(ys[i]) - 0.5;
    int x0 = static_cast<int>(std::floor(xf)), y0 = static_cast<int>(std::floor(yf));
    double tx = xf - x0, ty = yf - y0;
    auto wrapx = [&](int x) { return x < 0 ? w - 1 : (x > w - 1 ? 0 : x); };
    auto clampy = [&](int y) { return y < 0 ? 0 : (y > h - 1 ? h - 1 : y); };
    for (int ch = 0; ch < c; ++ch) {
      auto px = [&](int x, int y) {
        return static_cast<double>(img[(static_cast<size_t>(clampy(y)) * w + wrapx(x)) * c + ch]);
      };
      double ref = (1 - ty) * ((1 - tx) * px(x0, y0) + tx * px(x0 + 1, y0)) +
                   ty * ((1 - tx) * px(x0, y0 + 1) + tx * px(x0 + 1, y0 + 1));
      CHECK(out[i * c + ch] == doctest::Approx(ref).epsilon(1e-5));
    }
  }
}

TEST_CASE("lerp endpoints are exact") {
  std::vector<float> a = {1.5f, -3.25f, 100.0f, 0.0f};
  std::vector<float> b = {7.5f, 2.75f, -50.0f, 255.0f};
  std::vector<float> w = {0.0f, 1.0f, 0.25f, 0.5f};
  std::vector<float> out(4);
  scalar().lerp(a.data(), b.data(), w.data(), 4, out.data());
  CHECK(out[0] == 1.5f);
  CHECK(out[1] == 2.75f);
  CHECK(out[2] == doctest::Approx(62.5));
  CHECK(out[3] == 127.5f);
}

TEST_CASE("separable convolution matches direct 2d convolution") {
  Rng rng(13);
  int w = 17, h = 11;
  auto img = random_image(rng, w, h, 1);
  std::vector<float> taps = {0.25f, 0.5f, 0.25f};
  int r = 1;
  std::vector<float> tmp(img.size()), out(img.size());
  scalar().conv_h(img.data(), w, h, taps.data(), r, tmp.data());
  scalar().conv_v(tmp.data(), w, h, taps.data(), r, out.data());
  auto cl = [](int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int ky = -r; ky <= r; ++ky)
        for (int kx = -r; kx <= r; ++kx)
          acc += taps[ky + r] * taps[kx + r] *
                 img[static_cast<size_t>(cl(y + ky, 0, h - 1)) * w + cl(x + kx, 0, w - 1)];
      CHECK(out[static_cast<size_t>(y) * w + x] == doctest::Approx(acc).epsilon(1e-5));
    }
}

TEST_CASE("sum_sq_diff follows the fixed lane decomposition") {
  Rng rng(17);
  size_t n = 1003;
  std::vector<float> a(n), b(n);
  std::vector<uint8_t> m(n);
  for (size_t i = 0; i < n; ++i) {
    a[i] = static_cast<float>(rng.uniform(0.0, 255.0));
    b[i] = static_cast<float>(rng.uniform(0.0, 255.0));
    m[i] = rng.uniform() < 0.3 ? 0 : 255;
  }
  double lane[4] = {0, 0, 0, 0};
  for (size_t i = 0; i < n; ++i) {
    if (m[i] == 0) continue;
    double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    lane[i & 3] += d * d;
  }
  double expect = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  CHECK(scalar().sum_sq_diff(a.data(), b.data(), m.data(), n) == expect);
  CHECK(scalar().sum_sq_diff(a.data(), b.data(), nullptr, n) > expect);
}

TEST_CASE("axpy64 accumulates in place") {
  std::vector<double> x = {1.0, 2.0, 3.0, 4.0, 5.0};
  std::vector<double> y = {10.0, 10.0, 10.0, 10.0, 10.0};
  scalar().axpy64(0.5, x.data(), y.data(), 5);
  CHECK(y[0] == 10.5);
  CHECK(y[4] == 12.5);
}

TEST_CASE("dot64 follows the fixed lane decomposition") {
  Rng rng(31);
  size_t n = 1003;
  std::vector<double> a(n), b(n);
  for (size_t i = 0; i < n; ++i) {
    a[i] = rng.uniform(-2.0, 2.0);
    b[i] = rng.uniform(-2.0, 2.0);
  }
  double lane[4] = {0, 0, 0, 0};
  for (size_t i = 0; i < n; ++i) lane[i & 3] += a[i] * b[i];
  double expect = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  CHECK(scalar().dot64(a.data(), b.data(), n) == expect);
  CHECK(scalar().dot64(a.data(), a.data(), n) > 0.0);
}

TEST_CASE("avx2 backend is bit-exact with the scalar reference") {
  if (!have_avx2()) return;
  Rng rng(23);
  const Funcs& s = scalar();
  const Funcs& v = avx2();

  SUBCASE("bilinear_gather") {
    for (int c : {1, 3}) {
      int w = 41, h = 29, n = 777;
      auto img = random_image(rng, w, h, c);
      std::vector<float> xs(n), ys(n);
      for (int i = 0; i < n; ++i) {
        xs[i] = static_cast<float>(rng.uniform(0.0, w - 1e-4));
        ys[i] = static_cast<float>(rng.uniform(-3.0, h + 3.0));
      }
      std::vector<float> o1(static_cast<size_t>(n) * c), o2(o1.size());
      for (auto wrap : {WrapX::Clamp, WrapX::Wrap}) {
        s.bilinear_gather(img.data(), w, h, c, wrap, xs.data(), ys.data(), n, o1.data());
        v.bilinear_gather(img.data(), w, h, c, wrap, xs.data(), ys.data(), n, o2.data());
        CHECK(std::memcmp(o1.data(), o2.data(), o1.size() * sizeof(float)) == 0);
      }
    }
  }

  SUBCASE("lerp") {
    int n = 1001;
    std::vector<float> a(n), b(n), w(n), o1(n), o2(n);
    for (int i = 0; i < n; ++i) {
      a[i] = static_cast<float>(rng.uniform(-255.0, 255.0));
      b[i] = static_cast<float>(rng.uniform(-255.0, 255.0));
      double u = rng.uniform();
      w[i] = u < 0.1 ? 0.0f : (u < 0.2 ? 1.0f : static_cast<float>(rng.uniform()));
    }
    s.lerp(a.data(), b.data(), w.data(), n, o1.data());
    v.lerp(a.data(), b.data(), w.data(), n, o2.data());
    CHECK(std::memcmp(o1.data(), o2.data(), o1.size() * sizeof(float)) == 0);
  }

  SUBCASE("conv") {
    int w = 53, h = 31;
    auto img = random_image(rng, w, h, 1);
    for (int r : {1, 3, 7, 40}) {
      std::vector<float> taps(2 * r + 1);
      float sum = 0;
      for (auto& t : taps) {
        t = static_cast<float>(rng.uniform());
        sum += t;
      }
      for (auto& t : taps) t /= sum;
      std::vector<float> o1(img.size()), o2(img.size());
      s.conv_h(img.data(), w, h, taps.data(), r, o1.data());
      v.conv_h(img.data(), w, h, taps.data(), r, o2.data());
      CHECK(std::memcmp(o1.data(), o2.data(), o1.size() * sizeof(float)) == 0);
      s.conv_v(img.data(), w, h, taps.data(), r, o1.data());
      v.conv_v(img.data(), w, h, taps.data(), r, o2.data());
      CHECK(std::memcmp(o1.data(), o2.data(), o1.size() * sizeof(float)) == 0);
    }
  }

  SUBCASE("sum_sq_diff") {
    for (size_t n : {1u, 3u, 4u, 5u, 1024u, 100003u}) {
      std::vector<float> a(n), b(n);
      std::vector<uint8_t> m(n);
      for (size_t i = 0; i < n; ++i) {
        a[i] = static_cast<float>(rng.uniform(0.0, 255.0));
        b[i] = static_cast<float>(rng.uniform(0.0, 255.0));
        m[i] = rng.uniform() < 0.5 ? 0 : 1;
      }
      CHECK(s.sum_sq_diff(a.data(), b.data(), m.data(), n) ==
            v.sum_sq_diff(a.data(), b.data(), m.data(), n));
      CHECK(s.sum_sq_diff(a.data(), b.data(), nullptr, n) ==
            v.sum_sq_diff(a.data(), b.data(), nullptr, n));
    }
  }

  SUBCASE("axpy64") {
    int n = 1003;
    std::vector<double> x(n), y1(n), y2(n);
    for (int i = 0; i < n; ++i) {
      x[i] = rng.uniform(-1.0, 1.0);
      y1[i] = y2[i] = rng.uniform(-1.0, 1.0);
    }
    s.axpy64(0.7310585786300049, x.data(), y1.data(), n);
    v.axpy64(0.7310585786300049, x.data(), y2.data(), n);
    CHECK(std::memcmp(y1.data(), y2.data(), y1.size() * sizeof(double)) == 0);
  }

  SUBCASE("dot64") {
    for (size_t n : {1u, 3u, 4u, 5u, 64u, 1003u, 100003u}) {
      std::vector<double> a(n), b(n);
      for (size_t i = 0; i < n; ++i) {
        a[i] = rng.uniform(-3.0, 3.0);
        b[i] = rng.uniform(-3.0, 3.0);
      }
      double r1 = s.dot64(a.data(), b.data(), n);
      double r2 = v.dot64(a.data(), b.data(), n);
      CHECK(std::memcmp(&r1, &r2, sizeof(double)) == 0);
    }
  }
}

TEST_CASE("backend dispatch honors the environment override") {
  // Cannot re-resolve active() within one process; check detect_backend().
  if (have_avx2()) CHECK(detect_backend() == Backend::Avx2);
  setenv("WORLDGEN_KERNELS", "scalar", 1);
  CHECK(detect_backend() == Backend::Scalar);
  setenv("WORLDGEN_KERNELS", "bogus", 1);
  CHECK_THROWS_AS(detect_backend(), worldgen::Error);
  unsetenv("WORLDGEN_KERNELS");
}
