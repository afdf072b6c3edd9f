#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <filesystem>

#include "worldgen/core/io_png.hpp"
#include "worldgen/core/rng.hpp"
#include "worldgen/distortion/field.hpp"

using namespace worldgen;
namespace fs = std::filesystem;

namespace {

constexpr double kTau = 6.283185307179586;

// globally bilinear image: bilinear resampling of it is kink-free, which keeps
// central finite differences clean
ImageF32 bilinear_image(int w, int h, int ch) {
  ImageF32 img(w, h, ch);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c)
        img.at(x, y, c) =
            float(40.0 + 3.1 * (c + 1) * x + 2.3 * (3 - c) * y + 0.021 * (c + 1) * x * y);
  return img;
}

ImageF32 sine_texture(int w, int h, int ch, uint64_t seed) {
  Rng rng(seed);
  ImageF32 img(w, h, ch, 128.0f);
  for (int c = 0; c < ch; ++c)
    for (int k = 0; k < 6; ++k) {
      double fx = rng.uniform(0.5, 4.0), fy = rng.uniform(0.5, 4.0);
      double px = rng.uniform(0.0, kTau), py = rng.uniform(0.0, kTau);
      double amp = rng.uniform(8.0, 22.0);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          img.at(x, y, c) += float(amp * std::sin(kTau * fx * x / w + px) *
                                   std::cos(kTau * fy * y / h + py));
    }
  return img;
}

// reference warp with per-pixel (dense) offsets, same sampling rules
ImageF32 dense_warp(const ImageF32& img, const std::function<void(double, double, double&, double&)>& off) {
  const int w = img.width(), h = img.height();
  ImageF32 out(w, h, img.channels());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double u = 2.0 * (x + 0.5) / w - 1.0;
      double v = 2.0 * (y + 0.5) / h - 1.0;
      double du, dv;
      off(u, v, du, dv);
      double sx = double(x) + du * (w / 2.0);
      double sy = double(y) + dv * (h / 2.0);
      for (int c = 0; c < img.channels(); ++c) out.at(x, y, c) = float(bilinear_px(img, sx, sy, c));
    }
  return out;
}

}  // namespace

TEST_CASE("harmonic embedding layout and bounds") {
  auto e = harmonic_embed(0.0, 0.0, 8);
  REQUIRE(e.size() == 32);
  for (int k = 0; k < 8; ++k) {
    CHECK(e[4 * k] == 0.0);
    CHECK(e[4 * k + 1] == 1.0);
    CHECK(e[4 * k + 2] == 0.0);
    CHECK(e[4 * k + 3] == 1.0);
  }
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    auto r = harmonic_embed(rng.uniform(-1, 1), rng.uniform(-1, 1), 8);
    for (double x : r) CHECK(std::abs(x) <= 1.0);
  }
  // frequency doubling: k-th block sees 2^k pi u
  auto q = harmonic_embed(0.25, 0.0, 3);
  CHECK(q[0] == doctest::Approx(std::sin(0.25 * 3.14159265358979323846)).epsilon(1e-12));
  CHECK(q[4] == doctest::Approx(1.0).epsilon(1e-12));   // sin(pi/2)
  CHECK(q[9] == doctest::Approx(-1.0).epsilon(1e-12));  // cos(pi)
}

TEST_CASE("zero-initialized field produces exactly zero offsets") {
  DistortionField field({}, 42);  // defaults: 128 grid, zero final layer
  field.register_image("img");
  OffsetGrid g = offset_grid(field, "img");
  REQUIRE(g.res == 128);
  for (double v : g.data) CHECK(v == 0.0);
}

TEST_CASE("offset grids depend on codes and respect the tanh bound") {
  DistortionConfig cfg;
  cfg.grid_res = 16;
  cfg.hidden = 64;
  cfg.zero_init_last = false;
  DistortionField field(cfg, 5);
  field.register_image("a");
  field.register_image("b");

  CHECK(offset_grid(field, "a").data == offset_grid(field, "b").data);  // equal codes

  auto& code = field.code("a");
  for (auto& c : code) c = 37.0;  // drive the tanh hard
  OffsetGrid wild = offset_grid(field, "a");
  double delta = 0.0;
  OffsetGrid base = offset_grid(field, "b");
  for (size_t i = 0; i < wild.data.size(); ++i) {
    CHECK(std::abs(wild.data[i]) <= cfg.offset_scale);
    delta = std::max(delta, std::abs(wild.data[i] - base.data[i]));
  }
  CHECK(delta > 0.0);

  field.code("b")[3] += 0.5;  // single-coordinate sensitivity
  OffsetGrid nudged = offset_grid(field, "b");
  double moved = 0.0;
  for (size_t i = 0; i < nudged.data.size(); ++i)
    moved = std::max(moved, std::abs(nudged.data[i] - base.data[i]));
  CHECK(moved > 0.0);

  CHECK_THROWS_AS((void)offset_grid(field, "nope"), Error);
}

TEST_CASE("zero offsets resample the image bit-exactly") {
  ImageF32 img = sine_texture(97, 61, 3, 11);
  OffsetGrid zero(9);
  CHECK(apply_distortion(img, zero) == img);
}

TEST_CASE("constant offsets shift the image") {
  ImageF32 img = sine_texture(256, 64, 1, 13);
  OffsetGrid g(4);
  for (int gy = 0; gy < 4; ++gy)
    for (int gx = 0; gx < 4; ++gx) g.du(gx, gy) = 6.0 / 256.0;  // exactly 3 px

  ImageF32 shifted = apply_distortion(img, g);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 253; ++x) CHECK(shifted.at(x, y) == img.at(x + 3, y));

  for (int gy = 0; gy < 4; ++gy)
    for (int gx = 0; gx < 4; ++gx) g.du(gx, gy) = 5.0 / 256.0;  // 2.5 px
  ImageF32 half = apply_distortion(img, g);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 250; ++x) {
      double want = 0.5 * (double(img.at(x + 2, y)) + double(img.at(x + 3, y)));
      CHECK(std::abs(double(half.at(x, y)) - want) < 1e-4);
    }
}

TEST_CASE("grid-sampled sinusoidal warp tracks the dense reference") {
  // smooth warp: du = A sin(pi q u) cos(pi q v / 2), dv = A cos(pi q u) sin(pi q v / 2)
  const double A = 0.02, q = 2.0;
  auto warp = [&](double u, double v, double& du, double& dv) {
    du = A * std::sin(3.14159265358979323846 * q * u) *
         std::cos(3.14159265358979323846 * q * v / 2.0);
    dv = A * std::cos(3.14159265358979323846 * q * u) *
         std::sin(3.14159265358979323846 * q * v / 2.0);
  };

  const int res = 128, W = 1024, H = 1024;
  OffsetGrid g(res);
  for (int gy = 0; gy < res; ++gy)
    for (int gx = 0; gx < res; ++gx) {
      double u = -1.0 + 2.0 * gx / (res - 1);
      double v = -1.0 + 2.0 * gy / (res - 1);
      warp(u, v, g.du(gx, gy), g.dv(gx, gy));
    }

  // offsets: bilinear-upsampled grid vs dense evaluation, everywhere under the
  // grid-Nyquist interpolation bound A*(pi*q*h)^2/8 (h = grid spacing), and in
  // particular under 1e-3 for this gentle warp
  double h_grid = 2.0 / (res - 1);
  double bound = 1.25 * A * std::pow(3.14159265358979323846 * q * h_grid, 2) / 8.0;
  double worst = 0.0;
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; x += 3) {
      double du_up, dv_up, du_ref, dv_ref;
      upsample_offset(g, W, H, x, y, du_up, dv_up);
      warp(2.0 * (x + 0.5) / W - 1.0, 2.0 * (y + 0.5) / H - 1.0, du_ref, dv_ref);
      worst = std::max({worst, std::abs(du_up - du_ref), std::abs(dv_up - dv_ref)});
    }
  CHECK(worst < bound);
  CHECK(worst < 1e-3);

  // image space: a checkerboard warped via the grid vs via dense offsets; the
  // sample positions differ by at most `worst`*W/2 px, so differences are
  // confined to tile borders (bilinear Lipschitz 255/px there)
  ImageF32 board(W, H, 1);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) board.at(x, y) = ((x / 64) + (y / 64)) % 2 ? 255.0f : 0.0f;
  ImageF32 via_grid = apply_distortion(board, g);
  ImageF32 via_dense = dense_warp(board, warp);
  double mean = 0.0, peak = 0.0;
  for (size_t i = 0; i < via_grid.count(); ++i) {
    double d = std::abs(double(via_grid.data()[i]) - double(via_dense.data()[i]));
    mean += d;
    peak = std::max(peak, d);
  }
  mean /= double(via_grid.count());
  CHECK(mean < 0.5);
  // sample positions differ by <= worst*W/2 px in x and worst*H/2 in y
  CHECK(peak <= 255.0 * worst * (W / 2.0 + H / 2.0) + 1e-6);
}

TEST_CASE("identity fit point has exactly zero gradients") {
  DistortionConfig cfg;
  cfg.grid_res = 8;
  DistortionField field(cfg, 7);  // zero final layer -> identity warp
  field.register_image("img");
  ImageF32 img = sine_texture(32, 32, 3, 17);

  GradientResult g = gradients(field, img, img, "img");
  CHECK(g.loss == 0.0);
  for (double v : g.d_params) CHECK(v == 0.0);
  for (double v : g.d_code) CHECK(v == 0.0);
  for (size_t i = 0; i < g.d_image.count(); ++i) CHECK(g.d_image.data()[i] == 0.0);
}

TEST_CASE("analytic gradients match central finite differences") {
  DistortionConfig cfg;
  cfg.grid_res = 8;
  cfg.hidden = 64;
  cfg.offset_scale = 0.03;
  cfg.zero_init_last = false;
  DistortionField field(cfg, 19);
  field.register_image("img");
  auto& code = field.code("img");
  Rng crng(23);
  for (auto& c : code) c = crng.uniform(-0.5, 0.5);

  const int W = 48;
  ImageF32 img = bilinear_image(W, W, 3);
  // target: the same image under a different field's warp, so residuals and
  // every gradient path are non-trivial
  DistortionField other(cfg, 77);
  other.register_image("img");
  ImageF32 target = apply_distortion(img, offset_grid(other, "img"));

  GradientResult g = gradients(field, img, target, "img", 0.1);
  REQUIRE(g.loss > 0.0);

  const double h = 1e-4;
  auto loss_at = [&]() { return gradients(field, img, target, "img", 0.1).loss; };
  auto rel = [](double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
  };

  Rng rng(29);
  int checked = 0;
  while (checked < 50) {
    size_t i = rng.next() % field.param_count();
    double keep = field.params()[i];
    field.params()[i] = keep + h;
    double lp = loss_at();
    field.params()[i] = keep - h;
    double lm = loss_at();
    field.params()[i] = keep;
    double fd = (lp - lm) / (2.0 * h);
    CHECK(rel(g.d_params[i], fd) < 1e-4);
    ++checked;
  }
  for (int i = 0; i < cfg.code_dim; i += 7) {
    double keep = code[i];
    code[i] = keep + h;
    double lp = loss_at();
    code[i] = keep - h;
    double lm = loss_at();
    code[i] = keep;
    double fd = (lp - lm) / (2.0 * h);
    CHECK(rel(g.d_code[i], fd) < 1e-4);
  }
  // interior image pixels participate through bilinear sampling of I; the
  // divisor uses the float values actually stored, not the nominal step
  for (auto [px, py] : {std::pair{17, 21}, {30, 9}, {24, 24}}) {
    float keep = img.at(px, py, 1);
    float kp = keep + 0.01f, km = keep - 0.01f;
    img.at(px, py, 1) = kp;
    double lp = loss_at();
    img.at(px, py, 1) = km;
    double lm = loss_at();
    img.at(px, py, 1) = keep;
    double fd = (lp - lm) / (double(kp) - double(km));
    CHECK(rel(g.d_image.at(px, py, 1), fd) < 1e-4);
  }
}

TEST_CASE("fitting a synthetic smooth warp recovers most of the photometric error") {
  const int W = 256;
  ImageF32 img = sine_texture(W, W, 1, 31);
  // ground-truth warp, max amplitude 4 px = 4/(W/2) normalized
  const double amp = 4.0 / (W / 2.0);
  auto warp = [&](double u, double v, double& du, double& dv) {
    du = amp * std::sin(1.5 * u + 0.4) * std::cos(1.1 * v);
    dv = amp * std::cos(1.2 * u) * std::sin(1.7 * v - 0.2);
  };
  ImageF32 target = dense_warp(img, warp);

  DistortionConfig cfg;
  cfg.grid_res = 32;
  cfg.offset_scale = 0.05;
  DistortionField field(cfg, 1);
  field.register_image("img");

  double initial = gradients(field, img, target, "img").loss;
  FitOptions opt;
  opt.steps = 2000;
  opt.lr = 2e-3;
  opt.stop_loss = 0.05 * initial;
  auto t0 = std::chrono::steady_clock::now();
  FitResult res = fit(field, {{img, target, "img"}}, opt);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  INFO("fit steps ", res.steps_run, " in ", secs, " s");

  REQUIRE(!res.losses.empty());
  CHECK(res.losses.front() == initial);
  CHECK(res.losses.back() <= 0.1 * initial);  // >= 90% reduction
  CHECK(res.steps_run <= 2000);
  CHECK(secs < 120.0);
}

TEST_CASE("fit with matching target keeps the identity and unused codes frozen") {
  DistortionConfig cfg;
  cfg.grid_res = 8;
  cfg.hidden = 32;
  DistortionField field(cfg, 3);
  field.register_image("img");
  field.register_image("unused");
  ImageF32 img = sine_texture(24, 24, 1, 37);

  FitOptions opt;
  opt.steps = 20;
  opt.offset_l2 = 0.1;
  FitResult res = fit(field, {{img, img, "img"}}, opt);
  for (double l : res.losses) CHECK(l == 0.0);
  OffsetGrid g = offset_grid(field, "img");
  for (double v : g.data) CHECK(v == 0.0);
  for (double c : field.code("unused")) CHECK(c == 0.0);
}

TEST_CASE("the offset penalty shrinks a random field toward the identity") {
  DistortionConfig cfg;
  cfg.grid_res = 8;
  cfg.hidden = 32;
  cfg.zero_init_last = false;
  DistortionField field(cfg, 13);
  field.register_image("img");
  ImageF32 img = sine_texture(24, 24, 1, 41);

  auto peak_offset = [&]() {
    OffsetGrid g = offset_grid(field, "img");
    double m = 0.0;
    for (double v : g.data) m = std::max(m, std::abs(v));
    return m;
  };
  double before = peak_offset();
  REQUIRE(before > 1e-4);
  FitOptions opt;
  opt.steps = 300;
  opt.offset_l2 = 10.0;
  fit(field, {{img, img, "img"}}, opt);
  CHECK(peak_offset() < 0.25 * before);
}

TEST_CASE("two images with different warps recover distinct codes") {
  const int W = 96;
  ImageF32 img_a = sine_texture(W, W, 1, 43);
  ImageF32 img_b = sine_texture(W, W, 1, 47);
  const double amp = 3.0 / (W / 2.0);
  auto warp_a = [&](double u, double v, double& du, double& dv) {
    du = amp * std::sin(1.3 * u) * std::cos(0.9 * v);
    dv = amp * std::cos(1.1 * u + 0.3) * std::sin(1.4 * v);
  };
  auto warp_b = [&](double u, double v, double& du, double& dv) {
    du = -amp * std::cos(1.6 * v) * std::sin(0.8 * u + 1.0);
    dv = -amp * std::sin(1.2 * u) * std::cos(1.5 * v - 0.5);
  };
  ImageF32 tgt_a = dense_warp(img_a, warp_a);
  ImageF32 tgt_b = dense_warp(img_b, warp_b);

  DistortionConfig cfg;
  cfg.grid_res = 16;
  cfg.hidden = 64;
  cfg.offset_scale = 0.05;
  DistortionField field(cfg, 9);
  field.register_image("a");
  field.register_image("b");

  double init_a = gradients(field, img_a, tgt_a, "a").loss;
  double init_b = gradients(field, img_b, tgt_b, "b").loss;
  FitOptions opt;
  opt.steps = 1200;
  opt.lr = 3e-3;
  opt.stop_loss = 0.05 * (init_a + init_b) / 2.0;
  fit(field, {{img_a, tgt_a, "a"}, {img_b, tgt_b, "b"}}, opt);

  CHECK(gradients(field, img_a, tgt_a, "a").loss <= 0.2 * init_a);
  CHECK(gradients(field, img_b, tgt_b, "b").loss <= 0.2 * init_b);
  double code_dist = 0.0;
  for (int i = 0; i < cfg.code_dim; ++i)
    code_dist += std::pow(field.code("a")[i] - field.code("b")[i], 2);
  CHECK(std::sqrt(code_dist) > 1e-3);
}

TEST_CASE("divergent fits abort with diagnostics") {
  // tanh bounds the offsets, so the loss can only exceed the divergence
  // threshold when the initial loss is small compared to the texture contrast
  DistortionConfig cfg;
  cfg.grid_res = 4;
  cfg.hidden = 16;
  cfg.offset_scale = 0.2;
  DistortionField field(cfg, 21);
  field.register_image("img");
  ImageF32 img = sine_texture(16, 16, 1, 53);
  ImageF32 target = img;
  for (size_t i = 0; i < target.count(); ++i) target.data()[i] += 0.12f;

  FitOptions opt;
  opt.steps = 300;
  opt.lr = 0.5;  // absurd rate overshoots far past the nearby optimum
  opt.divergence_factor = 10.0;
  CHECK_THROWS_AS(fit(field, {{img, target, "img"}}, opt), Error);
}

TEST_CASE("checkpoints round trip through float32 tensors") {
  DistortionConfig cfg;
  cfg.grid_res = 8;
  cfg.hidden = 48;
  cfg.n_freq = 6;
  cfg.code_dim = 16;
  cfg.offset_scale = 0.04;
  cfg.zero_init_last = false;
  DistortionField field(cfg, 57);
  field.register_image("view_0");
  field.register_image("view_1");
  Rng rng(61);
  for (auto& c : field.code("view_1")) c = rng.uniform(-1, 1);

  auto path = (fs::temp_directory_path() / "wg_distortion.ckpt").string();
  save_distortion(field, path);
  DistortionField back = load_distortion(path);

  CHECK(back.config().grid_res == cfg.grid_res);
  CHECK(back.config().n_freq == cfg.n_freq);
  CHECK(back.config().code_dim == cfg.code_dim);
  CHECK(back.config().hidden == cfg.hidden);
  CHECK(back.config().offset_scale == cfg.offset_scale);
  REQUIRE(back.param_count() == field.param_count());
  for (size_t i = 0; i < field.param_count(); ++i)
    CHECK(back.params()[i] == double(float(field.params()[i])));
  REQUIRE(back.has_image("view_0"));
  REQUIRE(back.has_image("view_1"));
  for (int i = 0; i < cfg.code_dim; ++i)
    CHECK(back.code("view_1")[i] == double(float(field.code("view_1")[i])));

  // saving twice is byte-identical
  auto path2 = (fs::temp_directory_path() / "wg_distortion2.ckpt").string();
  save_distortion(field, path2);
  CHECK(read_file(path) == read_file(path2));

  std::vector<uint8_t> junk = {'N', 'O', 'P', 'E', 0, 0, 0, 0};
  write_file(path2, junk.data(), junk.size());
  CHECK_THROWS_AS((void)load_distortion(path2), Error);
  fs::remove(path);
  fs::remove(path2);
}
