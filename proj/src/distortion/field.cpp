#include "worldgen/distortion/field.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "worldgen/core/error.hpp"
#include "worldgen/core/rng.hpp"
#include "worldgen/kernels/kernels.hpp"

namespace worldgen {

namespace {

constexpr double kPiLocal = 3.14159265358979323846;

// forward activations for one grid point, kept for the backward pass
struct PointCache {
  std::vector<double> z0;      // input embedding + code
  std::vector<double> a1, z1;  // pre-activation / relu output
  std::vector<double> a2, z2;
  double a3[2] = {0, 0};
  double t3[2] = {0, 0};  // tanh(a3)
};

struct Layout {
  int in1, h;
  size_t w1, b1, w2, b2, w3, b3, total;
};

Layout layout_of(const DistortionField& f) {
  Layout l;
  l.in1 = f.input_dim();
  l.h = f.config().hidden;
  l.w1 = 0;
  l.b1 = l.w1 + static_cast<size_t>(l.in1) * l.h;
  l.w2 = l.b1 + l.h;
  l.b2 = l.w2 + static_cast<size_t>(l.h) * l.h;
  l.w3 = l.b2 + l.h;
  l.b3 = l.w3 + static_cast<size_t>(l.h) * 2;
  l.total = l.b3 + 2;
  return l;
}

double grid_coord(int g, int res) { return -1.0 + 2.0 * double(g) / double(res - 1); }

void mlp_forward(const double* p, const Layout& l, const std::vector<double>& code,
                 const DistortionConfig& cfg, double u, double v, PointCache& pc) {
  const auto& k = kernels::active();
  const int h = l.h;
  pc.z0.resize(l.in1);
  harmonic_embed(u, v, cfg.n_freq, pc.z0.data());
  std::copy(code.begin(), code.end(), pc.z0.begin() + 4 * cfg.n_freq);

  pc.a1.assign(p + l.b1, p + l.b1 + h);
  for (int j = 0; j < l.in1; ++j) k.axpy64(pc.z0[j], p + l.w1 + size_t(j) * h, pc.a1.data(), h);
  pc.z1.resize(h);
  for (int i = 0; i < h; ++i) pc.z1[i] = pc.a1[i] > 0.0 ? pc.a1[i] : 0.0;

  pc.a2.assign(p + l.b2, p + l.b2 + h);
  for (int j = 0; j < h; ++j) k.axpy64(pc.z1[j], p + l.w2 + size_t(j) * h, pc.a2.data(), h);
  pc.z2.resize(h);
  for (int i = 0; i < h; ++i) pc.z2[i] = pc.a2[i] > 0.0 ? pc.a2[i] : 0.0;

  pc.a3[0] = p[l.b3];
  pc.a3[1] = p[l.b3 + 1];
  for (int j = 0; j < h; ++j) {
    pc.a3[0] += pc.z2[j] * p[l.w3 + size_t(j) * 2];
    pc.a3[1] += pc.z2[j] * p[l.w3 + size_t(j) * 2 + 1];
  }
  pc.t3[0] = std::tanh(pc.a3[0]);
  pc.t3[1] = std::tanh(pc.a3[1]);
}

// d(loss)/d(offset pair) -> parameter and code gradients for one grid point
void mlp_backward(const double* p, const Layout& l, const PointCache& pc,
                  const DistortionConfig& cfg, const double d_off[2], double* dp, double* dcode) {
  const auto& k = kernels::active();
  const int h = l.h;
  double da3[2];
  for (int i = 0; i < 2; ++i)
    da3[i] = d_off[i] * cfg.offset_scale * (1.0 - pc.t3[i] * pc.t3[i]);

  dp[l.b3] += da3[0];
  dp[l.b3 + 1] += da3[1];
  std::vector<double> d2(h);
  for (int j = 0; j < h; ++j) {
    dp[l.w3 + size_t(j) * 2] += pc.z2[j] * da3[0];
    dp[l.w3 + size_t(j) * 2 + 1] += pc.z2[j] * da3[1];
    double g = p[l.w3 + size_t(j) * 2] * da3[0] + p[l.w3 + size_t(j) * 2 + 1] * da3[1];
    d2[j] = pc.a2[j] > 0.0 ? g : 0.0;
  }

  k.axpy64(1.0, d2.data(), dp + l.b2, h);
  std::vector<double> d1(h);
  for (int j = 0; j < h; ++j) {
    k.axpy64(pc.z1[j], d2.data(), dp + l.w2 + size_t(j) * h, h);
    double g = k.dot64(p + l.w2 + size_t(j) * h, d2.data(), h);
    d1[j] = pc.a1[j] > 0.0 ? g : 0.0;
  }

  k.axpy64(1.0, d1.data(), dp + l.b1, h);
  for (int j = 0; j < l.in1; ++j) k.axpy64(pc.z0[j], d1.data(), dp + l.w1 + size_t(j) * h, h);
  const int ed = 4 * cfg.n_freq;
  for (int j = 0; j < cfg.code_dim; ++j)
    dcode[j] += k.dot64(p + l.w1 + size_t(ed + j) * h, d1.data(), h);
}

struct Sample {
  int x0, y0, x1, y1;
  double tx, ty;
  bool live_x, live_y;
};

Sample locate(double sx, double sy, int w, int h) {
  Sample s;
  s.live_x = sx >= 0.0 && sx <= double(w - 1);
  s.live_y = sy >= 0.0 && sy <= double(h - 1);
  double cx = std::clamp(sx, 0.0, double(w - 1));
  double cy = std::clamp(sy, 0.0, double(h - 1));
  s.x0 = w > 1 ? std::min(int(std::floor(cx)), w - 2) : 0;
  s.y0 = h > 1 ? std::min(int(std::floor(cy)), h - 2) : 0;
  s.x1 = w > 1 ? s.x0 + 1 : 0;
  s.y1 = h > 1 ? s.y0 + 1 : 0;
  s.tx = cx - double(s.x0);
  s.ty = cy - double(s.y0);
  return s;
}

}  // namespace

void DistortionConfig::validate() const {
  require(grid_res >= 2, ErrorKind::Domain, "distortion grid resolution must be >= 2");
  require(n_freq >= 1 && code_dim >= 1 && hidden >= 1, ErrorKind::Domain,
          "distortion model dimensions must be positive");
  require(offset_scale > 0.0, ErrorKind::Domain, "offset scale must be positive");
}

void harmonic_embed(double u, double v, int n_freq, double* out) {
  for (int k = 0; k < n_freq; ++k) {
    double f = std::ldexp(kPiLocal, k);  // 2^k * pi
    out[4 * k] = std::sin(f * u);
    out[4 * k + 1] = std::cos(f * u);
    out[4 * k + 2] = std::sin(f * v);
    out[4 * k + 3] = std::cos(f * v);
  }
}

std::vector<double> harmonic_embed(double u, double v, int n_freq) {
  std::vector<double> out(static_cast<size_t>(4) * n_freq);
  harmonic_embed(u, v, n_freq, out.data());
  return out;
}

DistortionField::DistortionField(const DistortionConfig& cfg, uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Layout l = layout_of(*this);
  params_.assign(l.total, 0.0);

  auto xavier = [&](size_t off, int fan_in, int fan_out, uint64_t stream) {
    Rng rng(derive_seed(seed, stream));
    double b = std::sqrt(6.0 / double(fan_in + fan_out));
    for (size_t i = 0; i < static_cast<size_t>(fan_in) * fan_out; ++i)
      params_[off + i] = rng.uniform(-b, b);
  };
  xavier(l.w1, l.in1, l.h, 1);
  xavier(l.w2, l.h, l.h, 2);
  if (!cfg_.zero_init_last) xavier(l.w3, l.h, 2, 3);
}

size_t DistortionField::b1_offset() const { return layout_of(*this).b1; }
size_t DistortionField::w2_offset() const { return layout_of(*this).w2; }
size_t DistortionField::b2_offset() const { return layout_of(*this).b2; }
size_t DistortionField::w3_offset() const { return layout_of(*this).w3; }
size_t DistortionField::b3_offset() const { return layout_of(*this).b3; }
size_t DistortionField::param_count() const { return layout_of(*this).total; }

void DistortionField::register_image(const std::string& image_id) {
  codes_.emplace(image_id, std::vector<double>(cfg_.code_dim, 0.0));
}

bool DistortionField::has_image(const std::string& image_id) const {
  return codes_.count(image_id) != 0;
}

std::vector<double>& DistortionField::code(const std::string& image_id) {
  auto it = codes_.find(image_id);
  require(it != codes_.end(), ErrorKind::Domain, "unknown image id: " + image_id);
  return it->second;
}

const std::vector<double>& DistortionField::code(const std::string& image_id) const {
  auto it = codes_.find(image_id);
  require(it != codes_.end(), ErrorKind::Domain, "unknown image id: " + image_id);
  return it->second;
}

std::vector<std::string> DistortionField::image_ids() const {
  std::vector<std::string> ids;
  ids.reserve(codes_.size());
  for (const auto& [id, c] : codes_) ids.push_back(id);
  return ids;
}

OffsetGrid offset_grid(const DistortionField& field, const std::string& image_id) {
  const auto& code = field.code(image_id);
  const Layout l = layout_of(field);
  const int res = field.config().grid_res;
  OffsetGrid g(res);
  PointCache pc;
  for (int gy = 0; gy < res; ++gy)
    for (int gx = 0; gx < res; ++gx) {
      mlp_forward(field.params().data(), l, code, field.config(), grid_coord(gx, res),
                  grid_coord(gy, res), pc);
      g.du(gx, gy) = field.config().offset_scale * pc.t3[0];
      g.dv(gx, gy) = field.config().offset_scale * pc.t3[1];
    }
  return g;
}

void upsample_offset(const OffsetGrid& g, int width, int height, int x, int y, double& du,
                     double& dv) {
  double gx = (double(x) + 0.5) * double(g.res - 1) / double(width);
  double gy = (double(y) + 0.5) * double(g.res - 1) / double(height);
  int g0x = std::min(int(std::floor(gx)), g.res - 2);
  int g0y = std::min(int(std::floor(gy)), g.res - 2);
  double tx = gx - double(g0x);
  double ty = gy - double(g0y);
  du = (g.du(g0x, g0y) * (1.0 - tx) + g.du(g0x + 1, g0y) * tx) * (1.0 - ty) +
       (g.du(g0x, g0y + 1) * (1.0 - tx) + g.du(g0x + 1, g0y + 1) * tx) * ty;
  dv = (g.dv(g0x, g0y) * (1.0 - tx) + g.dv(g0x + 1, g0y) * tx) * (1.0 - ty) +
       (g.dv(g0x, g0y + 1) * (1.0 - tx) + g.dv(g0x + 1, g0y + 1) * tx) * ty;
}

double bilinear_px(const ImageF32& img, double sx, double sy, int c) {
  Sample s = locate(sx, sy, img.width(), img.height());
  double v00 = img.at(s.x0, s.y0, c), v10 = img.at(s.x1, s.y0, c);
  double v01 = img.at(s.x0, s.y1, c), v11 = img.at(s.x1, s.y1, c);
  return (v00 * (1.0 - s.tx) + v10 * s.tx) * (1.0 - s.ty) +
         (v01 * (1.0 - s.tx) + v11 * s.tx) * s.ty;
}

ImageF32 apply_distortion(const ImageF32& image, const OffsetGrid& offsets) {
  require(!image.empty(), ErrorKind::Domain, "apply_distortion: empty image");
  require(offsets.res >= 2, ErrorKind::Domain, "apply_distortion: offset grid too small");
  const int w = image.width(), h = image.height(), ch = image.channels();
  ImageF32 out(w, h, ch);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double du, dv;
      upsample_offset(offsets, w, h, x, y, du, dv);
      double sx = double(x) + du * (double(w) / 2.0);
      double sy = double(y) + dv * (double(h) / 2.0);
      for (int c = 0; c < ch; ++c) out.at(x, y, c) = float(bilinear_px(image, sx, sy, c));
    }
  return out;
}

GradientResult gradients(const DistortionField& field, const ImageF32& image,
                         const ImageF32& target, const std::string& image_id, double offset_l2) {
  require(image.same_shape(target), ErrorKind::Domain, "gradients: image/target shape mismatch");
  require(!image.empty(), ErrorKind::Domain, "gradients: empty image");
  const auto& code = field.code(image_id);
  const Layout l = layout_of(field);
  const DistortionConfig& cfg = field.config();
  const int res = cfg.grid_res;
  const int w = image.width(), h = image.height(), ch = image.channels();

  // forward on the grid, caching activations
  std::vector<PointCache> cache(static_cast<size_t>(res) * res);
  OffsetGrid grid(res);
  for (int gy = 0; gy < res; ++gy)
    for (int gx = 0; gx < res; ++gx) {
      PointCache& pc = cache[static_cast<size_t>(gy) * res + gx];
      mlp_forward(field.params().data(), l, code, cfg, grid_coord(gx, res), grid_coord(gy, res),
                  pc);
      grid.du(gx, gy) = cfg.offset_scale * pc.t3[0];
      grid.dv(gx, gy) = cfg.offset_scale * pc.t3[1];
    }

  GradientResult out;
  out.d_params.assign(l.total, 0.0);
  out.d_code.assign(cfg.code_dim, 0.0);
  out.d_image = ImageF64(w, h, ch, 0.0);
  std::vector<double> d_grid(grid.data.size(), 0.0);  // d loss / d (du, dv)

  // photometric pass in full double precision
  const double n_px = double(w) * double(h) * double(ch);
  double loss = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double gx = (double(x) + 0.5) * double(res - 1) / double(w);
      double gy = (double(y) + 0.5) * double(res - 1) / double(h);
      int g0x = std::min(int(std::floor(gx)), res - 2);
      int g0y = std::min(int(std::floor(gy)), res - 2);
      double utx = gx - double(g0x);
      double uty = gy - double(g0y);
      double wg[4] = {(1.0 - utx) * (1.0 - uty), utx * (1.0 - uty), (1.0 - utx) * uty, utx * uty};
      int gxs[4] = {g0x, g0x + 1, g0x, g0x + 1};
      int gys[4] = {g0y, g0y, g0y + 1, g0y + 1};
      double du = 0.0, dv = 0.0;
      // same reduction order as upsample_offset
      du = (grid.du(g0x, g0y) * (1.0 - utx) + grid.du(g0x + 1, g0y) * utx) * (1.0 - uty) +
           (grid.du(g0x, g0y + 1) * (1.0 - utx) + grid.du(g0x + 1, g0y + 1) * utx) * uty;
      dv = (grid.dv(g0x, g0y) * (1.0 - utx) + grid.dv(g0x + 1, g0y) * utx) * (1.0 - uty) +
           (grid.dv(g0x, g0y + 1) * (1.0 - utx) + grid.dv(g0x + 1, g0y + 1) * utx) * uty;

      double sx = double(x) + du * (double(w) / 2.0);
      double sy = double(y) + dv * (double(h) / 2.0);
      Sample s = locate(sx, sy, w, h);
      double d_sx = 0.0, d_sy = 0.0;
      for (int c = 0; c < ch; ++c) {
        double v00 = image.at(s.x0, s.y0, c), v10 = image.at(s.x1, s.y0, c);
        double v01 = image.at(s.x0, s.y1, c), v11 = image.at(s.x1, s.y1, c);
        double val = (v00 * (1.0 - s.tx) + v10 * s.tx) * (1.0 - s.ty) +
                     (v01 * (1.0 - s.tx) + v11 * s.tx) * s.ty;
        double resid = val - double(target.at(x, y, c));
        loss += resid * resid / n_px;
        double dval = 2.0 * resid / n_px;
        out.d_image.at(s.x0, s.y0, c) += dval * (1.0 - s.tx) * (1.0 - s.ty);
        out.d_image.at(s.x1, s.y0, c) += dval * s.tx * (1.0 - s.ty);
        out.d_image.at(s.x0, s.y1, c) += dval * (1.0 - s.tx) * s.ty;
        out.d_image.at(s.x1, s.y1, c) += dval * s.tx * s.ty;
        if (s.live_x) d_sx += dval * ((v10 - v00) * (1.0 - s.ty) + (v11 - v01) * s.ty);
        if (s.live_y) d_sy += dval * ((v01 - v00) * (1.0 - s.tx) + (v11 - v10) * s.tx);
      }
      double d_du = d_sx * (double(w) / 2.0);
      double d_dv = d_sy * (double(h) / 2.0);
      for (int k4 = 0; k4 < 4; ++k4) {
        size_t gi = (static_cast<size_t>(gys[k4]) * res + gxs[k4]) * 2;
        d_grid[gi] += wg[k4] * d_du;
        d_grid[gi + 1] += wg[k4] * d_dv;
      }
    }

  // optional L2 penalty on the offsets themselves
  if (offset_l2 > 0.0) {
    double n_grid = double(res) * double(res);
    for (int gy = 0; gy < res; ++gy)
      for (int gx = 0; gx < res; ++gx) {
        size_t gi = (static_cast<size_t>(gy) * res + gx) * 2;
        loss += offset_l2 * (grid.du(gx, gy) * grid.du(gx, gy) +
                             grid.dv(gx, gy) * grid.dv(gx, gy)) / n_grid;
        d_grid[gi] += offset_l2 * 2.0 * grid.du(gx, gy) / n_grid;
        d_grid[gi + 1] += offset_l2 * 2.0 * grid.dv(gx, gy) / n_grid;
      }
  }
  out.loss = loss;

  // backprop every grid point through the MLP
  for (int gy = 0; gy < res; ++gy)
    for (int gx = 0; gx < res; ++gx) {
      size_t gi = (static_cast<size_t>(gy) * res + gx) * 2;
      double d_off[2] = {d_grid[gi], d_grid[gi + 1]};
      mlp_backward(field.params().data(), l, cache[static_cast<size_t>(gy) * res + gx], cfg,
                   d_off, out.d_params.data(), out.d_code.data());
    }
  return out;
}

FitResult fit(DistortionField& field, const std::vector<FitPair>& pairs, const FitOptions& opt) {
  require(!pairs.empty(), ErrorKind::Domain, "fit: need at least one image pair");
  require(opt.steps >= 1 && opt.lr > 0.0, ErrorKind::Domain, "fit: bad step count or lr");
  for (const auto& p : pairs)
    require(field.has_image(p.image_id), ErrorKind::Domain,
            "fit: unregistered image id: " + p.image_id);

  const size_t np = field.param_count();
  std::vector<double> m_p(np, 0.0), v_p(np, 0.0);
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> m_codes;
  for (const auto& id : field.image_ids())
    m_codes[id] = {std::vector<double>(field.config().code_dim, 0.0),
                   std::vector<double>(field.config().code_dim, 0.0)};

  auto adam = [&](double g, double& m, double& v, double bc1, double bc2) {
    m = opt.beta1 * m + (1.0 - opt.beta1) * g;
    v = opt.beta2 * v + (1.0 - opt.beta2) * g * g;
    return opt.lr * (m / bc1) / (std::sqrt(v / bc2) + opt.eps);
  };

  FitResult result;
  double initial = 0.0;
  for (int step = 1; step <= opt.steps; ++step) {
    std::vector<double> gp(np, 0.0);
    std::map<std::string, std::vector<double>> gc;
    double loss = 0.0;
    for (const auto& pair : pairs) {
      GradientResult g = gradients(field, pair.image, pair.target, pair.image_id, opt.offset_l2);
      loss += g.loss / double(pairs.size());
      kernels::active().axpy64(1.0 / double(pairs.size()), g.d_params.data(), gp.data(),
                               int(np));
      auto [it, fresh] = gc.emplace(pair.image_id,
                                    std::vector<double>(field.config().code_dim, 0.0));
      kernels::active().axpy64(1.0 / double(pairs.size()), g.d_code.data(), it->second.data(),
                               int(field.config().code_dim));
    }
    result.losses.push_back(loss);
    result.steps_run = step;

    require(std::isfinite(loss), ErrorKind::Stage, "distortion fit diverged: non-finite loss at step " +
                                                       std::to_string(step));
    if (step == 1) initial = loss;
    if (initial > 0.0 && loss > opt.divergence_factor * initial)
      raise(ErrorKind::Stage, "distortion fit diverged: step " + std::to_string(step) + " loss " +
                                  std::to_string(loss) + " vs initial " + std::to_string(initial));

    double bc1 = 1.0 - std::pow(opt.beta1, double(step));
    double bc2 = 1.0 - std::pow(opt.beta2, double(step));
    auto& params = field.params();
    for (size_t i = 0; i < np; ++i) params[i] -= adam(gp[i], m_p[i], v_p[i], bc1, bc2);
    for (auto& [id, grad] : gc) {
      auto& code = field.code(id);
      auto& [mc, vc] = m_codes[id];
      for (int i = 0; i < field.config().code_dim; ++i)
        code[i] -= adam(grad[i], mc[i], vc[i], bc1, bc2);
    }

    if (opt.stop_loss >= 0.0 && loss <= opt.stop_loss) break;
  }
  return result;
}

}  // namespace worldgen
