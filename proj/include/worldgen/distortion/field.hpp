#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "worldgen/core/image.hpp"

namespace worldgen {

// Learned per-image resampling offsets: a small MLP maps a harmonic position
// encoding concatenated with a per-image code to a bounded 2D offset. The
// offsets are evaluated on a coarse grid, bilinearly upsampled to the image
// resolution, and used to resample the image:
//
//   out(p) = bilinear(image; p + upsample(offsets)(p))
//
// with p in normalized coordinates ([-1,1]^2, pixel centers at half-integer
// pixel indices). Offsets are bounded by offset_scale through tanh.

struct DistortionConfig {
  int grid_res = 128;   // offset grid resolution (square), >= 2
  int n_freq = 8;       // harmonic frequencies; embedding has 4*n_freq values
  int code_dim = 32;    // per-image code channels
  int hidden = 128;     // MLP hidden width
  double offset_scale = 0.02;  // max |offset| in normalized units
  // Start at the identity distortion (final layer zeroed). Disable to get a
  // non-degenerate random field, e.g. for sensitivity tests.
  bool zero_init_last = true;

  void validate() const;
};

// [sin(2^k pi u), cos(2^k pi u), sin(2^k pi v), cos(2^k pi v)] for k < n_freq.
// `out` receives 4*n_freq values.
void harmonic_embed(double u, double v, int n_freq, double* out);
std::vector<double> harmonic_embed(double u, double v, int n_freq = 8);

class DistortionField {
 public:
  explicit DistortionField(const DistortionConfig& cfg = {}, uint64_t seed = 0);

  const DistortionConfig& config() const { return cfg_; }
  int embed_dim() const { return 4 * cfg_.n_freq; }
  int input_dim() const { return embed_dim() + cfg_.code_dim; }

  // Flat parameter vector, layout [w1|b1|w2|b2|w3|b3]; weight matrices are
  // stored input-major (each input's output-column is contiguous).
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  size_t w1_offset() const { return 0; }
  size_t b1_offset() const;
  size_t w2_offset() const;
  size_t b2_offset() const;
  size_t w3_offset() const;
  size_t b3_offset() const;
  size_t param_count() const;

  void register_image(const std::string& image_id);  // zero code; idempotent
  bool has_image(const std::string& image_id) const;
  std::vector<double>& code(const std::string& image_id);
  const std::vector<double>& code(const std::string& image_id) const;
  std::vector<std::string> image_ids() const;  // sorted

 private:
  DistortionConfig cfg_;
  std::vector<double> params_;
  std::map<std::string, std::vector<double>> codes_;
};

// Offsets in normalized units on a (res x res) grid whose corner points
// coincide with the image corners (u = -1 + 2*gx/(res-1)).
struct OffsetGrid {
  int res = 0;
  std::vector<double> data;  // res*res*2, y-major, (du, dv) interleaved

  OffsetGrid() = default;
  explicit OffsetGrid(int r) : res(r), data(static_cast<size_t>(r) * r * 2, 0.0) {}
  double& du(int gx, int gy) { return data[(static_cast<size_t>(gy) * res + gx) * 2]; }
  double& dv(int gx, int gy) { return data[(static_cast<size_t>(gy) * res + gx) * 2 + 1]; }
  double du(int gx, int gy) const { return data[(static_cast<size_t>(gy) * res + gx) * 2]; }
  double dv(int gx, int gy) const { return data[(static_cast<size_t>(gy) * res + gx) * 2 + 1]; }
};

// Evaluate the MLP at every grid point with the image's code.
OffsetGrid offset_grid(const DistortionField& field, const std::string& image_id);

// Bilinearly upsample the grid to a pixel-center position (x, y are pixel
// indices; the returned (du, dv) are in normalized units).
void upsample_offset(const OffsetGrid& g, int width, int height, int x, int y, double& du,
                     double& dv);

// Border-clamped bilinear lookup in pixel-center index space: sx == 1.0 reads
// the center of pixel column 1 exactly.
double bilinear_px(const ImageF32& img, double sx, double sy, int c);

// Resample with upsampled offsets. Zero offsets reproduce the image
// bit-exactly; sampling beyond the border clamps.
ImageF32 apply_distortion(const ImageF32& image, const OffsetGrid& offsets);

// Mean-squared-error gradients of the distorted image against a target, for
// all MLP parameters, the image's code, and the source image pixels.
struct GradientResult {
  double loss = 0.0;             // photometric MSE + offset penalty
  std::vector<double> d_params;  // same layout as DistortionField::params()
  std::vector<double> d_code;    // code_dim
  ImageF64 d_image;              // dLoss/dImage, same shape as the input
};

GradientResult gradients(const DistortionField& field, const ImageF32& image,
                         const ImageF32& target, const std::string& image_id,
                         double offset_l2 = 0.0);

struct FitPair {
  ImageF32 image;
  ImageF32 target;
  std::string image_id;
};

struct FitOptions {
  int steps = 2000;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double offset_l2 = 0.0;          // optional L2 penalty on grid offsets
  double stop_loss = -1.0;         // stop early once mean loss <= stop_loss
  double divergence_factor = 1e3;  // abort if loss exceeds factor * initial
};

struct FitResult {
  std::vector<double> losses;  // mean loss per executed step
  int steps_run = 0;
};

// Adam on the MLP parameters and every registered code (codes of images that
// appear in no pair receive exactly zero updates).
FitResult fit(DistortionField& field, const std::vector<FitPair>& pairs,
              const FitOptions& opt = {});

// Versioned binary checkpoint: "WGDF", hyperparameters, then named row-major
// float32 tensors (layer1..3 weight/bias and one code.<image_id> per image).
void save_distortion(const DistortionField& field, const std::string& path);
DistortionField load_distortion(const std::string& path);

}  // namespace worldgen
