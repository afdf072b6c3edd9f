#include "worldgen/pipeline/metrics.hpp"

#include <cmath>
#include <vector>

#include "worldgen/core/error.hpp"
#include "worldgen/kernels/kernels.hpp"

namespace worldgen {

double psnr(const ImageF32& a, const ImageF32& b, const Mask* mask) {
  require(a.same_shape(b), ErrorKind::Domain, "psnr: image shapes differ");
  require(!a.empty(), ErrorKind::Domain, "psnr: empty images");
  if (mask != nullptr) {
    require(mask->width() == a.width() && mask->height() == a.height() &&
                mask->channels() == 1,
            ErrorKind::Domain, "psnr: mask shape mismatch");
  }

  const auto& k = kernels::active();
  double sum = 0.0;
  size_t count = 0;
  if (mask == nullptr) {
    sum = k.sum_sq_diff(a.data(), b.data(), nullptr, a.count());
    count = a.count();
  } else {
    // The kernel mask is per element; expand the single-channel pixel mask
    // across color channels.
    std::vector<uint8_t> elem(a.count(), 0);
    const size_t c = static_cast<size_t>(a.channels());
    for (size_t p = 0; p < mask->count(); ++p) {
      if (mask->data()[p] == kMaskOn) {
        for (size_t j = 0; j < c; ++j) elem[p * c + j] = kMaskOn;
        count += c;
      }
    }
    require(count > 0, ErrorKind::Domain, "psnr: mask selects no pixels");
    sum = k.sum_sq_diff(a.data(), b.data(), elem.data(), a.count());
  }

  const double mse = sum / static_cast<double>(count);
  if (mse == 0.0) return kPsnrIdentical;
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double coverage(const Mask& fill) {
  require(!fill.empty(), ErrorKind::Domain, "coverage: empty mask");
  size_t on = 0;
  const uint8_t* d = fill.data();
  for (size_t i = 0; i < fill.count(); ++i) {
    if (d[i] == kMaskOn) ++on;
  }
  return static_cast<double>(on) / static_cast<double>(fill.count());
}

}  // namespace worldgen
