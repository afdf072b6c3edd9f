#pragma once

#include <vector>

#include "worldgen/core/image.hpp"

namespace worldgen {

// Normalized Gaussian taps truncated at 3*sigma (radius = max(1, ceil(3*sigma))).
std::vector<float> gaussian_taps(double sigma);

// Separable Gaussian with clamped borders; per channel.
ImageF32 gaussian_blur(const ImageF32& img, double sigma);

ImageF32 mask_to_float01(const Mask& m);

// Soft write weights from a boolean mask: blur with sigma = radius_px / 3, so
// the ramp reaches ~0 one radius away from the mask boundary.
ImageF32 feather_mask(const Mask& m, double radius_px);

// out = a + w*(b - a), w per pixel (broadcast over channels).
ImageF32 lerp_images(const ImageF32& a, const ImageF32& b, const ImageF32& w);

}  // namespace worldgen
