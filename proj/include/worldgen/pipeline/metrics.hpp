#pragma once

#include "worldgen/core/image.hpp"

namespace worldgen {

// Identical inputs would give +inf dB; reported as this sentinel instead so
// metric tables stay finite and serializable.
constexpr double kPsnrIdentical = 999.0;

// Peak-255 PSNR over the masked pixels (mask: 255 = include, single channel,
// applied to every color channel). Null mask means all pixels.
double psnr(const ImageF32& a, const ImageF32& b, const Mask* mask = nullptr);

// Fraction of mask pixels that are on.
double coverage(const Mask& fill);

}  // namespace worldgen
