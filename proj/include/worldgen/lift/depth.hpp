#pragma once

#include <vector>

#include "worldgen/core/error.hpp"
#include "worldgen/core/image.hpp"

namespace worldgen {

enum class ScaleClass { Relative, Metric };

// Single-view depth with per-pixel confidence. Values are ranges along the
// pixel ray: meters when metric, estimator units when relative.
struct DepthMap {
  ImageF32 values;      // H x W x 1, > 0 where confident, NaN allowed elsewhere
  ImageF32 confidence;  // H x W x 1 in [0, 1]
  ScaleClass scale_class = ScaleClass::Relative;

  void validate() const;
};

// p-th quantile of an ascending-sorted sample, linearly interpolated between
// the order statistics at rank p * (n - 1).
double quantile_sorted(const std::vector<double>& sorted, double p);

struct AlignOptions {
  double q_low = 0.2, q_high = 0.8;
  double conf_threshold = 0.3;  // pixels at or below this in either map are ignored
  int min_valid = 100;
};

// Scale that carries the relative map onto the metric one:
//   s = (Q(q_high, metric) - Q(q_low, metric)) / (Q(q_high, rel) - Q(q_low, rel))
// with quantiles taken over pixels confident in both maps.
double align_scale_quantile(const DepthMap& d_rel, const DepthMap& d_metric,
                            const AlignOptions& opt = {});

// values * s, confidence kept, class flipped to Metric.
DepthMap apply_scale(const DepthMap& d, double s);

}  // namespace worldgen
