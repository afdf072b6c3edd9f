#include "worldgen/lift/depth.hpp"

#include <algorithm>
#include <cmath>

namespace worldgen {

void DepthMap::validate() const {
  require(values.width() > 0 && values.height() > 0 && values.channels() == 1,
          ErrorKind::Domain, "depth: values must be a nonempty 1-channel map");
  require(confidence.same_shape(values), ErrorKind::Domain,
          "depth: confidence resolution differs from values");
  const float* v = values.data();
  const float* c = confidence.data();
  size_t n = size_t(values.width()) * values.height();
  for (size_t i = 0; i < n; ++i) {
    require(c[i] >= 0.0f && c[i] <= 1.0f, ErrorKind::Domain, "depth: confidence outside [0, 1]");
    if (c[i] > 0.0f)
      require(std::isfinite(v[i]) && v[i] > 0.0f, ErrorKind::Domain,
              "depth: non-positive or non-finite value at a confident pixel");
  }
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
  require(!sorted.empty(), ErrorKind::Domain, "quantile of an empty sample");
  require(p >= 0.0 && p <= 1.0, ErrorKind::Domain, "quantile order outside [0, 1]");
  if (sorted.size() == 1) return sorted[0];
  double rank = p * double(sorted.size() - 1);
  size_t lo = size_t(std::floor(rank));
  size_t hi = std::min(lo + 1, sorted.size() - 1);
  double t = rank - double(lo);
  return sorted[lo] + t * (sorted[hi] - sorted[lo]);
}

double align_scale_quantile(const DepthMap& d_rel, const DepthMap& d_metric,
                            const AlignOptions& opt) {
  require(d_rel.values.same_shape(d_metric.values), ErrorKind::Contract,
          "align: depth maps differ in resolution");
  const float* rv = d_rel.values.data();
  const float* rc = d_rel.confidence.data();
  const float* mv = d_metric.values.data();
  const float* mc = d_metric.confidence.data();
  size_t n = size_t(d_rel.values.width()) * d_rel.values.height();

  std::vector<double> rel, met;
  rel.reserve(n);
  met.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    if (rc[i] > opt.conf_threshold && mc[i] > opt.conf_threshold) {
      rel.push_back(rv[i]);
      met.push_back(mv[i]);
    }
  }
  require(int(rel.size()) >= opt.min_valid, ErrorKind::Contract,
          "align: fewer than " + std::to_string(opt.min_valid) + " jointly confident pixels");

  std::sort(rel.begin(), rel.end());
  std::sort(met.begin(), met.end());
  double rel_range = quantile_sorted(rel, opt.q_high) - quantile_sorted(rel, opt.q_low);
  double met_range = quantile_sorted(met, opt.q_high) - quantile_sorted(met, opt.q_low);
  require(rel_range > 0.0, ErrorKind::Domain,
          "align: degenerate relative depth (zero inter-quantile range)");
  return met_range / rel_range;
}

DepthMap apply_scale(const DepthMap& d, double s) {
  require(std::isfinite(s) && s > 0.0, ErrorKind::Domain, "apply_scale: scale must be positive");
  DepthMap out = d;
  float* v = out.values.data();
  size_t n = size_t(out.values.width()) * out.values.height();
  for (size_t i = 0; i < n; ++i) v[i] = float(double(v[i]) * s);
  out.scale_class = ScaleClass::Metric;
  return out;
}

}  // namespace worldgen
