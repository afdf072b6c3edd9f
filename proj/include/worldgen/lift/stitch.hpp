#pragma once

#include <optional>
#include <vector>

#include "worldgen/lift/pointcloud.hpp"

namespace worldgen {

struct StitchView {
  ImageF32 rgb;    // H x W x 3
  DepthMap d_rel;  // relative depth for this view
  CameraPose pose;
  Intrinsics intr;
};

struct StitchOptions {
  double conf_threshold = 0.3;
  double min_overlap = 0.2;  // required matched fraction of a view's confident pixels
  bool solve_shift = false;  // fit an additive offset per view as well
  int bin_width = 2048;      // angular dedup grid, equirect layout W x W/2
  AlignOptions align;        // first-view metric anchoring
  // Skips quantile anchoring and uses this scale for the first view (for
  // callers that aligned it already, and for constant-depth fixtures whose
  // inter-quantile range is degenerate).
  std::optional<double> anchor_scale;
};

struct StitchResult {
  PointCloud cloud;
  std::vector<double> view_scales;  // multiplicative scale applied per view
  std::vector<double> view_shifts;  // additive offset per view (zero unless solved)
};

// Chain-align relative depths from a shared camera center: the first view is
// anchored to d_metric_anchor by quantile scaling, every later view is scaled
// by least squares onto the already-aligned content it overlaps (pixels
// matched through their angular bin). The merged cloud keeps the highest-
// confidence point per bin; earlier views win ties.
StitchResult stitch_depth_views(const std::vector<StitchView>& views,
                                const DepthMap& d_metric_anchor, const StitchOptions& opt = {});

}  // namespace worldgen
