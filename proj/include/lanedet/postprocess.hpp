#pragma once

#include "lanedet/grid.hpp"

namespace lanedet {

/// Thinned lane-boundary mask plus its 8-connected component count.
struct Skeleton {
  MaskGrid mask;
  int component_count = 0;
};

/// Cell true iff pred >= threshold.
MaskGrid binarize(const Grid2<float>& pred, float threshold);

/// Iterative two-subiteration morphological thinning to 1-cell-wide curves,
/// preserving 8-connectivity. Idempotent: thinning a skeleton returns it
/// unchanged.
Skeleton skeletonize(const MaskGrid& mask);

/// 8-connected labeling; labels are assigned in row-major first-seen order
/// starting at 1. Returns the component count; `labels` gets 0 on background.
int connected_components(const MaskGrid& mask, Grid2<int>& labels);
int count_components(const MaskGrid& mask);

}  // namespace lanedet
