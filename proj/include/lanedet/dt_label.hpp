#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <vector>

#include "lanedet/geometry.hpp"
#include "lanedet/grid.hpp"

namespace lanedet {

/// Ground-truth lane boundaries as 3D polylines in the vehicle frame.
struct LaneGraph {
  std::vector<std::vector<Eigen::Vector3d>> boundaries;  // each >= 2 vertices
  int lane_count = 0;

  void validate() const;
};

/// Inverted truncated distance transform regression target, in cell units.
/// Values lie in [0, tau]; rasterized boundary cells carry exactly tau.
struct DtTarget {
  Grid2<float> grid;
  float tau = 0.0f;
};

/// Marks every cell whose closed square the projected (x, y) polylines
/// intersect (supercover rasterization). z is ignored here.
MaskGrid rasterize_lanes(const LaneGraph& lanes, const GridSpec& spec);

/// Exact Euclidean distance, in cell units, from each cell center to the
/// nearest true cell center. All-false masks yield +infinity everywhere.
Grid2<float> euclidean_dt(const MaskGrid& mask);

/// Squared distances, exact integers stored as doubles. Backbone of
/// euclidean_dt; exposed for metric code that wants to avoid the sqrt.
Grid2<double> euclidean_dt_squared(const MaskGrid& mask);

/// out = tau - min(dt, tau). Throws std::invalid_argument unless tau > 0.
DtTarget truncate_invert(const Grid2<float>& dt, float tau);

// Lane file: JSON with "boundaries" (list of [x, y, z] lists) and "lane_count".
LaneGraph read_lanes(const std::filesystem::path& path);
void write_lanes(const std::filesystem::path& path, const LaneGraph& lanes);

}  // namespace lanedet
