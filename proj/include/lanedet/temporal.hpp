#pragma once

#include "lanedet/geometry.hpp"
#include "lanedet/grid.hpp"

namespace lanedet {

/// Running per-cell mean of model outputs across frames, carried along with
/// per-cell visibility counts. Stored in double so long streams stay exact
/// to well below 1e-6.
struct Accumulator {
  Grid2<double> values;
  Grid2<double> counts;

  static Accumulator zero(const GridSpec& spec) {
    return {Grid2<double>(spec.rows, spec.cols, 0.0), Grid2<double>(spec.rows, spec.cols, 0.0)};
  }
};

/// Transports the accumulator from the previous frame into the current one:
/// each current cell center is lifted to its ground height, mapped through
/// `motion` (the current-to-previous transform E_t), orthographically
/// projected (z dropped) and bilinearly sampled from the previous grids with
/// zero padding. Counts travel the same way, so motion boundaries get
/// fractional effective counts.
Accumulator warp_accumulator(const Accumulator& acc, const Pose& motion, const GridSpec& spec,
                             const Grid2<float>* ground = nullptr);

/// Folds one observation into the warped accumulator:
/// visible cells: value <- (n * value + y) / (n + 1), count <- min(n + 1, n_max);
/// invisible cells pass through unchanged.
Accumulator aggregate_observation(const Accumulator& warped, const Grid2<float>& observation,
                                  const MaskGrid& visible, double n_max = 100.0);

}  // namespace lanedet
