#include "lanedet/temporal.hpp"

#include <cmath>
#include <stdexcept>

namespace lanedet {

namespace {

// Bilinear sample at continuous cell coordinates; out-of-grid corners
// contribute zero.
double sample_zero_pad(const Grid2<double>& g, double ci, double cj) {
  const int i0 = static_cast<int>(std::floor(ci));
  const int j0 = static_cast<int>(std::floor(cj));
  const double fi = ci - i0;
  const double fj = cj - j0;
  double acc = 0.0;
  const double w[2][2] = {{(1.0 - fi) * (1.0 - fj), (1.0 - fi) * fj},
                          {fi * (1.0 - fj), fi * fj}};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      const int i = i0 + a, j = j0 + b;
      if (w[a][b] != 0.0 && g.in_bounds(i, j)) acc += w[a][b] * g.at(i, j);
    }
  return acc;
}

}  // namespace

Accumulator warp_accumulator(const Accumulator& acc, const Pose& motion, const GridSpec& spec,
                             const Grid2<float>* ground) {
  if (acc.values.rows != spec.rows || acc.values.cols != spec.cols)
    throw std::invalid_argument("warp_accumulator: accumulator does not match the grid");
  if (ground && (ground->rows != spec.rows || ground->cols != spec.cols))
    throw std::invalid_argument("warp_accumulator: ground grid does not match the grid");

  Accumulator out = Accumulator::zero(spec);
  for (int i = 0; i < spec.rows; ++i) {
    for (int j = 0; j < spec.cols; ++j) {
      const auto [x, y] = spec.cell_center(i, j);
      const double z = ground ? static_cast<double>(ground->at(i, j)) : 0.0;
      const Eigen::Vector3d prev = motion.apply({x, y, z});
      const auto [ci, cj] = spec.to_cell_coords(prev.x(), prev.y());
      out.values.at(i, j) = sample_zero_pad(acc.values, ci, cj);
      out.counts.at(i, j) = sample_zero_pad(acc.counts, ci, cj);
    }
  }
  return out;
}

Accumulator aggregate_observation(const Accumulator& warped, const Grid2<float>& observation,
                                  const MaskGrid& visible, double n_max) {
  if (observation.rows != warped.values.rows || observation.cols != warped.values.cols ||
      visible.rows != warped.values.rows || visible.cols != warped.values.cols)
    throw std::invalid_argument("aggregate_observation: shape mismatch");

  Accumulator out = warped;
  for (size_t k = 0; k < out.values.data.size(); ++k) {
    if (!visible.data[k]) continue;
    const double n = out.counts.data[k];
    out.values.data[k] = (n * out.values.data[k] + observation.data[k]) / (n + 1.0);
    out.counts.data[k] = std::min(n + 1.0, n_max);
  }
  return out;
}

}  // namespace lanedet
