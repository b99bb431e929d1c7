#pragma once

#include <cmath>
#include <limits>

#include "lanedet/grid.hpp"

namespace lanedet::test_support {

/// O(N^2) all-pairs Euclidean distance transform, the reference for the
/// separable implementation. Kept independent of src/dt_label.cpp.
inline Grid2<float> brute_force_dt(const MaskGrid& mask) {
  Grid2<float> dt(mask.rows, mask.cols, std::numeric_limits<float>::infinity());
  for (int i = 0; i < mask.rows; ++i) {
    for (int j = 0; j < mask.cols; ++j) {
      double best = std::numeric_limits<double>::infinity();
      for (int a = 0; a < mask.rows; ++a)
        for (int b = 0; b < mask.cols; ++b)
          if (mask.at(a, b)) {
            const double d =
                static_cast<double>(i - a) * (i - a) + static_cast<double>(j - b) * (j - b);
            best = std::min(best, d);
          }
      dt.at(i, j) = static_cast<float>(std::sqrt(best));
    }
  }
  return dt;
}

}  // namespace lanedet::test_support
