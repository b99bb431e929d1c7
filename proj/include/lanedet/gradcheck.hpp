#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lanedet {

struct GradCheckEntry {
  std::string op;
  double max_rel_err = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Dot-product gradient checks (VJP against central finite differences) for
/// every differentiable op and the backprojection warp, in float32 at 1e-3
/// and float64 at 1e-6 relative tolerance.
std::vector<GradCheckEntry> run_gradcheck(uint64_t seed);

}  // namespace lanedet
