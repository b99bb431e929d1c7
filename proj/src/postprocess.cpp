#include "lanedet/postprocess.hpp"

#include <array>
#include <vector>

namespace lanedet {

MaskGrid binarize(const Grid2<float>& pred, float threshold) {
  MaskGrid mask(pred.rows, pred.cols, 0);
  for (size_t k = 0; k < pred.data.size(); ++k) mask.data[k] = pred.data[k] >= threshold ? 1 : 0;
  return mask;
}

namespace {

// Neighbors P2..P9 clockwise from north, as in the classic two-subiteration
// thinning scheme.
constexpr int kDi[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
constexpr int kDj[8] = {0, 1, 1, 1, 0, -1, -1, -1};

struct NeighborState {
  std::array<int, 8> p;
  int count = 0;        // B(P1)
  int transitions = 0;  // A(P1): 0 -> 1 patterns in the circular sequence
};

NeighborState neighbors(const MaskGrid& m, int i, int j) {
  NeighborState s;
  for (int k = 0; k < 8; ++k) {
    const int ni = i + kDi[k], nj = j + kDj[k];
    s.p[k] = m.in_bounds(ni, nj) ? m.at(ni, nj) : 0;
    s.count += s.p[k];
  }
  for (int k = 0; k < 8; ++k)
    if (s.p[k] == 0 && s.p[(k + 1) % 8] == 1) ++s.transitions;
  return s;
}

}  // namespace

Skeleton skeletonize(const MaskGrid& mask) {
  MaskGrid m = mask;
  std::vector<std::pair<int, int>> to_clear;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int phase = 0; phase < 2; ++phase) {
      to_clear.clear();
      for (int i = 0; i < m.rows; ++i) {
        for (int j = 0; j < m.cols; ++j) {
          if (!m.at(i, j)) continue;
          const NeighborState s = neighbors(m, i, j);
          if (s.count < 2 || s.count > 6) continue;
          if (s.transitions != 1) continue;
          // P2=p[0] N, P4=p[2] E, P6=p[4] S, P8=p[6] W.
          if (phase == 0) {
            if (s.p[0] * s.p[2] * s.p[4] != 0) continue;
            if (s.p[2] * s.p[4] * s.p[6] != 0) continue;
          } else {
            if (s.p[0] * s.p[2] * s.p[6] != 0) continue;
            if (s.p[0] * s.p[4] * s.p[6] != 0) continue;
          }
          to_clear.emplace_back(i, j);
        }
      }
      for (const auto& [i, j] : to_clear) m.at(i, j) = 0;
      changed = changed || !to_clear.empty();
    }
  }
  Skeleton skel;
  skel.component_count = count_components(m);
  skel.mask = std::move(m);
  return skel;
}

int connected_components(const MaskGrid& mask, Grid2<int>& labels) {
  labels = Grid2<int>(mask.rows, mask.cols, 0);
  int next = 0;
  std::vector<std::pair<int, int>> stack;
  for (int i = 0; i < mask.rows; ++i) {
    for (int j = 0; j < mask.cols; ++j) {
      if (!mask.at(i, j) || labels.at(i, j)) continue;
      ++next;
      stack.push_back({i, j});
      labels.at(i, j) = next;
      while (!stack.empty()) {
        const auto [ci, cj] = stack.back();
        stack.pop_back();
        for (int k = 0; k < 8; ++k) {
          const int ni = ci + kDi[k], nj = cj + kDj[k];
          if (mask.in_bounds(ni, nj) && mask.at(ni, nj) && !labels.at(ni, nj)) {
            labels.at(ni, nj) = next;
            stack.push_back({ni, nj});
          }
        }
      }
    }
  }
  return next;
}

int count_components(const MaskGrid& mask) {
  Grid2<int> labels;
  return connected_components(mask, labels);
}

}  // namespace lanedet
