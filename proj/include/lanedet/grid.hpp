#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace lanedet {

/// Dense row-major 2D array.
template <class T>
struct Grid2 {
  int rows = 0;
  int cols = 0;
  std::vector<T> data;

  Grid2() = default;
  Grid2(int r, int c, T fill = T{}) : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {}

  T& at(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
  const T& at(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }
  size_t size() const { return data.size(); }
  bool in_bounds(int i, int j) const { return i >= 0 && i < rows && j >= 0 && j < cols; }

  bool operator==(const Grid2&) const = default;
};

/// Dense channel-major (c, h, w) 3D array. Used for images and BEV stacks.
template <class T>
struct Grid3 {
  int channels = 0;
  int rows = 0;
  int cols = 0;
  std::vector<T> data;

  Grid3() = default;
  Grid3(int c, int r, int w, T fill = T{})
      : channels(c), rows(r), cols(w), data(static_cast<size_t>(c) * r * w, fill) {}

  T& at(int c, int i, int j) { return data[(static_cast<size_t>(c) * rows + i) * cols + j]; }
  const T& at(int c, int i, int j) const {
    return data[(static_cast<size_t>(c) * rows + i) * cols + j];
  }
  T* channel(int c) { return data.data() + static_cast<size_t>(c) * rows * cols; }
  const T* channel(int c) const { return data.data() + static_cast<size_t>(c) * rows * cols; }
  size_t size() const { return data.size(); }

  bool operator==(const Grid3&) const = default;
};

/// Camera image: planar float channels in [0, 1], (c, h, w) layout.
using Image = Grid3<float>;

using MaskGrid = Grid2<uint8_t>;

}  // namespace lanedet
