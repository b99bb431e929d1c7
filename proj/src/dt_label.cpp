#include "lanedet/dt_label.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "lanedet/io.hpp"

namespace lanedet {

void LaneGraph::validate() const {
  if (lane_count < 0) throw std::invalid_argument("LaneGraph: lane_count must be >= 0");
  for (const auto& b : boundaries)
    if (b.size() < 2) throw std::invalid_argument("LaneGraph: each polyline needs >= 2 vertices");
}

namespace {

// Closed-interval Liang-Barsky clip of segment (a, b) against an axis-aligned
// box. True when any part of the segment lies inside.
bool segment_hits_box(const Eigen::Vector2d& a, const Eigen::Vector2d& b, double xmin, double xmax,
                      double ymin, double ymax) {
  double t0 = 0.0, t1 = 1.0;
  const double dx = b.x() - a.x();
  const double dy = b.y() - a.y();
  const double p[4] = {-dx, dx, -dy, dy};
  const double q[4] = {a.x() - xmin, xmax - a.x(), a.y() - ymin, ymax - a.y()};
  for (int k = 0; k < 4; ++k) {
    if (p[k] == 0.0) {
      if (q[k] < 0.0) return false;  // parallel and outside this slab
    } else {
      const double t = q[k] / p[k];
      if (p[k] < 0.0) {
        if (t > t1) return false;
        if (t > t0) t0 = t;
      } else {
        if (t < t0) return false;
        if (t < t1) t1 = t;
      }
    }
  }
  return t0 <= t1;
}

}  // namespace

MaskGrid rasterize_lanes(const LaneGraph& lanes, const GridSpec& spec) {
  spec.validate();
  MaskGrid mask(spec.rows, spec.cols, 0);
  for (const auto& boundary : lanes.boundaries) {
    for (size_t s = 0; s + 1 < boundary.size(); ++s) {
      // Work in continuous cell coordinates; cell (i, j) is the closed
      // square [i - 0.5, i + 0.5] x [j - 0.5, j + 0.5].
      const auto [ax, ay] = spec.to_cell_coords(boundary[s].x(), boundary[s].y());
      const auto [bx, by] = spec.to_cell_coords(boundary[s + 1].x(), boundary[s + 1].y());
      const Eigen::Vector2d a(ax, ay), b(bx, by);
      const int i0 = std::max(0, static_cast<int>(std::floor(std::min(ax, bx) + 0.5)));
      const int i1 = std::min(spec.rows - 1, static_cast<int>(std::floor(std::max(ax, bx) + 0.5)));
      const int j0 = std::max(0, static_cast<int>(std::floor(std::min(ay, by) + 0.5)));
      const int j1 = std::min(spec.cols - 1, static_cast<int>(std::floor(std::max(ay, by) + 0.5)));
      for (int i = i0; i <= i1; ++i)
        for (int j = j0; j <= j1; ++j)
          if (!mask.at(i, j) &&
              segment_hits_box(a, b, i - 0.5, i + 0.5, j - 0.5, j + 0.5))
            mask.at(i, j) = 1;
    }
  }
  return mask;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1D squared distance transform of a sampled function (Felzenszwalb &
// Huttenlocher lower envelope). Cells with f = +inf carry no parabola. All
// envelope arithmetic stays on integers small enough for doubles to keep
// the result exact.
void dt_1d(const double* f, int n, double* out, int* hull, double* bounds) {
  int k = -1;  // top of the hull stack
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    double s = 0.0;
    while (k >= 0) {
      const int p = hull[k];
      s = ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) /
          (2.0 * (q - p));
      if (s <= bounds[k]) {
        --k;
      } else {
        break;
      }
    }
    if (k < 0) {
      k = 0;
      hull[0] = q;
      bounds[0] = -kInf;
    } else {
      ++k;
      hull[k] = q;
      bounds[k] = s;
    }
    bounds[k + 1] = kInf;
  }
  if (k < 0) {
    std::fill(out, out + n, kInf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (bounds[j + 1] < q) ++j;
    const int p = hull[j];
    const double d = static_cast<double>(q) - p;
    out[q] = d * d + f[p];
  }
}

}  // namespace

Grid2<double> euclidean_dt_squared(const MaskGrid& mask) {
  const int rows = mask.rows, cols = mask.cols;
  Grid2<double> sq(rows, cols, kInf);

  // Pass 1: per row, squared distance along the column axis to seeds.
  std::vector<double> f(std::max(rows, cols));
  std::vector<double> out(std::max(rows, cols));
  std::vector<int> hull(std::max(rows, cols));
  std::vector<double> bounds(std::max(rows, cols) + 1);
  for (int i = 0; i < rows; ++i) {
    bool any = false;
    for (int j = 0; j < cols; ++j) {
      f[j] = mask.at(i, j) ? 0.0 : kInf;
      any = any || mask.at(i, j);
    }
    if (!any) continue;
    dt_1d(f.data(), cols, out.data(), hull.data(), bounds.data());
    for (int j = 0; j < cols; ++j) sq.at(i, j) = out[j];
  }

  // Pass 2: per column over the row axis.
  for (int j = 0; j < cols; ++j) {
    bool any = false;
    for (int i = 0; i < rows; ++i) {
      f[i] = sq.at(i, j);
      any = any || f[i] != kInf;
    }
    if (!any) continue;
    dt_1d(f.data(), rows, out.data(), hull.data(), bounds.data());
    for (int i = 0; i < rows; ++i) sq.at(i, j) = out[i];
  }
  return sq;
}

Grid2<float> euclidean_dt(const MaskGrid& mask) {
  const Grid2<double> sq = euclidean_dt_squared(mask);
  Grid2<float> dt(mask.rows, mask.cols);
  for (size_t k = 0; k < sq.data.size(); ++k)
    dt.data[k] = static_cast<float>(std::sqrt(sq.data[k]));
  return dt;
}

DtTarget truncate_invert(const Grid2<float>& dt, float tau) {
  if (!(tau > 0.0f)) throw std::invalid_argument("truncate_invert: tau must be > 0");
  DtTarget target;
  target.tau = tau;
  target.grid = Grid2<float>(dt.rows, dt.cols);
  for (size_t k = 0; k < dt.data.size(); ++k)
    target.grid.data[k] = tau - std::min(dt.data[k], tau);
  return target;
}

LaneGraph read_lanes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io::IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw io::IoError("bad lane file " + path.string() + ": " + e.what());
  }
  LaneGraph lanes;
  lanes.lane_count = j.at("lane_count").get<int>();
  for (const auto& poly : j.at("boundaries")) {
    std::vector<Eigen::Vector3d> b;
    for (const auto& v : poly)
      b.emplace_back(v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>());
    lanes.boundaries.push_back(std::move(b));
  }
  lanes.validate();
  return lanes;
}

void write_lanes(const std::filesystem::path& path, const LaneGraph& lanes) {
  lanes.validate();
  nlohmann::json j;
  j["lane_count"] = lanes.lane_count;
  auto& arr = j["boundaries"] = nlohmann::json::array();
  for (const auto& b : lanes.boundaries) {
    nlohmann::json poly = nlohmann::json::array();
    for (const auto& v : b) poly.push_back({v.x(), v.y(), v.z()});
    arr.push_back(std::move(poly));
  }
  std::ofstream out(path);
  if (!out) throw io::IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw io::IoError("write failed: " + path.string());
}

}  // namespace lanedet
