#include "lanedet/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace lanedet {

uint64_t substream_seed(uint64_t root, const std::string& name, uint64_t a, uint64_t b) {
  uint64_t h = root ^ 0x9e3779b97f4a7c15ULL;
  auto mix = [&h](uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
  };
  for (char c : name) mix(static_cast<uint64_t>(static_cast<unsigned char>(c)));
  mix(a);
  mix(b);
  return h;
}

namespace {

LaneGraph rotate_lanes(const LaneGraph& lanes, double yaw) {
  const double c = std::cos(yaw), s = std::sin(yaw);
  LaneGraph out;
  out.lane_count = lanes.lane_count;
  for (const auto& b : lanes.boundaries) {
    std::vector<Eigen::Vector3d> poly;
    poly.reserve(b.size());
    for (const auto& v : b) poly.emplace_back(c * v.x() - s * v.y(), s * v.x() + c * v.y(), v.z());
    out.boundaries.push_back(std::move(poly));
  }
  return out;
}

// g'(x, y) = g(Rz(-yaw) (x, y)), sampled bilinearly with clamped borders.
Grid2<float> rotate_ground(const Grid2<float>& g, const GridSpec& spec, double yaw) {
  const double c = std::cos(-yaw), s = std::sin(-yaw);
  Grid2<float> out(g.rows, g.cols);
  for (int i = 0; i < g.rows; ++i) {
    for (int j = 0; j < g.cols; ++j) {
      const auto [x, y] = spec.cell_center(i, j);
      const double sx = c * x - s * y;
      const double sy = s * x + c * y;
      auto [ci, cj] = spec.to_cell_coords(sx, sy);
      ci = std::clamp(ci, 0.0, static_cast<double>(g.rows - 1));
      cj = std::clamp(cj, 0.0, static_cast<double>(g.cols - 1));
      const int i0 = std::min(static_cast<int>(ci), g.rows - 1);
      const int j0 = std::min(static_cast<int>(cj), g.cols - 1);
      const int i1 = std::min(i0 + 1, g.rows - 1);
      const int j1 = std::min(j0 + 1, g.cols - 1);
      const double fi = ci - i0, fj = cj - j0;
      out.at(i, j) = static_cast<float>(
          (1.0 - fi) * ((1.0 - fj) * g.at(i0, j0) + fj * g.at(i0, j1)) +
          fi * ((1.0 - fj) * g.at(i1, j0) + fj * g.at(i1, j1)));
    }
  }
  return out;
}

}  // namespace

PreparedSample prepare_sample(const SceneRecord& rec, const GridSpec& grid, double tau,
                              const AugmentConfig* aug, uint64_t aug_seed,
                              BevEncoding encoding) {
  PreparedSample out;
  out.spec = grid;
  out.cam = rec.cam;

  double yaw = 0.0;
  PhotometricDeltas photo;
  if (aug) {
    std::mt19937_64 rng(aug_seed);
    yaw = std::uniform_real_distribution<double>(-1.0, 1.0)(rng) * aug->max_yaw_deg * M_PI / 180.0;
    photo = draw_photometric_deltas(aug->photo, rng);
  }

  PointCloud cloud = aggregate_sweeps(rec.sweeps, rec.poses);
  if (yaw != 0.0) cloud = rotate_points(cloud, yaw);
  out.bev = rasterize(cloud, grid, -10.0f, encoding);

  out.lanes = yaw != 0.0 ? rotate_lanes(rec.lanes, yaw) : rec.lanes;
  out.gt_lane_mask = rasterize_lanes(out.lanes, grid);
  out.dt_target = truncate_invert(euclidean_dt(out.gt_lane_mask), static_cast<float>(tau));

  out.ground_gt = yaw != 0.0 ? rotate_ground(rec.ground, grid, yaw) : rec.ground;

  out.image = aug ? apply_photometric(rec.image, photo) : rec.image;
  if (yaw != 0.0) {
    // Rotating the vehicle frame by yaw composes the extrinsics with the
    // inverse rotation; the image itself is unchanged.
    out.cam.extrinsics = compose(rec.cam.extrinsics, Pose::from_yaw(-yaw));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Visualization
// ---------------------------------------------------------------------------

Image colorize_bev(const LidarBev& bev) {
  Image img(3, bev.spec.rows, bev.spec.cols);
  float zmin = 1e9f, zmax = -1e9f;
  for (int i = 0; i < bev.spec.rows; ++i)
    for (int j = 0; j < bev.spec.cols; ++j)
      if (bev.mask.at(i, j)) {
        zmin = std::min(zmin, bev.grid.at(2, i, j));
        zmax = std::max(zmax, bev.grid.at(0, i, j));
      }
  const float zspan = zmax > zmin ? zmax - zmin : 1.0f;
  for (int i = 0; i < bev.spec.rows; ++i) {
    for (int j = 0; j < bev.spec.cols; ++j) {
      if (!bev.mask.at(i, j)) {
        img.at(0, i, j) = img.at(1, i, j) = img.at(2, i, j) = 0.05f;
        continue;
      }
      const float h = (bev.grid.at(0, i, j) - zmin) / zspan;
      const float inten = bev.grid.at(1, i, j);
      img.at(0, i, j) = 0.2f + 0.8f * h;
      img.at(1, i, j) = 0.2f + 0.8f * inten;
      img.at(2, i, j) = 0.4f;
    }
  }
  return img;
}

Image colorize_dt(const Grid2<float>& dt, float tau) {
  Image img(3, dt.rows, dt.cols);
  for (int i = 0; i < dt.rows; ++i) {
    for (int j = 0; j < dt.cols; ++j) {
      const float v = std::clamp(dt.at(i, j) / tau, 0.0f, 1.0f);
      img.at(0, i, j) = v;
      img.at(1, i, j) = v * 0.9f;
      img.at(2, i, j) = 0.25f + 0.5f * v;
    }
  }
  return img;
}

Image overlay_mask(const Image& base, const MaskGrid& mask, float r, float g, float b) {
  Image img = base;
  for (int i = 0; i < mask.rows && i < img.rows; ++i)
    for (int j = 0; j < mask.cols && j < img.cols; ++j)
      if (mask.at(i, j)) {
        img.at(0, i, j) = r;
        img.at(1, i, j) = g;
        img.at(2, i, j) = b;
      }
  return img;
}

Image hstack(const std::vector<Image>& panels, int separator_px) {
  if (panels.empty()) return {};
  int rows = 0, cols = 0;
  for (const auto& p : panels) {
    rows = std::max(rows, p.rows);
    cols += p.cols;
  }
  cols += separator_px * (static_cast<int>(panels.size()) - 1);
  Image out(3, rows, cols, 1.0f);
  int x0 = 0;
  for (const auto& p : panels) {
    for (int c = 0; c < 3; ++c)
      for (int i = 0; i < p.rows; ++i)
        for (int j = 0; j < p.cols; ++j) out.at(c, i, x0 + j) = p.at(std::min(c, p.channels - 1), i, j);
    x0 += p.cols + separator_px;
  }
  return out;
}

}  // namespace lanedet
