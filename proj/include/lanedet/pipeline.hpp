#pragma once

#include <cstdint>
#include <optional>

#include "lanedet/dataset.hpp"
#include "lanedet/dt_label.hpp"
#include "lanedet/geometry.hpp"
#include "lanedet/grid.hpp"
#include "lanedet/postprocess.hpp"
#include "lanedet/sweeps.hpp"

namespace lanedet {

struct AugmentConfig {
  double max_yaw_deg = 8.0;
  PhotometricRanges photo;
};

/// Everything one training/eval step needs, in the (possibly yaw-rotated)
/// vehicle frame of the reference sweep.
struct PreparedSample {
  LidarBev bev;
  Image image;
  CameraModel cam;        // extrinsics follow the rotated frame
  Grid2<float> ground_gt; // meters
  DtTarget dt_target;
  MaskGrid gt_lane_mask;  // rasterized boundaries, for metrics
  LaneGraph lanes;
  GridSpec spec;
};

/// Builds the model inputs and targets for one scene. With `aug` set, a yaw
/// rotation is applied to the 3D points before rasterization (never to the
/// raster) and to the lane polylines and camera extrinsics, so all views
/// stay geometrically consistent; the camera image gets the photometric
/// jitter. Deterministic in `aug_seed`.
PreparedSample prepare_sample(const SceneRecord& rec, const GridSpec& grid, double tau,
                              const AugmentConfig* aug = nullptr, uint64_t aug_seed = 0,
                              BevEncoding encoding = BevEncoding::kMaxMin);

/// Derives one deterministic RNG stream from a root seed and a named
/// sub-stream (scene, augment, init, ...) plus indices.
uint64_t substream_seed(uint64_t root, const std::string& name, uint64_t a = 0, uint64_t b = 0);

// -- visualization ----------------------------------------------------------

Image colorize_bev(const LidarBev& bev);
Image colorize_dt(const Grid2<float>& dt, float tau);
Image overlay_mask(const Image& base, const MaskGrid& mask, float r, float g, float b);
Image hstack(const std::vector<Image>& panels, int separator_px = 2);

}  // namespace lanedet
