#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lanedet/geometry.hpp"
#include "lanedet/grid.hpp"

namespace lanedet {

struct LidarPoint {
  double x = 0.0, y = 0.0, z = 0.0;
  double intensity = 0.0;  // in [0, 1]
};

/// One sweep (or an aggregate of sweeps) in a named frame.
struct PointCloud {
  std::vector<LidarPoint> points;
  std::string frame = "vehicle";
  int timestamp = 0;
};

/// 3-channel overhead raster of a point cloud.
///   channel 0: height of the highest point in the cell (m)
///   channel 1: intensity of that highest point
///   channel 2: height of the lowest point in the cell (m)
/// Empty cells carry `fill` in channels 0/2, zero intensity, mask false.
struct LidarBev {
  GridSpec spec;
  Grid3<float> grid;  // 3 x rows x cols
  MaskGrid mask;      // rows x cols occupancy
  float fill = -10.0f;
};

enum class BevEncoding {
  kMaxMin,       // highest z + its intensity + lowest z (default)
  kMinMeanCount  // lowest z, mean intensity, point count (alternate encoding)
};

/// Transforms every point by invert(pose_ref) * pose_sweep; intensities kept.
PointCloud compensate_ego(const PointCloud& sweep, const Pose& pose_sweep, const Pose& pose_ref);

/// Concatenation of ego-compensated clouds in the last frame's vehicle frame.
/// Throws std::invalid_argument on empty input or length mismatch.
PointCloud aggregate_sweeps(std::span<const PointCloud> sweeps, std::span<const Pose> poses);

/// Out-of-extent points are dropped. Ties on z are broken by the smallest
/// (x, y, intensity) tuple so the result is independent of point order.
LidarBev rasterize(const PointCloud& cloud, const GridSpec& spec, float fill = -10.0f,
                   BevEncoding encoding = BevEncoding::kMaxMin);

/// Rotation about the vehicle z-axis, applied before rasterize so the grid
/// never interpolates.
PointCloud rotate_points(const PointCloud& cloud, double yaw);

// ---------------------------------------------------------------------------
// Photometric augmentation
// ---------------------------------------------------------------------------

/// Concrete adjustments. Brightness is additive; contrast scales around 0.5;
/// saturation scales HSV S; hue rotates HSV H in radians.
struct PhotometricDeltas {
  double brightness = 0.0;
  double contrast = 0.0;
  double saturation = 0.0;
  double hue = 0.0;
};

/// Symmetric draw ranges for the deltas above.
struct PhotometricRanges {
  double brightness = 0.1;
  double contrast = 0.1;
  double saturation = 0.1;
  double hue = 0.1;  // radians
};

PhotometricDeltas draw_photometric_deltas(const PhotometricRanges& ranges, std::mt19937_64& rng);

/// Applies the four adjustments in order (brightness, contrast, saturation,
/// hue); output clamped to [0, 1]. Expects a 3-channel image.
Image apply_photometric(const Image& image, const PhotometricDeltas& deltas);

/// Deterministic given seed: draws deltas from `ranges` and applies them.
Image photometric_augment(const Image& image, const PhotometricRanges& ranges, uint64_t seed);

// ---------------------------------------------------------------------------
// Point-cloud file: little-endian binary, magic "PCL1", u64 point count,
// then N x 4 float32 (x, y, z, intensity).
// ---------------------------------------------------------------------------

void write_point_cloud(const std::filesystem::path& path, const PointCloud& cloud);
PointCloud read_point_cloud(const std::filesystem::path& path);

}  // namespace lanedet
