#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "lanedet/dt_label.hpp"
#include "lanedet/geometry.hpp"
#include "lanedet/grid.hpp"
#include "lanedet/sweeps.hpp"

namespace lanedet::synth {

/// Parametric height field: gentle quadratic plus a few smooth waves.
struct GroundSurface {
  double a_xx = 0.0, a_yy = 0.0, a_xy = 0.0;
  double b_x = 0.0, b_y = 0.0, c = 0.0;
  struct Wave {
    double amp = 0.0, kx = 0.0, ky = 0.0, phase = 0.0;
  };
  std::vector<Wave> waves;

  double height(double x, double y) const {
    double z = a_xx * x * x + a_yy * y * y + a_xy * x * y + b_x * x + b_y * y + c;
    for (const auto& w : waves) z += w.amp * std::sin(w.kx * x + w.ky * y + w.phase);
    return z;
  }
};

/// Vertical prism sitting on the ground (parked/moving vehicle stand-in).
struct ClutterBox {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();  // world (x, y)
  double yaw = 0.0;
  double length = 4.5, width = 1.9, height = 1.5;
  double base_z = 0.0;
  Eigen::Vector3d color = {0.5, 0.5, 0.55};
};

/// Uniform spatial hash over 2D segments for fast distance queries.
class SegmentIndex {
 public:
  SegmentIndex() = default;
  void build(std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>> segments,
             double cell_size = 4.0);
  /// Exact distance to the nearest segment, or +inf when nothing lies within
  /// `radius`.
  double distance(const Eigen::Vector2d& p, double radius) const;

 private:
  std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>> segments_;
  std::vector<std::vector<int>> bins_;
  Eigen::Vector2d lo_ = Eigen::Vector2d::Zero();
  double cell_ = 4.0;
  int nx_ = 0, ny_ = 0;
};

struct SceneConfig {
  int lane_count_min = 2;
  int lane_count_max = 6;
  double lane_width = 3.7;
  double curvature_max = 0.003;  // 1/m
  double slope_max = 0.05;       // grade
  double wave_amp_max = 0.04;    // surface undulation, meters
  double clutter_per_lane = 1.2; // expected boxes per lane
  double noise_level = 0.0;      // extra texture/intensity disturbance
  int frames = 5;
  double frame_spacing = 1.5;    // meters between consecutive ego poses
};

/// World-frame scene: surface, lane graph on the surface, ego trajectory,
/// painted texture, and clutter.
struct Scene {
  GroundSurface ground;
  std::vector<std::vector<Eigen::Vector3d>> boundaries;  // world frame, on the surface
  int lane_count = 0;
  std::vector<Pose> trajectory;  // vehicle -> world, one per frame
  std::vector<ClutterBox> clutter;

  double road_halfwidth = 8.0;
  Eigen::Vector3d road_color = {0.23, 0.23, 0.24};
  Eigen::Vector3d offroad_color = {0.30, 0.34, 0.26};
  Eigen::Vector3d paint_color = {0.85, 0.85, 0.78};
  static constexpr double kPaintHalfWidth = 0.075;  // 15 cm wide markings
  struct Mottle {
    double amp = 0.0, kx = 0.0, ky = 0.0, phase = 0.0;
  };
  std::vector<Mottle> mottle;

  SegmentIndex paint_index;
  SegmentIndex road_index;  // centerline, for the road/offroad split
  uint64_t seed = 0;

  /// Ground albedo at a world point.
  Eigen::Vector3d texture_color(double x, double y) const;
  bool on_paint(double x, double y) const;
  bool on_road(double x, double y) const;
};

struct RayHit {
  double t = 0.0;
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  bool is_ground = true;
  int box_id = -1;
};

/// First intersection of a world-frame ray with the ground surface or any
/// clutter box. March-and-bisect against the smooth surface; exact slab test
/// against boxes.
std::optional<RayHit> cast_ray(const Scene& scene, const Eigen::Vector3d& origin,
                               const Eigen::Vector3d& dir, double max_range);

/// Deterministic in seed. Lane boundaries are lane_count + 1 parallel offset
/// curves of a curvature-varying centerline; the ego trajectory follows one
/// lane with the vehicle origin on the surface (yaw-only poses).
Scene make_scene(uint64_t seed, const SceneConfig& config = {});

struct SensorSpec {
  int channels = 48;
  double azimuth_step_deg = 0.4;
  double max_range = 70.0;
  double range_sigma = 0.02;       // meters along the beam
  double intensity_sigma = 0.04;   // grows with range
  double mount_height = 2.0;       // above the vehicle origin
  double elevation_min_deg = -60.0;
  double elevation_max_deg = -2.2;
};

/// Ray-cast sweep from the given ego pose, returned in that pose's vehicle
/// frame. Paint returns bright intensities, asphalt dark, clutter medium.
PointCloud simulate_lidar(const Scene& scene, const Pose& ego, const SensorSpec& sensor,
                          uint64_t seed);

/// Per-pixel ray casting against the same surface/boxes; this is the exact
/// forward model whose inverse is the backprojection warp.
Image render_camera(const Scene& scene, const CameraModel& cam, const Pose& ego);

/// Ground height sampled at every cell center, in the vehicle frame of `ego`.
Grid2<float> ground_grid(const Scene& scene, const Pose& ego, const GridSpec& spec);

/// Lane graph expressed in the vehicle frame of `ego`.
LaneGraph lanes_in_frame(const Scene& scene, const Pose& ego);

/// Cells whose lifted center is the first thing the camera ray hits (no
/// clutter or terrain in between, within a small tolerance).
MaskGrid unoccluded_mask(const Scene& scene, const CameraModel& cam, const Pose& ego,
                         const GridSpec& spec, const Grid2<float>& ground);

/// Forward-facing camera used by the synthetic rig: 1.7 m above the vehicle
/// origin, pitched 5 degrees down, 1024 x 512, fx = fy = 800.
CameraModel default_camera();

}  // namespace lanedet::synth
