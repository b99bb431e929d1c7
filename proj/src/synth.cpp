#include "lanedet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lanedet::synth {

namespace {

constexpr double kPi = 3.14159265358979323846;

double point_segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                              const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

}  // namespace

void SegmentIndex::build(std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>> segments,
                         double cell_size) {
  segments_ = std::move(segments);
  cell_ = cell_size;
  if (segments_.empty()) {
    nx_ = ny_ = 0;
    return;
  }
  Eigen::Vector2d lo = segments_[0].first, hi = segments_[0].first;
  for (const auto& [a, b] : segments_) {
    lo = lo.cwiseMin(a).cwiseMin(b);
    hi = hi.cwiseMax(a).cwiseMax(b);
  }
  lo_ = lo - Eigen::Vector2d(cell_, cell_);
  nx_ = static_cast<int>((hi.x() - lo_.x()) / cell_) + 2;
  ny_ = static_cast<int>((hi.y() - lo_.y()) / cell_) + 2;
  bins_.assign(static_cast<size_t>(nx_) * ny_, {});
  for (int s = 0; s < static_cast<int>(segments_.size()); ++s) {
    const auto& [a, b] = segments_[s];
    const Eigen::Vector2d slo = a.cwiseMin(b), shi = a.cwiseMax(b);
    const int ix0 = std::clamp(static_cast<int>((slo.x() - lo_.x()) / cell_), 0, nx_ - 1);
    const int ix1 = std::clamp(static_cast<int>((shi.x() - lo_.x()) / cell_), 0, nx_ - 1);
    const int iy0 = std::clamp(static_cast<int>((slo.y() - lo_.y()) / cell_), 0, ny_ - 1);
    const int iy1 = std::clamp(static_cast<int>((shi.y() - lo_.y()) / cell_), 0, ny_ - 1);
    for (int ix = ix0; ix <= ix1; ++ix)
      for (int iy = iy0; iy <= iy1; ++iy)
        bins_[static_cast<size_t>(ix) * ny_ + iy].push_back(s);
  }
}

double SegmentIndex::distance(const Eigen::Vector2d& p, double radius) const {
  if (segments_.empty() || nx_ == 0) return std::numeric_limits<double>::infinity();
  const int ring = static_cast<int>(radius / cell_) + 1;
  const int cx = static_cast<int>((p.x() - lo_.x()) / cell_);
  const int cy = static_cast<int>((p.y() - lo_.y()) / cell_);
  double best = std::numeric_limits<double>::infinity();
  for (int ix = std::max(0, cx - ring); ix <= std::min(nx_ - 1, cx + ring); ++ix) {
    for (int iy = std::max(0, cy - ring); iy <= std::min(ny_ - 1, cy + ring); ++iy) {
      for (int s : bins_[static_cast<size_t>(ix) * ny_ + iy]) {
        const double d = point_segment_distance(p, segments_[s].first, segments_[s].second);
        best = std::min(best, d);
      }
    }
  }
  return best <= radius ? best : std::numeric_limits<double>::infinity();
}

bool Scene::on_paint(double x, double y) const {
  return paint_index.distance({x, y}, 1.0) <= kPaintHalfWidth;
}

bool Scene::on_road(double x, double y) const {
  return road_index.distance({x, y}, road_halfwidth + 2.0) <= road_halfwidth;
}

Eigen::Vector3d Scene::texture_color(double x, double y) const {
  double m = 0.0;
  for (const auto& w : mottle) m += w.amp * std::sin(w.kx * x + w.ky * y + w.phase);
  Eigen::Vector3d base;
  if (on_paint(x, y)) {
    base = paint_color * (1.0 + 0.3 * m);
  } else if (on_road(x, y)) {
    base = road_color * (1.0 + m);
  } else {
    base = offroad_color * (1.0 + m);
  }
  return base.cwiseMax(0.02).cwiseMin(0.98);
}

std::optional<RayHit> cast_ray(const Scene& scene, const Eigen::Vector3d& origin,
                               const Eigen::Vector3d& dir, double max_range) {
  std::optional<RayHit> best;

  // Ground: conservative sphere-tracing style march. The surface slope is
  // bounded by construction, so f = ray_z - ground can fall at most
  // (|dir_z| + kSlopeBound) per unit t; stepping by a fraction of
  // f / that bound cannot skip the first crossing. Refined by bisection.
  constexpr double kSlopeBound = 0.12;
  const double fall_rate = std::abs(dir.z()) + kSlopeBound;
  auto f = [&](double t) {
    const Eigen::Vector3d p = origin + t * dir;
    return p.z() - scene.ground.height(p.x(), p.y());
  };
  double t = 0.0;
  double ft = f(0.0);
  if (ft > 0.0) {
    while (t < max_range) {
      const double step = std::clamp(0.9 * ft / fall_rate, 0.02, 3.0);
      const double tn = t + step;
      const double fn = f(tn);
      if (fn <= 0.0) {
        double lo = t, hi = tn;
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          (f(mid) > 0.0 ? lo : hi) = mid;
        }
        const double thit = 0.5 * (lo + hi);
        best = RayHit{thit, origin + thit * dir, true, -1};
        break;
      }
      t = tn;
      ft = fn;
    }
  }

  // Clutter: exact slab tests against yaw-rotated vertical prisms.
  for (int b = 0; b < static_cast<int>(scene.clutter.size()); ++b) {
    const ClutterBox& box = scene.clutter[b];
    const double cy = std::cos(-box.yaw), sy = std::sin(-box.yaw);
    const Eigen::Vector2d po(origin.x() - box.center.x(), origin.y() - box.center.y());
    const Eigen::Vector2d pl(cy * po.x() - sy * po.y(), sy * po.x() + cy * po.y());
    const Eigen::Vector2d dl(cy * dir.x() - sy * dir.y(), sy * dir.x() + cy * dir.y());
    double t0 = 1e-9, t1 = max_range;
    bool miss = false;
    const double mins[3] = {-box.length / 2.0, -box.width / 2.0, box.base_z};
    const double maxs[3] = {box.length / 2.0, box.width / 2.0, box.base_z + box.height};
    const double o3[3] = {pl.x(), pl.y(), origin.z()};
    const double d3[3] = {dl.x(), dl.y(), dir.z()};
    for (int a = 0; a < 3; ++a) {
      if (d3[a] == 0.0) {
        if (o3[a] < mins[a] || o3[a] > maxs[a]) {
          miss = true;
          break;
        }
      } else {
        double ta = (mins[a] - o3[a]) / d3[a];
        double tb = (maxs[a] - o3[a]) / d3[a];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1) {
          miss = true;
          break;
        }
      }
    }
    if (!miss && (!best || t0 < best->t)) best = RayHit{t0, origin + t0 * dir, false, b};
  }
  return best;
}

namespace {

struct RoadFrame {
  std::vector<Eigen::Vector2d> center;   // dense centerline samples
  std::vector<double> heading;
  double step = 0.5;

  Eigen::Vector2d at(double s) const {
    const double u = std::clamp(s / step, 0.0, static_cast<double>(center.size() - 1));
    const int i = std::min(static_cast<int>(u), static_cast<int>(center.size()) - 2);
    const double f = u - i;
    return center[i] * (1.0 - f) + center[i + 1] * f;
  }
  double heading_at(double s) const {
    const double u = std::clamp(s / step, 0.0, static_cast<double>(heading.size() - 1));
    const int i = std::min(static_cast<int>(u), static_cast<int>(heading.size()) - 2);
    const double f = u - i;
    return heading[i] * (1.0 - f) + heading[i + 1] * f;
  }
  Eigen::Vector2d normal_at(double s) const {
    const double h = heading_at(s);
    return {-std::sin(h), std::cos(h)};
  }
};

RoadFrame integrate_centerline(double total_len, double psi0, double k0, double k1,
                               double wave_len, double phase) {
  RoadFrame rf;
  const int n = static_cast<int>(total_len / rf.step) + 1;
  rf.center.reserve(n);
  rf.heading.reserve(n);
  Eigen::Vector2d p(0.0, 0.0);
  double psi = psi0;
  for (int i = 0; i < n; ++i) {
    rf.center.push_back(p);
    rf.heading.push_back(psi);
    const double s = i * rf.step;
    const double kappa = k0 + k1 * std::sin(2.0 * kPi * s / wave_len + phase);
    psi += kappa * rf.step;
    p += rf.step * Eigen::Vector2d(std::cos(psi), std::sin(psi));
  }
  return rf;
}

}  // namespace

Scene make_scene(uint64_t seed, const SceneConfig& config) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  auto uni = [&rng](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };

  Scene scene;
  scene.seed = seed;
  scene.lane_count = std::uniform_int_distribution<int>(config.lane_count_min,
                                                        config.lane_count_max)(rng);
  scene.road_halfwidth = scene.lane_count * config.lane_width / 2.0 + 2.0;

  // Road centerline with slowly varying curvature.
  const double total_len = 150.0;
  const RoadFrame road = integrate_centerline(
      total_len, uni(-0.12, 0.12), uni(-config.curvature_max, config.curvature_max) * 0.5,
      uni(0.0, config.curvature_max) * 0.5, uni(60.0, 120.0), uni(0.0, 2.0 * kPi));

  // Ground: gentle quadratic bowl plus two long waves, slopes within grade.
  scene.ground.b_x = uni(-0.6, 0.6) * config.slope_max;
  scene.ground.b_y = uni(-0.6, 0.6) * config.slope_max;
  scene.ground.a_xx = uni(-1.0, 1.0) * 2.0e-3 * config.slope_max;
  scene.ground.a_yy = uni(-1.0, 1.0) * 2.0e-3 * config.slope_max;
  scene.ground.a_xy = uni(-1.0, 1.0) * 1.0e-3 * config.slope_max;
  scene.ground.c = uni(-0.5, 0.5);
  for (int w = 0; w < 2; ++w) {
    GroundSurface::Wave wave;
    wave.amp = uni(0.25, 1.0) * config.wave_amp_max;
    const double lambda = uni(18.0, 45.0);
    const double dir = uni(0.0, 2.0 * kPi);
    wave.kx = 2.0 * kPi / lambda * std::cos(dir);
    wave.ky = 2.0 * kPi / lambda * std::sin(dir);
    wave.phase = uni(0.0, 2.0 * kPi);
    scene.ground.waves.push_back(wave);
  }

  // Boundaries: lane_count + 1 parallel offset curves, vertices riding the
  // surface exactly.
  const int n_boundaries = scene.lane_count + 1;
  for (int k = 0; k < n_boundaries; ++k) {
    const double offset = (k - scene.lane_count / 2.0) * config.lane_width;
    std::vector<Eigen::Vector3d> poly;
    for (double s = 0.0; s <= total_len - 1.0; s += 1.0) {
      const Eigen::Vector2d p = road.at(s) + road.normal_at(s) * offset;
      poly.emplace_back(p.x(), p.y(), scene.ground.height(p.x(), p.y()));
    }
    scene.boundaries.push_back(std::move(poly));
  }

  // Ego trajectory along one lane, vehicle origin on the surface, yaw-only.
  const int ego_lane = std::uniform_int_distribution<int>(0, scene.lane_count - 1)(rng);
  const double ego_offset = (ego_lane + 0.5 - scene.lane_count / 2.0) * config.lane_width;
  const double s_start = 18.0 + uni(0.0, 4.0);
  for (int t = 0; t < config.frames; ++t) {
    const double s = s_start + t * config.frame_spacing;
    const Eigen::Vector2d p = road.at(s) + road.normal_at(s) * ego_offset;
    Pose pose = Pose::from_yaw(road.heading_at(s));
    pose.translation = {p.x(), p.y(), scene.ground.height(p.x(), p.y())};
    scene.trajectory.push_back(pose);
  }

  // Clutter boxes on lanes ahead of the ego.
  const int n_boxes = std::max(
      0, static_cast<int>(std::lround(config.clutter_per_lane * scene.lane_count + uni(-1.0, 1.0))));
  for (int b = 0; b < n_boxes; ++b) {
    const int lane = std::uniform_int_distribution<int>(0, scene.lane_count - 1)(rng);
    const double offset = (lane + 0.5 - scene.lane_count / 2.0) * config.lane_width;
    const double s = s_start + uni(12.0, 48.0);
    const Eigen::Vector2d p = road.at(s) + road.normal_at(s) * (offset + uni(-0.4, 0.4));
    ClutterBox box;
    box.center = p;
    box.yaw = road.heading_at(s) + uni(-0.05, 0.05);
    box.length = uni(4.0, 5.2);
    box.width = uni(1.7, 2.1);
    box.height = uni(1.3, 2.6);
    box.base_z = scene.ground.height(p.x(), p.y());
    const double shade = uni(0.3, 0.7);
    box.color = {shade, shade, shade * uni(0.9, 1.15)};
    scene.clutter.push_back(box);
  }

  // Texture: low-frequency luminance mottle; heavier with the noise level.
  const double mottle_gain = 1.0 + config.noise_level;
  for (int w = 0; w < 3; ++w) {
    Scene::Mottle m;
    m.amp = uni(0.015, 0.05) * mottle_gain;
    const double lambda = uni(2.5, 14.0);
    const double dir = uni(0.0, 2.0 * kPi);
    m.kx = 2.0 * kPi / lambda * std::cos(dir);
    m.ky = 2.0 * kPi / lambda * std::sin(dir);
    m.phase = uni(0.0, 2.0 * kPi);
    scene.mottle.push_back(m);
  }

  // Spatial indices for texture queries.
  std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>> paint_segs;
  for (const auto& b : scene.boundaries)
    for (size_t i = 0; i + 1 < b.size(); ++i)
      paint_segs.push_back({b[i].head<2>(), b[i + 1].head<2>()});
  scene.paint_index.build(std::move(paint_segs), 3.0);
  std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>> center_segs;
  for (size_t i = 0; i + 1 < road.center.size(); ++i)
    center_segs.push_back({road.center[i], road.center[i + 1]});
  scene.road_index.build(std::move(center_segs), 6.0);

  return scene;
}

PointCloud simulate_lidar(const Scene& scene, const Pose& ego, const SensorSpec& sensor,
                          uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0xd1b54a32d192ed03ULL);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const Eigen::Vector3d origin = ego.apply({0.0, 0.0, sensor.mount_height});
  PointCloud cloud;
  const int n_azimuth = static_cast<int>(std::lround(360.0 / sensor.azimuth_step_deg));
  cloud.points.reserve(static_cast<size_t>(sensor.channels) * n_azimuth / 2);

  for (int ch = 0; ch < sensor.channels; ++ch) {
    const double elev_deg =
        sensor.elevation_min_deg + (sensor.elevation_max_deg - sensor.elevation_min_deg) *
                                       (sensor.channels == 1 ? 0.0
                                                             : static_cast<double>(ch) /
                                                                   (sensor.channels - 1));
    const double elev = elev_deg * kPi / 180.0;
    for (int az = 0; az < n_azimuth; ++az) {
      const double phi = 2.0 * kPi * az / n_azimuth;
      const Eigen::Vector3d dir_vehicle(std::cos(phi) * std::cos(elev),
                                        std::sin(phi) * std::cos(elev), std::sin(elev));
      const Eigen::Vector3d dir = ego.rotation * dir_vehicle;
      const auto hit = cast_ray(scene, origin, dir, sensor.max_range);
      if (!hit) continue;
      const double range = hit->t + sensor.range_sigma * gauss(rng);
      const Eigen::Vector3d p_world = origin + range * dir;
      const Eigen::Vector3d p_vehicle = ego.inverse().apply(p_world);

      double intensity;
      if (!hit->is_ground) {
        intensity = 0.45;
      } else if (scene.on_paint(hit->point.x(), hit->point.y())) {
        intensity = 0.85;
      } else if (scene.on_road(hit->point.x(), hit->point.y())) {
        intensity = 0.20;
      } else {
        intensity = 0.12;
      }
      const double sigma_i = sensor.intensity_sigma * (1.0 + hit->t / 30.0);
      intensity = std::clamp(intensity + sigma_i * gauss(rng), 0.0, 1.0);
      cloud.points.push_back({p_vehicle.x(), p_vehicle.y(), p_vehicle.z(), intensity});
    }
  }
  return cloud;
}

CameraModel default_camera() {
  CameraModel cam;
  cam.fx = cam.fy = 800.0;
  cam.cx = 512.0;
  cam.cy = 256.0;
  cam.width = 1024;
  cam.height = 512;

  // Camera axes in vehicle coordinates: x right, y down, z along the optical
  // axis, pitched 5 degrees toward the ground.
  Eigen::Matrix3d base;
  base << 0.0, -1.0, 0.0,
          0.0, 0.0, -1.0,
          1.0, 0.0, 0.0;
  const double pitch = 5.0 * kPi / 180.0;
  Eigen::Matrix3d rx;
  rx << 1.0, 0.0, 0.0,
        0.0, std::cos(pitch), -std::sin(pitch),
        0.0, std::sin(pitch), std::cos(pitch);
  cam.extrinsics.rotation = rx * base;
  const Eigen::Vector3d center_vehicle(0.0, 0.0, 1.7);
  cam.extrinsics.translation = -(cam.extrinsics.rotation * center_vehicle);
  return cam;
}

Image render_camera(const Scene& scene, const CameraModel& cam, const Pose& ego) {
  const Pose cam_to_world = compose(ego, cam.extrinsics.inverse());
  const Eigen::Vector3d origin = cam_to_world.translation;
  const Eigen::Vector3d sky(0.65, 0.75, 0.9);

  Image img(3, cam.height, cam.width);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int py = 0; py < cam.height; ++py) {
    for (int px = 0; px < cam.width; ++px) {
      const Eigen::Vector3d dir_cam((px - cam.cx) / cam.fx, (py - cam.cy) / cam.fy, 1.0);
      const Eigen::Vector3d dir = (cam_to_world.rotation * dir_cam).normalized();
      const auto hit = cast_ray(scene, origin, dir, 160.0);
      Eigen::Vector3d color = sky;
      if (hit) {
        if (hit->is_ground) {
          color = scene.texture_color(hit->point.x(), hit->point.y());
        } else {
          const ClutterBox& box = scene.clutter[hit->box_id];
          // Slightly lighter tops so boxes read as 3D.
          const bool top = hit->point.z() > box.base_z + box.height - 1e-6;
          color = box.color * (top ? 1.25 : 1.0);
        }
      }
      for (int c = 0; c < 3; ++c)
        img.at(c, py, px) = static_cast<float>(std::clamp(color[c], 0.0, 1.0));
    }
  }
  return img;
}

Grid2<float> ground_grid(const Scene& scene, const Pose& ego, const GridSpec& spec) {
  Grid2<float> g(spec.rows, spec.cols);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int i = 0; i < spec.rows; ++i) {
    for (int j = 0; j < spec.cols; ++j) {
      const auto [x, y] = spec.cell_center(i, j);
      // Solve for the vehicle-frame height whose world image lies on the
      // surface; exact in one step for yaw-only poses.
      double zv = 0.0;
      for (int it = 0; it < 8; ++it) {
        const Eigen::Vector3d pw = ego.apply({x, y, zv});
        const double err = scene.ground.height(pw.x(), pw.y()) - pw.z();
        zv += err;
        if (std::abs(err) < 1e-12) break;
      }
      g.at(i, j) = static_cast<float>(zv);
    }
  }
  return g;
}

LaneGraph lanes_in_frame(const Scene& scene, const Pose& ego) {
  const Pose world_to_vehicle = ego.inverse();
  LaneGraph lanes;
  lanes.lane_count = scene.lane_count;
  for (const auto& b : scene.boundaries) {
    std::vector<Eigen::Vector3d> poly;
    poly.reserve(b.size());
    for (const auto& v : b) poly.push_back(world_to_vehicle.apply(v));
    lanes.boundaries.push_back(std::move(poly));
  }
  return lanes;
}

MaskGrid unoccluded_mask(const Scene& scene, const CameraModel& cam, const Pose& ego,
                         const GridSpec& spec, const Grid2<float>& ground) {
  const Pose cam_to_world = compose(ego, cam.extrinsics.inverse());
  const Eigen::Vector3d origin = cam_to_world.translation;
  MaskGrid mask(spec.rows, spec.cols, 0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int i = 0; i < spec.rows; ++i) {
    for (int j = 0; j < spec.cols; ++j) {
      const auto [x, y] = spec.cell_center(i, j);
      const Eigen::Vector3d target =
          ego.apply({x, y, static_cast<double>(ground.at(i, j))});
      const Eigen::Vector3d delta = target - origin;
      const double dist = delta.norm();
      if (dist < 1e-6) continue;
      const auto hit = cast_ray(scene, origin, delta / dist, dist + 2.0);
      if (hit && (hit->point - target).norm() <= 0.2) mask.at(i, j) = 1;
    }
  }
  return mask;
}

}  // namespace lanedet::synth
