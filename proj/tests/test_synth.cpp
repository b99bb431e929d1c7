#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "lanedet/dt_label.hpp"
#include "lanedet/synth.hpp"
#include "lanedet/warp.hpp"
#include "test_util.hpp"

using namespace lanedet;

namespace {

synth::SceneConfig quiet_config() {
  synth::SceneConfig cfg;
  cfg.clutter_per_lane = 0.0;
  return cfg;
}

synth::Scene uniform_flat_scene() {
  // Hand-built scene: flat plane, one color everywhere, no paint, no boxes.
  synth::Scene scene;
  scene.lane_count = 0;
  scene.road_color = scene.offroad_color = {0.4, 0.4, 0.4};
  scene.trajectory.push_back(Pose::identity());
  return scene;
}

}  // namespace

TEST_CASE("make_scene is bit-deterministic in the seed") {
  const synth::SceneConfig cfg;
  const synth::Scene a = synth::make_scene(42, cfg);
  const synth::Scene b = synth::make_scene(42, cfg);
  REQUIRE(a.boundaries.size() == b.boundaries.size());
  for (size_t i = 0; i < a.boundaries.size(); ++i)
    for (size_t v = 0; v < a.boundaries[i].size(); ++v)
      CHECK(a.boundaries[i][v] == b.boundaries[i][v]);
  REQUIRE(a.trajectory.size() == b.trajectory.size());
  for (size_t t = 0; t < a.trajectory.size(); ++t) {
    CHECK(a.trajectory[t].rotation == b.trajectory[t].rotation);
    CHECK(a.trajectory[t].translation == b.trajectory[t].translation);
  }
  REQUIRE(a.clutter.size() == b.clutter.size());
  const synth::Scene c = synth::make_scene(43, cfg);
  bool differs = a.boundaries[0][0] != c.boundaries[0][0] || a.lane_count != c.lane_count;
  CHECK(differs);
}

TEST_CASE("a road with n lanes carries n + 1 boundaries") {
  synth::SceneConfig cfg = quiet_config();
  cfg.lane_count_min = cfg.lane_count_max = 2;
  const synth::Scene scene = synth::make_scene(7, cfg);
  CHECK(scene.lane_count == 2);
  CHECK(scene.boundaries.size() == 3);
}

TEST_CASE("zero curvature and zero slope give straight lanes on a flat plane") {
  synth::SceneConfig cfg = quiet_config();
  cfg.curvature_max = 0.0;
  cfg.slope_max = 0.0;
  cfg.wave_amp_max = 0.0;
  const synth::Scene scene = synth::make_scene(11, cfg);
  // Flat plane: constant height everywhere.
  const double z0 = scene.ground.height(0.0, 0.0);
  CHECK(scene.ground.height(40.0, -20.0) == doctest::Approx(z0).epsilon(1e-12));
  // Straight boundaries: collinear in (x, y).
  for (const auto& b : scene.boundaries) {
    const Eigen::Vector2d d0 = (b[1] - b[0]).head<2>().normalized();
    for (size_t v = 2; v < b.size(); ++v) {
      const Eigen::Vector2d dv = (b[v] - b[v - 1]).head<2>().normalized();
      CHECK(std::abs(d0.x() * dv.y() - d0.y() * dv.x()) < 1e-9);
    }
  }
}

TEST_CASE("lane boundaries lie exactly on the ground surface") {
  const synth::Scene scene = synth::make_scene(123, {});
  for (const auto& b : scene.boundaries)
    for (const auto& v : b)
      CHECK(std::abs(v.z() - scene.ground.height(v.x(), v.y())) < 1e-9);
  for (const auto& pose : scene.trajectory)
    CHECK(std::abs(pose.translation.z() -
                   scene.ground.height(pose.translation.x(), pose.translation.y())) < 1e-9);
}

TEST_CASE("cast_ray hits a flat plane at the analytic distance") {
  const synth::Scene scene = uniform_flat_scene();  // ground z = 0
  // Sensor 2 m up, ray 45 degrees down: hit at 2 m horizontal distance.
  const Eigen::Vector3d origin(0.0, 0.0, 2.0);
  const Eigen::Vector3d dir = Eigen::Vector3d(1.0, 0.0, -1.0).normalized();
  const auto hit = synth::cast_ray(scene, origin, dir, 50.0);
  REQUIRE(hit.has_value());
  CHECK(hit->is_ground);
  CHECK(hit->point.x() == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(std::abs(hit->point.z()) < 1e-9);
}

TEST_CASE("cast_ray returns the box face instead of the ground behind it") {
  synth::Scene scene = uniform_flat_scene();
  synth::ClutterBox box;
  box.center = {10.0, 0.0};
  box.yaw = 0.0;
  box.length = 4.0;
  box.width = 2.0;
  box.height = 2.0;
  box.base_z = 0.0;
  scene.clutter.push_back(box);
  const Eigen::Vector3d origin(0.0, 0.0, 1.0);
  const Eigen::Vector3d dir(1.0, 0.0, 0.0);
  const auto hit = synth::cast_ray(scene, origin, dir, 50.0);
  REQUIRE(hit.has_value());
  CHECK(!hit->is_ground);
  CHECK(hit->point.x() == doctest::Approx(8.0).epsilon(1e-9));  // near face
}

TEST_CASE("noise-free lidar returns lie exactly on the surface") {
  synth::SceneConfig cfg = quiet_config();
  const synth::Scene scene = synth::make_scene(5, cfg);
  synth::SensorSpec sensor;
  sensor.range_sigma = 0.0;
  sensor.intensity_sigma = 0.0;
  sensor.channels = 12;
  sensor.azimuth_step_deg = 3.0;
  const Pose& ego = scene.trajectory.back();
  const PointCloud cloud = synth::simulate_lidar(scene, ego, sensor, 99);
  CHECK(cloud.points.size() > 500);
  for (const auto& p : cloud.points) {
    const Eigen::Vector3d w = ego.apply({p.x, p.y, p.z});
    CHECK(std::abs(w.z() - scene.ground.height(w.x(), w.y())) < 1e-6);
  }
}

TEST_CASE("lidar paint returns are brighter than asphalt") {
  synth::SceneConfig cfg = quiet_config();
  const synth::Scene scene = synth::make_scene(8, cfg);
  synth::SensorSpec sensor;
  sensor.range_sigma = 0.0;
  sensor.intensity_sigma = 0.0;
  sensor.channels = 32;
  sensor.azimuth_step_deg = 0.8;
  const Pose& ego = scene.trajectory.back();
  const PointCloud cloud = synth::simulate_lidar(scene, ego, sensor, 3);
  int paint = 0, road = 0;
  for (const auto& p : cloud.points) {
    if (p.intensity > 0.8) ++paint;
    if (std::abs(p.intensity - 0.2) < 1e-9) ++road;
  }
  CHECK(paint > 20);
  CHECK(road > 500);
}

TEST_CASE("uniform texture renders a uniform image below the horizon") {
  const synth::Scene scene = uniform_flat_scene();
  CameraModel cam = synth::default_camera();
  cam.width = 128;
  cam.height = 64;
  cam.cx = 64.0;
  cam.cy = 32.0;
  cam.fx = cam.fy = 100.0;
  const Image img = synth::render_camera(scene, cam, Pose::identity());
  // Bottom rows look straight at nearby ground.
  for (int y = 50; y < 64; ++y)
    for (int x = 0; x < 128; ++x)
      for (int c = 0; c < 3; ++c) CHECK(img.at(c, y, x) == doctest::Approx(0.4f).epsilon(1e-4));
  // Top rows see sky.
  CHECK(img.at(2, 0, 64) == doctest::Approx(0.9f).epsilon(1e-4));
}

TEST_CASE("render / backproject round trip recovers the texture") {
  synth::SceneConfig cfg = quiet_config();
  const synth::Scene scene = synth::make_scene(21, cfg);
  const CameraModel cam = synth::default_camera();
  const Pose& ego = scene.trajectory.back();
  const GridSpec spec = GridSpec::standard(96, 96, 0.5);

  const Image image = synth::render_camera(scene, cam, ego);
  const Grid2<float> ground = synth::ground_grid(scene, ego, spec);
  const MaskGrid visible = synth::unoccluded_mask(scene, cam, ego, spec, ground);
  const WarpResult<float> warped = backproject(image, ground, cam, spec);

  auto mean_error = [&](const Grid2<float>& heights) {
    const WarpResult<float> w = backproject(image, heights, cam, spec);
    double err = 0.0;
    int n = 0;
    for (int i = 0; i < spec.rows; ++i)
      for (int j = 0; j < spec.cols; ++j) {
        if (!w.valid.at(i, j) || !visible.at(i, j)) continue;
        const auto [x, y] = spec.cell_center(i, j);
        const Eigen::Vector3d pw = ego.apply({x, y, static_cast<double>(ground.at(i, j))});
        const Eigen::Vector3d tex = scene.texture_color(pw.x(), pw.y());
        for (int c = 0; c < 3; ++c) err += std::abs(w.bev_image.at(c, i, j) - tex[c]);
        n += 3;
      }
    REQUIRE(n > 3000);
    return err / n;
  };

  const double base_err = mean_error(ground);
  CHECK(base_err <= 0.02);

  Grid2<float> lifted = ground;
  for (auto& v : lifted.data) v += 0.5f;
  CHECK(mean_error(lifted) > base_err);
  (void)warped;
}

TEST_CASE("every lane vertex cell carries the maximum DT target value") {
  const synth::Scene scene = synth::make_scene(31, quiet_config());
  const Pose& ego = scene.trajectory.back();
  const GridSpec spec = GridSpec::standard(96, 96, 0.5);
  const LaneGraph lanes = synth::lanes_in_frame(scene, ego);
  const MaskGrid mask = rasterize_lanes(lanes, spec);
  const DtTarget target = truncate_invert(euclidean_dt(mask), 10.0f);
  int inside = 0;
  for (const auto& b : lanes.boundaries)
    for (const auto& v : b)
      if (const auto cell = spec.point_to_cell(v.x(), v.y())) {
        CHECK(target.grid.at(cell->first, cell->second) == 10.0f);
        ++inside;
      }
  CHECK(inside > 50);
}
