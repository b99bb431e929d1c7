#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "lanedet/warp.hpp"
#include "test_util.hpp"

using namespace lanedet;

namespace {

// Downward camera whose pixel grid coincides with the BEV lattice: cell
// (i, j) projects to pixel (u, v) = (j, i) exactly.
CameraModel aligned_nadir_camera() {
  CameraModel cam;
  cam.fx = cam.fy = 20.0;
  cam.cx = 11.5;
  cam.cy = 23.5;
  cam.width = 24;
  cam.height = 24;
  Eigen::Matrix3d r;
  r << 0.0, 1.0, 0.0,
       1.0, 0.0, 0.0,
       0.0, 0.0, -1.0;
  cam.extrinsics.rotation = r;
  const Eigen::Vector3d center(24.0, 0.0, 20.0);
  cam.extrinsics.translation = -(r * center);
  return cam;
}

GridSpec aligned_spec() { return GridSpec::standard(24, 24, 1.0); }

template <class T>
Grid3<T> random_image(int c, int h, int w, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Grid3<T> img(c, h, w);
  for (auto& v : img.data) v = static_cast<T>(u(rng));
  return img;
}

}  // namespace

TEST_CASE("nadir camera over flat ground copies the image pixel-exactly") {
  std::mt19937_64 rng(1);
  const CameraModel cam = aligned_nadir_camera();
  const GridSpec spec = aligned_spec();
  const Grid3<double> image = random_image<double>(3, 24, 24, rng);
  const Grid2<double> ground(24, 24, 0.0);
  const WarpResult<double> out = backproject(image, ground, cam, spec);
  for (int i = 0; i < 24; ++i) {
    for (int j = 0; j < 24; ++j) {
      CHECK(out.valid.at(i, j) == 1);
      for (int c = 0; c < 3; ++c) CHECK(out.bev_image.at(c, i, j) == image.at(c, i, j));
    }
  }
}

TEST_CASE("constant image backprojects to that constant on valid cells") {
  const CameraModel cam = aligned_nadir_camera();
  const GridSpec spec = aligned_spec();
  Grid3<double> image(3, 24, 24, 0.625);
  std::mt19937_64 rng(2);
  Grid2<double> ground(24, 24);
  std::uniform_real_distribution<double> u(0.0, 0.4);
  for (auto& v : ground.data) v = u(rng);
  const WarpResult<double> out = backproject(image, ground, cam, spec);
  int n_valid = 0;
  for (int i = 0; i < 24; ++i)
    for (int j = 0; j < 24; ++j)
      if (out.valid.at(i, j)) {
        ++n_valid;
        for (int c = 0; c < 3; ++c)
          CHECK(out.bev_image.at(c, i, j) == doctest::Approx(0.625).epsilon(1e-12));
      }
  CHECK(n_valid > 400);
}

TEST_CASE("cells behind the camera are invalid and exactly zero") {
  const CameraModel cam = aligned_nadir_camera();  // looks straight down from z = 20
  const GridSpec spec = aligned_spec();
  std::mt19937_64 rng(3);
  const Grid3<double> image = random_image<double>(2, 24, 24, rng);
  const Grid2<double> ground(24, 24, 30.0);  // above the camera -> behind it
  const WarpResult<double> out = backproject(image, ground, cam, spec);
  for (int i = 0; i < 24; ++i)
    for (int j = 0; j < 24; ++j) {
      CHECK(out.valid.at(i, j) == 0);
      for (int c = 0; c < 2; ++c) CHECK(out.bev_image.at(c, i, j) == 0.0);
    }
}

TEST_CASE("backproject is linear in the image") {
  std::mt19937_64 rng(4);
  const CameraModel cam = aligned_nadir_camera();
  const GridSpec spec = aligned_spec();
  Grid2<double> ground(24, 24);
  std::uniform_real_distribution<double> u(0.0, 0.5);
  for (auto& v : ground.data) v = u(rng);
  const Grid3<double> i1 = random_image<double>(3, 24, 24, rng);
  const Grid3<double> i2 = random_image<double>(3, 24, 24, rng);
  const double a = 0.7, b = -1.3;
  Grid3<double> mix(3, 24, 24);
  for (size_t k = 0; k < mix.data.size(); ++k) mix.data[k] = a * i1.data[k] + b * i2.data[k];

  const auto o1 = backproject(i1, ground, cam, spec);
  const auto o2 = backproject(i2, ground, cam, spec);
  const auto om = backproject(mix, ground, cam, spec);
  for (size_t k = 0; k < om.bev_image.data.size(); ++k)
    CHECK(om.bev_image.data[k] ==
          doctest::Approx(a * o1.bev_image.data[k] + b * o2.bev_image.data[k]).epsilon(1e-9));
}

TEST_CASE("forward output is linear in ground height within one bilinear cell") {
  // Sideways camera (optical axis along vehicle +y, image x measuring
  // vehicle z): u is linear in the ground height and v does not move, so for
  // heights whose samples stay inside one lattice cell the three outputs
  // must be exactly collinear.
  std::mt19937_64 rng(5);
  CameraModel cam;
  cam.fx = cam.fy = 50.0;
  cam.cx = cam.cy = 32.0;
  cam.width = cam.height = 64;
  Eigen::Matrix3d r;
  r << 0.0, 0.0, 1.0,
       1.0, 0.0, 0.0,
       0.0, 1.0, 0.0;
  cam.extrinsics.rotation = r;
  cam.extrinsics.translation = Eigen::Vector3d::Zero();

  const GridSpec spec = GridSpec::standard(24, 24, 1.0);
  const Grid3<double> image = random_image<double>(1, 64, 64, rng);
  const double z0 = 0.2002, dz = 0.003;
  Grid2<double> g0(24, 24, z0), g1(24, 24, z0 + dz), g2(24, 24, z0 + 2 * dz);
  WarpState<double> s0, s2;
  const auto o0 = backproject(image, g0, cam, spec, &s0);
  const auto o1 = backproject(image, g1, cam, spec);
  const auto o2 = backproject(image, g2, cam, spec, &s2);
  int checked = 0;
  for (int i = 0; i < 24; ++i)
    for (int j = 0; j < 24; ++j) {
      const size_t idx = static_cast<size_t>(i) * 24 + j;
      if (!s0.valid[idx] || !s2.valid[idx]) continue;
      if (s0.x0[idx] != s2.x0[idx] || s0.y0[idx] != s2.y0[idx]) continue;  // crossed a pixel
      const double mid = 0.5 * (o0.bev_image.at(0, i, j) + o2.bev_image.at(0, i, j));
      CHECK(o1.bev_image.at(0, i, j) == doctest::Approx(mid).epsilon(1e-12));
      ++checked;
    }
  CHECK(checked >= 20);
}

TEST_CASE("flat-ground backprojection matches the closed-form homography") {
  std::mt19937_64 rng(6);
  // A generic oblique camera.
  CameraModel cam;
  cam.fx = 210.0;
  cam.fy = 190.0;
  cam.cx = 64.0;
  cam.cy = 40.0;
  cam.width = 128;
  cam.height = 80;
  Eigen::Matrix3d base;
  base << 0.0, -1.0, 0.0,
          0.0, 0.0, -1.0,
          1.0, 0.0, 0.0;
  const double pitch = 0.22;
  Eigen::Matrix3d rx;
  rx << 1.0, 0.0, 0.0,
        0.0, std::cos(pitch), -std::sin(pitch),
        0.0, std::sin(pitch), std::cos(pitch);
  cam.extrinsics.rotation = rx * base;
  cam.extrinsics.translation = -(cam.extrinsics.rotation * Eigen::Vector3d(0.0, 0.0, 1.6));

  const GridSpec spec = GridSpec::standard(40, 40, 0.6);
  const double h = 0.12;  // flat ground height
  const Grid3<double> image = random_image<double>(3, cam.height, cam.width, rng);
  const Grid2<double> ground(spec.rows, spec.cols, h);
  const WarpResult<double> out = backproject(image, ground, cam, spec);

  // Closed-form plane homography (i, j, 1) -> homogeneous pixel.
  Eigen::Matrix3d k_mat;
  k_mat << cam.fx, 0.0, cam.cx, 0.0, cam.fy, cam.cy, 0.0, 0.0, 1.0;
  Eigen::Matrix3d plane;
  plane.col(0) = cam.extrinsics.rotation.col(0);
  plane.col(1) = cam.extrinsics.rotation.col(1);
  plane.col(2) = cam.extrinsics.rotation.col(2) * h + cam.extrinsics.translation;
  Eigen::Matrix3d cells;
  cells << spec.resolution, 0.0, spec.origin.x(), 0.0, spec.resolution, spec.origin.y(), 0.0, 0.0,
      1.0;
  const Eigen::Matrix3d homography = k_mat * plane * cells;

  int checked = 0;
  for (int i = 0; i < spec.rows; ++i) {
    for (int j = 0; j < spec.cols; ++j) {
      const Eigen::Vector3d q = homography * Eigen::Vector3d(i, j, 1.0);
      if (q.z() <= 1e-9) {
        CHECK(out.valid.at(i, j) == 0);
        continue;
      }
      const double u = q.x() / q.z();
      const double v = q.y() / q.z();
      if (u < 0.0 || u > cam.width - 1.0 || v < 0.0 || v > cam.height - 1.0) {
        CHECK(out.valid.at(i, j) == 0);
        continue;
      }
      REQUIRE(out.valid.at(i, j) == 1);
      // Independent bilinear resample.
      const int x0 = std::min(static_cast<int>(std::floor(u)), cam.width - 1);
      const int y0 = std::min(static_cast<int>(std::floor(v)), cam.height - 1);
      const int x1 = std::min(x0 + 1, cam.width - 1);
      const int y1 = std::min(y0 + 1, cam.height - 1);
      const double wx = u - x0, wy = v - y0;
      for (int c = 0; c < 3; ++c) {
        const double want = (1.0 - wy) * ((1.0 - wx) * image.at(c, y0, x0) + wx * image.at(c, y0, x1)) +
                            wy * ((1.0 - wx) * image.at(c, y1, x0) + wx * image.at(c, y1, x1));
        CHECK(std::abs(out.bev_image.at(c, i, j) - want) <= 1e-4);
      }
      ++checked;
    }
  }
  CHECK(checked > 200);
}

TEST_CASE("vjp: zero upstream gives zero gradients; constant image zeroes grad_ground") {
  std::mt19937_64 rng(7);
  const CameraModel cam = aligned_nadir_camera();
  const GridSpec spec = aligned_spec();
  Grid2<double> ground(24, 24);
  std::uniform_real_distribution<double> u(0.0, 0.4);
  for (auto& v : ground.data) v = u(rng);

  WarpState<double> state;
  const Grid3<double> image = random_image<double>(2, 24, 24, rng);
  backproject(image, ground, cam, spec, &state);

  Grid3<double> gi(2, 24, 24, 0.0);
  Grid2<double> gg(24, 24, 0.0);
  backproject_vjp(Grid3<double>(2, 24, 24, 0.0), state, image, gi, gg);
  for (double v : gi.data) CHECK(v == 0.0);
  for (double v : gg.data) CHECK(v == 0.0);

  // Constant image: spatial differences vanish, so grad_ground stays zero.
  Grid3<double> flat(2, 24, 24, 0.5);
  WarpState<double> state_flat;
  backproject(flat, ground, cam, spec, &state_flat);
  Grid3<double> gi2(2, 24, 24, 0.0);
  Grid2<double> gg2(24, 24, 0.0);
  Grid3<double> upstream(2, 24, 24, 1.0);
  backproject_vjp(upstream, state_flat, flat, gi2, gg2);
  for (double v : gg2.data) CHECK(v == 0.0);
}

TEST_CASE("vjp rejects mismatched shapes") {
  std::mt19937_64 rng(8);
  const CameraModel cam = aligned_nadir_camera();
  const GridSpec spec = aligned_spec();
  const Grid3<double> image = random_image<double>(2, 24, 24, rng);
  const Grid2<double> ground(24, 24, 0.0);
  WarpState<double> state;
  backproject(image, ground, cam, spec, &state);
  Grid3<double> gi(2, 24, 24, 0.0);
  Grid2<double> gg(24, 24, 0.0);
  Grid3<double> bad_upstream(3, 24, 24, 0.0);
  CHECK_THROWS_AS(backproject_vjp(bad_upstream, state, image, gi, gg), std::invalid_argument);
}

TEST_CASE("tape adapter routes gradients into image and ground") {
  std::mt19937_64 rng(9);
  const CameraModel cam = aligned_nadir_camera();
  const GridSpec spec = aligned_spec();
  ad::Tape<double> tape;
  const Grid3<double> img = random_image<double>(3, 24, 24, rng);
  std::vector<double> gv(24 * 24, 0.15);
  auto image = tape.leaf(ad::Shape::chw(3, 24, 24), std::span<const double>(img.data), true);
  auto ground = tape.leaf(ad::Shape::chw(1, 24, 24), std::span<const double>(gv), true);
  auto [warped, valid] = backproject_op(tape, image, ground, cam, spec);
  auto loss = tape.sum(warped);
  tape.backward(loss);
  double img_grad_sum = 0.0, gnd_grad_abs = 0.0;
  for (double g : image.grad()) img_grad_sum += g;
  for (double g : ground.grad()) gnd_grad_abs += std::abs(g);
  // Every valid cell contributes exactly 1 through the bilinear weights.
  int n_valid = 0;
  for (auto v : valid.data) n_valid += v;
  CHECK(img_grad_sum == doctest::Approx(3.0 * n_valid).epsilon(1e-9));
  CHECK(gnd_grad_abs > 0.0);
}
