#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "lanedet/autodiff.hpp"
#include "lanedet/geometry.hpp"
#include "lanedet/grid.hpp"

namespace lanedet {

/// Camera image backprojected onto the ground surface, one sample per BEV
/// cell. Invalid cells (behind the camera or projecting outside the image)
/// carry exactly zero in all channels.
template <class T>
struct WarpResult {
  Grid3<T> bev_image;  // same channel count as the source image
  MaskGrid valid;
};

/// Saved forward state for the exact vector-Jacobian product.
template <class T>
struct WarpState {
  int channels = 0, img_h = 0, img_w = 0;
  int rows = 0, cols = 0;
  std::vector<uint8_t> valid;
  std::vector<int> x0, y0;          // bilinear lattice corner per cell
  std::vector<double> wx, wy;       // fractional position inside the lattice cell
  std::vector<double> du_dz, dv_dz; // projection derivatives w.r.t. ground height
};

/// Differentiable backprojection: lift every cell center to its ground
/// height, project through the camera, and bilinearly sample the image.
/// A cell is valid when its projection has positive depth and lands inside
/// [0, w-1] x [0, h-1]; everything else is zeroed (zero padding, inert in
/// the loss). Sampling positions and depth derivatives are computed in
/// double regardless of T.
template <class T>
WarpResult<T> backproject(const Grid3<T>& image, const Grid2<T>& ground, const CameraModel& cam,
                          const GridSpec& spec, WarpState<T>* state_out = nullptr) {
  if (image.rows != cam.height || image.cols != cam.width)
    throw std::invalid_argument("backproject: image dims do not match the camera model");
  if (ground.rows != spec.rows || ground.cols != spec.cols)
    throw std::invalid_argument("backproject: ground grid does not match the BEV spec");

  const int c = image.channels, rows = spec.rows, cols = spec.cols;
  WarpResult<T> result;
  result.bev_image = Grid3<T>(c, rows, cols, T(0));
  result.valid = MaskGrid(rows, cols, 0);

  WarpState<T> state;
  state.channels = c;
  state.img_h = image.rows;
  state.img_w = image.cols;
  state.rows = rows;
  state.cols = cols;
  const size_t cells = static_cast<size_t>(rows) * cols;
  state.valid.assign(cells, 0);
  state.x0.assign(cells, 0);
  state.y0.assign(cells, 0);
  state.wx.assign(cells, 0.0);
  state.wy.assign(cells, 0.0);
  state.du_dz.assign(cells, 0.0);
  state.dv_dz.assign(cells, 0.0);

  const Eigen::Matrix3d& rot = cam.extrinsics.rotation;
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const size_t idx = static_cast<size_t>(i) * cols + j;
      const auto [x, y] = spec.cell_center(i, j);
      const Eigen::Vector3d p_vehicle(x, y, static_cast<double>(ground.at(i, j)));
      const Eigen::Vector3d pc = cam.extrinsics.apply(p_vehicle);
      if (!(pc.z() > CameraModel::kDepthEpsilon)) continue;
      const double u = cam.fx * pc.x() / pc.z() + cam.cx;
      const double v = cam.fy * pc.y() / pc.z() + cam.cy;
      if (!cam.inside_image(u, v)) continue;

      const int x0 = std::min(static_cast<int>(std::floor(u)), image.cols - 1);
      const int y0 = std::min(static_cast<int>(std::floor(v)), image.rows - 1);
      const int x1 = std::min(x0 + 1, image.cols - 1);
      const int y1 = std::min(y0 + 1, image.rows - 1);
      const double wx = u - x0;
      const double wy = v - y0;

      result.valid.data[idx] = 1;
      state.valid[idx] = 1;
      state.x0[idx] = x0;
      state.y0[idx] = y0;
      state.wx[idx] = wx;
      state.wy[idx] = wy;
      // Quotient rule along the ground-height direction: d p_cam / dz is the
      // third column of R.
      const double inv_z = 1.0 / pc.z();
      state.du_dz[idx] = cam.fx * (rot(0, 2) * pc.z() - pc.x() * rot(2, 2)) * inv_z * inv_z;
      state.dv_dz[idx] = cam.fy * (rot(1, 2) * pc.z() - pc.y() * rot(2, 2)) * inv_z * inv_z;

      for (int ch = 0; ch < c; ++ch) {
        const T* plane = image.channel(ch);
        const double v00 = plane[static_cast<size_t>(y0) * image.cols + x0];
        const double v01 = plane[static_cast<size_t>(y0) * image.cols + x1];
        const double v10 = plane[static_cast<size_t>(y1) * image.cols + x0];
        const double v11 = plane[static_cast<size_t>(y1) * image.cols + x1];
        const double s =
            (1.0 - wy) * ((1.0 - wx) * v00 + wx * v01) + wy * ((1.0 - wx) * v10 + wx * v11);
        result.bev_image.at(ch, i, j) = static_cast<T>(s);
      }
    }
  }
  if (state_out) *state_out = std::move(state);
  return result;
}

/// Exact VJP of backproject. upstream: (c, rows, cols) cotangent. Adds into
/// grad_image and grad_ground (both must be pre-sized; typically zero-filled
/// by the caller). Invalid cells contribute nothing.
template <class T>
void backproject_vjp(const Grid3<T>& upstream, const WarpState<T>& state, const Grid3<T>& image,
                     Grid3<T>& grad_image, Grid2<T>& grad_ground) {
  if (upstream.channels != state.channels || upstream.rows != state.rows ||
      upstream.cols != state.cols)
    throw std::invalid_argument("backproject_vjp: upstream shape mismatch");
  if (grad_image.channels != state.channels || grad_image.rows != state.img_h ||
      grad_image.cols != state.img_w)
    throw std::invalid_argument("backproject_vjp: grad_image shape mismatch");
  if (grad_ground.rows != state.rows || grad_ground.cols != state.cols)
    throw std::invalid_argument("backproject_vjp: grad_ground shape mismatch");
  if (image.channels != state.channels || image.rows != state.img_h || image.cols != state.img_w)
    throw std::invalid_argument("backproject_vjp: image shape mismatch");

  const int cols = state.cols;
  for (int i = 0; i < state.rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const size_t idx = static_cast<size_t>(i) * cols + j;
      if (!state.valid[idx]) continue;
      const int x0 = state.x0[idx], y0 = state.y0[idx];
      const int x1 = std::min(x0 + 1, state.img_w - 1);
      const int y1 = std::min(y0 + 1, state.img_h - 1);
      const double wx = state.wx[idx], wy = state.wy[idx];

      double g_height = 0.0;
      for (int ch = 0; ch < state.channels; ++ch) {
        const double g = upstream.at(ch, i, j);
        if (g == 0.0) continue;
        T* gplane = grad_image.channel(ch);
        gplane[static_cast<size_t>(y0) * state.img_w + x0] +=
            static_cast<T>(g * (1.0 - wy) * (1.0 - wx));
        gplane[static_cast<size_t>(y0) * state.img_w + x1] += static_cast<T>(g * (1.0 - wy) * wx);
        gplane[static_cast<size_t>(y1) * state.img_w + x0] += static_cast<T>(g * wy * (1.0 - wx));
        gplane[static_cast<size_t>(y1) * state.img_w + x1] += static_cast<T>(g * wy * wx);

        const T* plane = image.channel(ch);
        const double v00 = plane[static_cast<size_t>(y0) * state.img_w + x0];
        const double v01 = plane[static_cast<size_t>(y0) * state.img_w + x1];
        const double v10 = plane[static_cast<size_t>(y1) * state.img_w + x0];
        const double v11 = plane[static_cast<size_t>(y1) * state.img_w + x1];
        const double ds_du = (1.0 - wy) * (v01 - v00) + wy * (v11 - v10);
        const double ds_dv = (1.0 - wx) * (v10 - v00) + wx * (v11 - v01);
        g_height += g * (ds_du * state.du_dz[idx] + ds_dv * state.dv_dz[idx]);
      }
      grad_ground.at(i, j) += static_cast<T>(g_height);
    }
  }
}

/// Tape adapter: registers backproject as a custom differentiable op so the
/// warped image participates in end-to-end training. `image` is (c, h, w),
/// `ground` is (1, rows, cols). Returns the warped tensor and validity mask.
template <class T>
std::pair<ad::Tensor<T>, MaskGrid> backproject_op(ad::Tape<T>& tape, ad::Tensor<T> image,
                                                  ad::Tensor<T> ground, const CameraModel& cam,
                                                  const GridSpec& spec) {
  const ad::Shape& si = tape.shape_of(image);
  const ad::Shape& sg = tape.shape_of(ground);
  if (si.rank != 3) throw std::invalid_argument("backproject_op: image must be rank 3");
  if (sg.rank != 3 || sg.c() != 1 || sg.h() != spec.rows || sg.w() != spec.cols)
    throw std::invalid_argument("backproject_op: ground must be (1, rows, cols)");

  Grid3<T> img(si.c(), si.h(), si.w());
  const auto iv = tape.value_of(image);
  std::copy(iv.begin(), iv.end(), img.data.begin());
  Grid2<T> gnd(spec.rows, spec.cols);
  const auto gv = tape.value_of(ground);
  std::copy(gv.begin(), gv.end(), gnd.data.begin());

  auto state = std::make_shared<WarpState<T>>();
  WarpResult<T> fwd = backproject(img, gnd, cam, spec, state.get());
  MaskGrid valid = fwd.valid;

  auto vjp = [state, image, ground, cam, spec](std::span<const T> upstream, ad::Tape<T>& t) {
    Grid3<T> up(state->channels, state->rows, state->cols);
    std::copy(upstream.begin(), upstream.end(), up.data.begin());
    Grid3<T> img_again(state->channels, state->img_h, state->img_w);
    const auto iv2 = t.value_of(image);
    std::copy(iv2.begin(), iv2.end(), img_again.data.begin());

    Grid3<T> gi(state->channels, state->img_h, state->img_w, T(0));
    Grid2<T> gg(state->rows, state->cols, T(0));
    backproject_vjp(up, *state, img_again, gi, gg);
    if (t.needs(image)) {
      auto& buf = t.grad_buffer(image);
      for (size_t k = 0; k < buf.size(); ++k) buf[k] += gi.data[k];
    }
    if (t.needs(ground)) {
      auto& buf = t.grad_buffer(ground);
      for (size_t k = 0; k < buf.size(); ++k) buf[k] += gg.data[k];
    }
  };

  ad::Tensor<T> out = tape.custom(ad::Shape::chw(si.c(), spec.rows, spec.cols),
                                  std::move(fwd.bev_image.data), {image.id, ground.id},
                                  std::move(vjp));
  return {out, std::move(valid)};
}

}  // namespace lanedet
