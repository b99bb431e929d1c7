#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "lanedet/autodiff.hpp"
#include "lanedet/dt_label.hpp"
#include "lanedet/geometry.hpp"
#include "lanedet/grid.hpp"
#include "lanedet/io.hpp"
#include "lanedet/sweeps.hpp"
#include "lanedet/warp.hpp"

namespace lanedet {

enum class SensorMode { kLidar, kCamera, kBoth };

std::string to_string(SensorMode mode);
SensorMode parse_sensor_mode(const std::string& s);

/// Heights are fed to the nets scaled by this factor so the empty-cell fill
/// value stays O(1).
inline constexpr float kHeightInputScale = 0.1f;

template <class T>
struct Param {
  std::string name;
  ad::Shape shape;
  std::vector<T> value;
  ad::AdamState opt;
};

template <class T>
struct ConvLayer {
  std::string name;
  int in_ch = 0, out_ch = 0, k = 3, pad = 1;
  Param<T> w, b;

  void configure(const std::string& layer_name, int ci, int co, int kernel) {
    name = layer_name;
    in_ch = ci;
    out_ch = co;
    k = kernel;
    pad = kernel / 2;
    w.name = layer_name + ".w";
    w.shape = ad::Shape::conv_w(co, ci, kernel);
    w.value.assign(static_cast<size_t>(w.shape.numel()), T(0));
    b.name = layer_name + ".b";
    b.shape = ad::Shape::vec(co);
    b.value.assign(static_cast<size_t>(co), T(0));
  }

  void init(std::mt19937_64& rng) {
    ad::he_normal_init<T>(std::span<T>(w.value), in_ch * k * k, rng);
    std::fill(b.value.begin(), b.value.end(), T(0));
  }
};

/// Parameters bound onto one tape for a single forward/backward pass.
template <class T>
using BoundParams = std::vector<std::pair<Param<T>*, ad::Tensor<T>>>;

template <class T>
ad::Tensor<T> bind_conv(ad::Tape<T>& tape, ConvLayer<T>& layer, ad::Tensor<T> x,
                        BoundParams<T>* bound, bool train, bool relu_after) {
  const auto wt = tape.leaf(layer.w.shape, std::span<const T>(layer.w.value), train);
  const auto bt = tape.leaf(layer.b.shape, std::span<const T>(layer.b.value), train);
  if (bound) {
    bound->push_back({&layer.w, wt});
    bound->push_back({&layer.b, bt});
  }
  auto out = tape.conv2d(x, wt, bt, 1, layer.pad);
  return relu_after ? tape.relu(out) : out;
}

/// Dense ground-height estimator: a small conv stack with one large
/// receptive-field context branch (15 x 15 average pooling, 1 x 1 conv,
/// bilinear resize back) so height information travels from dense to sparse
/// regions. Output is (1, rows, cols) in meters.
template <class T>
class DeskGroundNet {
 public:
  DeskGroundNet() {
    conv1_.configure("ground.conv1", 3, 16, 3);
    conv2_.configure("ground.conv2", 16, 16, 3);
    conv3_.configure("ground.conv3", 16, 8, 3);
    ctx_.configure("ground.ctx", 8, 8, 1);
    fuse1_.configure("ground.fuse1", 16, 8, 3);
    fuse2_.configure("ground.fuse2", 8, 1, 3);
  }

  void init(uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x67e6c7c9d95c3a11ULL);
    for (auto* l : layers()) l->init(rng);
  }

  ad::Tensor<T> forward(ad::Tape<T>& tape, ad::Tensor<T> bev, BoundParams<T>* bound, bool train) {
    auto h = bind_conv(tape, conv1_, bev, bound, train, true);
    h = bind_conv(tape, conv2_, h, bound, train, true);
    h = bind_conv(tape, conv3_, h, bound, train, true);
    auto ctx = tape.avg_pool(h, 15, 15);
    ctx = bind_conv(tape, ctx_, ctx, bound, train, true);
    ctx = tape.bilinear_resize(ctx, tape.shape_of(h).h(), tape.shape_of(h).w());
    auto cat = tape.concat_channels(h, ctx);
    cat = bind_conv(tape, fuse1_, cat, bound, train, true);
    return bind_conv(tape, fuse2_, cat, bound, train, false);
  }

  std::vector<Param<T>*> params() {
    std::vector<Param<T>*> out;
    for (auto* l : layers()) {
      out.push_back(&l->w);
      out.push_back(&l->b);
    }
    return out;
  }

 private:
  std::vector<ConvLayer<T>*> layers() {
    return {&conv1_, &conv2_, &conv3_, &ctx_, &fuse1_, &fuse2_};
  }
  ConvLayer<T> conv1_, conv2_, conv3_, ctx_, fuse1_, fuse2_;
};

/// Two-branch lane net: LiDAR BEV and re-projected camera image pass through
/// separate input branches without weight sharing, concatenate, and a short
/// trunk regresses the inverted truncated distance transform. Disabling a
/// sensor zeroes that branch's input.
template <class T>
class DeskLaneNet {
 public:
  DeskLaneNet() {
    lidar1_.configure("lane.lidar1", 3, 16, 3);
    lidar2_.configure("lane.lidar2", 16, 16, 3);
    cam1_.configure("lane.cam1", 3, 16, 3);
    cam2_.configure("lane.cam2", 16, 16, 3);
    trunk1_.configure("lane.trunk1", 32, 16, 3);
    trunk2_.configure("lane.trunk2", 16, 16, 3);
    trunk3_.configure("lane.trunk3", 16, 1, 3);
  }

  void init(uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x2545f4914f6cdd1dULL);
    for (auto* l : layers()) l->init(rng);
  }

  ad::Tensor<T> forward(ad::Tape<T>& tape, ad::Tensor<T> lidar_bev, ad::Tensor<T> camera_bev,
                        BoundParams<T>* bound, bool train) {
    auto lh = bind_conv(tape, lidar1_, lidar_bev, bound, train, true);
    lh = bind_conv(tape, lidar2_, lh, bound, train, true);
    auto ch = bind_conv(tape, cam1_, camera_bev, bound, train, true);
    ch = bind_conv(tape, cam2_, ch, bound, train, true);
    auto h = tape.concat_channels(lh, ch);
    h = bind_conv(tape, trunk1_, h, bound, train, true);
    h = bind_conv(tape, trunk2_, h, bound, train, true);
    return bind_conv(tape, trunk3_, h, bound, train, false);
  }

  std::vector<Param<T>*> params() {
    std::vector<Param<T>*> out;
    for (auto* l : layers()) {
      out.push_back(&l->w);
      out.push_back(&l->b);
    }
    return out;
  }

 private:
  std::vector<ConvLayer<T>*> layers() {
    return {&lidar1_, &lidar2_, &cam1_, &cam2_, &trunk1_, &trunk2_, &trunk3_};
  }
  ConvLayer<T> lidar1_, lidar2_, cam1_, cam2_, trunk1_, trunk2_, trunk3_;
};

// ---------------------------------------------------------------------------
// Losses. Sums over all cells (not means); lambda keeps its paper value
// because both terms scale together with the cell count.
// ---------------------------------------------------------------------------

template <class T>
ad::Tensor<T> lane_loss(ad::Tape<T>& tape, ad::Tensor<T> pred, ad::Tensor<T> target) {
  if (!(tape.shape_of(pred) == tape.shape_of(target)))
    throw std::invalid_argument("lane_loss: shape mismatch");
  auto diff = tape.sub(target, pred);
  return tape.sum(tape.mul(diff, diff));
}

template <class T>
ad::Tensor<T> ground_loss(ad::Tape<T>& tape, ad::Tensor<T> pred, ad::Tensor<T> gt) {
  if (!(tape.shape_of(pred) == tape.shape_of(gt)))
    throw std::invalid_argument("ground_loss: shape mismatch");
  return tape.sum(tape.abs(tape.sub(gt, pred)));
}

template <class T>
ad::Tensor<T> total_loss(ad::Tape<T>& tape, ad::Tensor<T> lane, ad::Tensor<T> gnd, T lambda) {
  if (lambda < T(0)) throw std::invalid_argument("total_loss: lambda must be >= 0");
  return tape.add(lane, tape.scale(gnd, lambda));
}

// ---------------------------------------------------------------------------
// Full forward pass on one tape.
// ---------------------------------------------------------------------------

template <class T>
struct PipelineResult {
  ad::Tensor<T> ground;  // (1, rows, cols), meters
  ad::Tensor<T> dt;      // (1, rows, cols), inverted truncated DT
  MaskGrid warp_valid;
  BoundParams<T> bound;
};

template <class T>
std::vector<T> bev_input_values(const LidarBev& bev) {
  const size_t plane = bev.grid.data.size() / 3;
  std::vector<T> v(bev.grid.data.size());
  for (size_t k = 0; k < plane; ++k) {
    v[k] = static_cast<T>(bev.grid.data[k] * kHeightInputScale);
    v[plane + k] = static_cast<T>(bev.grid.data[plane + k]);
    v[2 * plane + k] = static_cast<T>(bev.grid.data[2 * plane + k] * kHeightInputScale);
  }
  return v;
}

/// ground = F_z(bev); camera branch input = backproject(image, ground);
/// dt = lane net(bev, warped camera) under the sensor mode. Everything lives
/// on one tape, so backward reaches both nets through the warp.
/// `ground_override`: when set, the warp uses this fixed height grid instead
/// of the prediction (the ground net still runs and is still supervised).
template <class T>
PipelineResult<T> forward_pipeline(ad::Tape<T>& tape, const LidarBev& bev, const Image& image,
                                   const CameraModel& cam, const GridSpec& spec,
                                   DeskGroundNet<T>& ground_net, DeskLaneNet<T>& lane_net,
                                   SensorMode mode, bool train = false,
                                   bool image_requires_grad = false,
                                   const Grid2<float>* ground_override = nullptr) {
  if (bev.spec.rows != spec.rows || bev.spec.cols != spec.cols)
    throw std::invalid_argument("forward_pipeline: BEV does not match the grid spec");

  PipelineResult<T> result;
  const auto bev_vals = bev_input_values<T>(bev);
  const auto bev_in = tape.leaf(ad::Shape::chw(3, spec.rows, spec.cols),
                                std::span<const T>(bev_vals), false);

  result.ground = ground_net.forward(tape, bev_in, &result.bound, train);

  ad::Tensor<T> camera_in;
  if (mode == SensorMode::kLidar) {
    camera_in = tape.zeros(ad::Shape::chw(3, spec.rows, spec.cols), false);
    result.warp_valid = MaskGrid(spec.rows, spec.cols, 1);
  } else {
    if (image.channels != 3 || image.rows != cam.height || image.cols != cam.width)
      throw std::invalid_argument("forward_pipeline: image does not match the camera model");
    std::vector<T> img_vals(image.data.size());
    for (size_t k = 0; k < img_vals.size(); ++k) img_vals[k] = static_cast<T>(image.data[k]);
    const auto img_in = tape.leaf(ad::Shape::chw(3, cam.height, cam.width),
                                  std::span<const T>(img_vals), image_requires_grad);
    ad::Tensor<T> warp_height = result.ground;
    if (ground_override) {
      std::vector<T> h(ground_override->data.size());
      for (size_t k = 0; k < h.size(); ++k) h[k] = static_cast<T>(ground_override->data[k]);
      warp_height = tape.leaf(ad::Shape::chw(1, spec.rows, spec.cols), std::span<const T>(h), false);
    }
    auto [warped, valid] = backproject_op(tape, img_in, warp_height, cam, spec);
    camera_in = warped;
    result.warp_valid = std::move(valid);
  }

  ad::Tensor<T> lidar_in = bev_in;
  if (mode == SensorMode::kCamera)
    lidar_in = tape.zeros(ad::Shape::chw(3, spec.rows, spec.cols), false);

  result.dt = lane_net.forward(tape, lidar_in, camera_in, &result.bound, train);
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoints: one named tensor blob per parameter.
// ---------------------------------------------------------------------------

template <class T>
io::NamedBlobs checkpoint_blobs(DeskGroundNet<T>& ground_net, DeskLaneNet<T>& lane_net) {
  io::NamedBlobs blobs;
  auto dump = [&blobs](Param<T>* p) {
    std::vector<float> v(p->value.begin(), p->value.end());
    std::vector<uint64_t> dims;
    for (int i = 0; i < p->shape.rank; ++i) dims.push_back(p->shape.dim[i]);
    if (dims.empty()) dims.push_back(1);
    blobs.emplace_back(p->name, io::TensorBlob::from_vector(v, dims));
  };
  for (auto* p : ground_net.params()) dump(p);
  for (auto* p : lane_net.params()) dump(p);
  return blobs;
}

template <class T>
void load_checkpoint_blobs(const io::NamedBlobs& blobs, DeskGroundNet<T>& ground_net,
                           DeskLaneNet<T>& lane_net) {
  auto find = [&blobs](const std::string& name) -> const io::TensorBlob& {
    for (const auto& [n, b] : blobs)
      if (n == name) return b;
    throw io::IoError("checkpoint is missing parameter '" + name + "'");
  };
  auto fill = [&find](Param<T>* p) {
    const std::vector<float> v = find(p->name).to_f32();
    if (v.size() != p->value.size())
      throw io::IoError("checkpoint parameter '" + p->name + "' has the wrong size");
    for (size_t k = 0; k < v.size(); ++k) p->value[k] = static_cast<T>(v[k]);
  };
  for (auto* p : ground_net.params()) fill(p);
  for (auto* p : lane_net.params()) fill(p);
}

}  // namespace lanedet
