#include "lanedet/gradcheck.hpp"

#include <cmath>
#include <functional>
#include <random>

#include "lanedet/autodiff.hpp"
#include "lanedet/geometry.hpp"
#include "lanedet/grid.hpp"
#include "lanedet/warp.hpp"

namespace lanedet {

namespace {

template <class T>
struct OpCase {
  std::string name;
  std::vector<ad::Shape> in_shapes;
  std::function<ad::Tensor<T>(ad::Tape<T>&, std::vector<ad::Tensor<T>>&)> build;
  double input_margin = 0.0;  // keep |x| above this (relu / abs kinks)
};

template <class T>
std::vector<T> random_values(int64_t n, std::mt19937_64& rng, double margin) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<T> v(n);
  for (auto& x : v) {
    double val = u(rng);
    if (std::abs(val) < margin) val = val < 0.0 ? val - margin : val + margin;
    x = static_cast<T>(val);
  }
  return v;
}

/// One dot-product test: <u, J delta> by central differences against
/// <VJP(u), delta> from the tape.
template <class T>
double dot_product_error(const OpCase<T>& op, uint64_t seed, double h) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<T>> inputs, deltas;
  for (const auto& shape : op.in_shapes) {
    inputs.push_back(random_values<T>(shape.numel(), rng, op.input_margin));
    deltas.push_back(random_values<T>(shape.numel(), rng, 0.0));
  }

  auto run = [&](double scale) {
    ad::Tape<T> tape;
    std::vector<ad::Tensor<T>> leaves;
    for (size_t i = 0; i < inputs.size(); ++i) {
      std::vector<T> x = inputs[i];
      for (size_t k = 0; k < x.size(); ++k)
        x[k] = static_cast<T>(x[k] + scale * static_cast<double>(deltas[i][k]));
      leaves.push_back(tape.leaf(op.in_shapes[i], std::span<const T>(x), false));
    }
    auto out = op.build(tape, leaves);
    std::vector<double> v;
    for (T x : out.value()) v.push_back(static_cast<double>(x));
    return v;
  };

  // Forward at the base point with gradients on.
  ad::Tape<T> tape;
  std::vector<ad::Tensor<T>> leaves;
  for (size_t i = 0; i < inputs.size(); ++i)
    leaves.push_back(tape.leaf(op.in_shapes[i], std::span<const T>(inputs[i]), true));
  auto y = op.build(tape, leaves);

  const auto& yshape = tape.shape_of(y);
  std::mt19937_64 urng(seed ^ 0x5851f42d4c957f2dULL);
  std::vector<T> cot = random_values<T>(yshape.numel(), urng, 0.0);
  auto u_leaf = tape.leaf(yshape, std::span<const T>(cot), false);
  auto loss = tape.sum(tape.mul(y, u_leaf));
  tape.backward(loss);

  double vjp_dot = 0.0;
  for (size_t i = 0; i < leaves.size(); ++i) {
    const auto g = tape.grad_of(leaves[i]);
    for (size_t k = 0; k < g.size(); ++k)
      vjp_dot += static_cast<double>(g[k]) * static_cast<double>(deltas[i][k]);
  }

  const auto y_plus = run(h);
  const auto y_minus = run(-h);
  double fd_dot = 0.0;
  for (size_t k = 0; k < y_plus.size(); ++k)
    fd_dot += (y_plus[k] - y_minus[k]) / (2.0 * h) * static_cast<double>(cot[k]);

  const double denom = std::max({std::abs(fd_dot), std::abs(vjp_dot), 1e-10});
  return std::abs(fd_dot - vjp_dot) / denom;
}

template <class T>
std::vector<OpCase<T>> op_cases() {
  using Tn = ad::Tensor<T>;
  using Tp = ad::Tape<T>;
  std::vector<OpCase<T>> cases;
  const auto chw = ad::Shape::chw(3, 10, 11);
  cases.push_back({"add", {chw, chw},
                   [](Tp& t, std::vector<Tn>& in) { return t.add(in[0], in[1]); }, 0.0});
  cases.push_back({"sub", {chw, chw},
                   [](Tp& t, std::vector<Tn>& in) { return t.sub(in[0], in[1]); }, 0.0});
  cases.push_back({"mul", {chw, chw},
                   [](Tp& t, std::vector<Tn>& in) { return t.mul(in[0], in[1]); }, 0.0});
  cases.push_back({"scale", {chw},
                   [](Tp& t, std::vector<Tn>& in) { return t.scale(in[0], T(-2.5)); }, 0.0});
  cases.push_back({"relu", {chw},
                   [](Tp& t, std::vector<Tn>& in) { return t.relu(in[0]); }, 0.05});
  cases.push_back({"abs", {chw},
                   [](Tp& t, std::vector<Tn>& in) { return t.abs(in[0]); }, 0.05});
  cases.push_back({"sum", {chw},
                   [](Tp& t, std::vector<Tn>& in) { return t.sum(in[0]); }, 0.0});
  cases.push_back({"concat_channels", {ad::Shape::chw(2, 6, 7), ad::Shape::chw(3, 6, 7)},
                   [](Tp& t, std::vector<Tn>& in) { return t.concat_channels(in[0], in[1]); },
                   0.0});
  cases.push_back({"conv2d_k1s1p0",
                   {ad::Shape::chw(3, 8, 8), ad::Shape::conv_w(4, 3, 1), ad::Shape::vec(4)},
                   [](Tp& t, std::vector<Tn>& in) { return t.conv2d(in[0], in[1], in[2], 1, 0); },
                   0.0});
  cases.push_back({"conv2d_k3s1p1",
                   {ad::Shape::chw(3, 9, 10), ad::Shape::conv_w(4, 3, 3), ad::Shape::vec(4)},
                   [](Tp& t, std::vector<Tn>& in) { return t.conv2d(in[0], in[1], in[2], 1, 1); },
                   0.0});
  cases.push_back({"conv2d_k3s2p1",
                   {ad::Shape::chw(2, 11, 9), ad::Shape::conv_w(3, 2, 3), ad::Shape::vec(3)},
                   [](Tp& t, std::vector<Tn>& in) { return t.conv2d(in[0], in[1], in[2], 2, 1); },
                   0.0});
  cases.push_back({"conv2d_k5s1p2",
                   {ad::Shape::chw(2, 12, 12), ad::Shape::conv_w(2, 2, 5), ad::Shape::vec(2)},
                   [](Tp& t, std::vector<Tn>& in) { return t.conv2d(in[0], in[1], in[2], 1, 2); },
                   0.0});
  cases.push_back({"avg_pool_k2s2", {ad::Shape::chw(3, 12, 10)},
                   [](Tp& t, std::vector<Tn>& in) { return t.avg_pool(in[0], 2, 2); }, 0.0});
  cases.push_back({"avg_pool_k3s3", {ad::Shape::chw(2, 15, 15)},
                   [](Tp& t, std::vector<Tn>& in) { return t.avg_pool(in[0], 3, 3); }, 0.0});
  cases.push_back({"bilinear_upsample_2", {ad::Shape::chw(2, 7, 9)},
                   [](Tp& t, std::vector<Tn>& in) { return t.bilinear_upsample(in[0], 2); }, 0.0});
  cases.push_back({"bilinear_resize_down", {ad::Shape::chw(2, 12, 14)},
                   [](Tp& t, std::vector<Tn>& in) { return t.bilinear_resize(in[0], 5, 6); },
                   0.0});
  cases.push_back({"bilinear_resize_up_odd", {ad::Shape::chw(1, 4, 4)},
                   [](Tp& t, std::vector<Tn>& in) { return t.bilinear_resize(in[0], 13, 7); },
                   0.0});
  return cases;
}

// ---------------------------------------------------------------------------
// Warp checks. A nadir camera above the grid keeps every cell's projection
// inside the image; ground directions are zeroed wherever the saved sample
// sits within 0.02 px of the bilinear lattice, because the VJP uses the
// right-continuous subgradient exactly at those kinks.
// ---------------------------------------------------------------------------

CameraModel nadir_camera() {
  CameraModel cam;
  cam.fx = cam.fy = 24.0;
  cam.cx = cam.cy = 32.0;
  cam.width = cam.height = 64;
  Eigen::Matrix3d r;
  r << 0.0, -1.0, 0.0,
      -1.0, 0.0, 0.0,
       0.0, 0.0, -1.0;
  cam.extrinsics.rotation = r;
  const Eigen::Vector3d center(24.0, 0.0, 20.0);
  cam.extrinsics.translation = -(r * center);
  return cam;
}

template <class T>
double warp_dot_error(uint64_t seed, double h, bool perturb_image, bool perturb_ground) {
  std::mt19937_64 rng(seed);
  const CameraModel cam = nadir_camera();
  const GridSpec spec = GridSpec::standard(24, 24, 2.0);

  Grid3<T> image(3, cam.height, cam.width);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (auto& v : image.data) v = static_cast<T>(u01(rng));
  Grid2<T> ground(spec.rows, spec.cols);
  for (auto& v : ground.data) v = static_cast<T>(0.5 * u01(rng));

  WarpState<T> state;
  const WarpResult<T> base = backproject(image, ground, cam, spec, &state);

  std::vector<double> dimg(image.data.size(), 0.0), dgnd(ground.data.size(), 0.0);
  std::uniform_real_distribution<double> u11(-1.0, 1.0);
  if (perturb_image)
    for (auto& v : dimg) v = u11(rng);
  if (perturb_ground) {
    for (size_t k = 0; k < dgnd.size(); ++k) {
      const double margin = 0.02;
      const bool safe = state.valid[k] && state.wx[k] > margin && state.wx[k] < 1.0 - margin &&
                        state.wy[k] > margin && state.wy[k] < 1.0 - margin;
      dgnd[k] = safe ? u11(rng) : 0.0;
    }
  }
  std::vector<double> cot(base.bev_image.data.size());
  for (auto& v : cot) v = u11(rng);

  Grid3<T> grad_image(3, cam.height, cam.width, T(0));
  Grid2<T> grad_ground(spec.rows, spec.cols, T(0));
  Grid3<T> upstream(3, spec.rows, spec.cols);
  for (size_t k = 0; k < cot.size(); ++k) upstream.data[k] = static_cast<T>(cot[k]);
  backproject_vjp(upstream, state, image, grad_image, grad_ground);

  double vjp_dot = 0.0;
  for (size_t k = 0; k < dimg.size(); ++k)
    vjp_dot += static_cast<double>(grad_image.data[k]) * dimg[k];
  for (size_t k = 0; k < dgnd.size(); ++k)
    vjp_dot += static_cast<double>(grad_ground.data[k]) * dgnd[k];

  auto shifted = [&](double scale) {
    Grid3<T> img = image;
    Grid2<T> gnd = ground;
    for (size_t k = 0; k < img.data.size(); ++k)
      img.data[k] = static_cast<T>(img.data[k] + scale * dimg[k]);
    for (size_t k = 0; k < gnd.data.size(); ++k)
      gnd.data[k] = static_cast<T>(gnd.data[k] + scale * dgnd[k]);
    return backproject(img, gnd, cam, spec);
  };
  const WarpResult<T> plus = shifted(h);
  const WarpResult<T> minus = shifted(-h);
  double fd_dot = 0.0;
  for (size_t k = 0; k < cot.size(); ++k)
    fd_dot += (static_cast<double>(plus.bev_image.data[k]) - minus.bev_image.data[k]) /
              (2.0 * h) * cot[k];

  const double denom = std::max({std::abs(fd_dot), std::abs(vjp_dot), 1e-10});
  return std::abs(fd_dot - vjp_dot) / denom;
}

template <class T>
void run_precision(std::vector<GradCheckEntry>& entries, uint64_t seed, double h, double tol,
                   const char* suffix) {
  for (const auto& op : op_cases<T>()) {
    GradCheckEntry e;
    e.op = op.name + suffix;
    e.tolerance = tol;
    for (int rep = 0; rep < 4; ++rep)
      e.max_rel_err = std::max(e.max_rel_err, dot_product_error<T>(op, seed + rep * 977, h));
    e.pass = e.max_rel_err <= tol;
    entries.push_back(e);
  }
  const struct {
    const char* name;
    bool img, gnd;
  } warp_cases[] = {{"backproject_image", true, false},
                    {"backproject_ground", false, true},
                    {"backproject_joint", true, true}};
  for (const auto& wc : warp_cases) {
    GradCheckEntry e;
    e.op = std::string(wc.name) + suffix;
    e.tolerance = tol;
    for (int rep = 0; rep < 4; ++rep)
      e.max_rel_err =
          std::max(e.max_rel_err, warp_dot_error<T>(seed + rep * 1409, h, wc.img, wc.gnd));
    e.pass = e.max_rel_err <= tol;
    entries.push_back(e);
  }
}

}  // namespace

std::vector<GradCheckEntry> run_gradcheck(uint64_t seed) {
  std::vector<GradCheckEntry> entries;
  run_precision<float>(entries, seed, 1e-2, 1e-3, " (f32)");
  run_precision<double>(entries, seed, 1e-5, 1e-6, " (f64)");
  return entries;
}

}  // namespace lanedet
