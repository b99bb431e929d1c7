#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lanedet::ad {

/// Dense tensor shape, up to 4 axes. Rank 0 is a scalar, rank 3 is
/// channel-major (c, h, w), rank 4 is used for conv weights (co, ci, k, k).
struct Shape {
  std::array<int, 4> dim{1, 1, 1, 1};
  int rank = 0;

  static Shape scalar() { return {}; }
  static Shape vec(int n) { return {{n, 1, 1, 1}, 1}; }
  static Shape chw(int c, int h, int w) { return {{c, h, w, 1}, 3}; }
  static Shape conv_w(int co, int ci, int k) { return {{co, ci, k, k}, 4}; }

  int64_t numel() const {
    int64_t n = 1;
    for (int i = 0; i < rank; ++i) n *= dim[i];
    return n;
  }
  int c() const { return dim[0]; }
  int h() const { return dim[1]; }
  int w() const { return dim[2]; }

  bool operator==(const Shape& o) const {
    if (rank != o.rank) return false;
    for (int i = 0; i < rank; ++i)
      if (dim[i] != o.dim[i]) return false;
    return true;
  }
};

template <class T>
class Tape;

/// Lightweight handle into a Tape. Copying is free; the data lives on the
/// tape.
template <class T>
struct Tensor {
  Tape<T>* tape = nullptr;
  int id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
  const Shape& shape() const;
  std::span<const T> value() const;
  std::span<const T> grad() const;
  bool requires_grad() const;
};

/// Reverse-mode autodiff over dense arrays. Ops append topologically ordered
/// records; backward() walks them in exact reverse creation order, summing
/// each tensor's gradient over all of its uses. One tape per forward pass;
/// construction and backward are single-threaded.
template <class T>
class Tape {
 public:
  Tensor<T> leaf(const Shape& shape, std::span<const T> data, bool requires_grad) {
    if (static_cast<int64_t>(data.size()) != shape.numel())
      throw std::invalid_argument("leaf: data size does not match shape");
    const int id = new_node(shape, requires_grad);
    std::copy(data.begin(), data.end(), nodes_[id].value.begin());
    return {this, id};
  }

  Tensor<T> zeros(const Shape& shape, bool requires_grad = false) {
    return {this, new_node(shape, requires_grad)};
  }

  // -- elementwise -----------------------------------------------------------

  Tensor<T> add(Tensor<T> a, Tensor<T> b) {
    check_same_shape(a, b, "add");
    const int id = new_node(shape_of(a), needs(a) || needs(b));
    auto& out = nodes_[id].value;
    const auto av = value_of(a), bv = value_of(b);
    for (size_t k = 0; k < out.size(); ++k) out[k] = av[k] + bv[k];
    record(id, [this, a, b, id] {
      const auto g = grad_span(id);
      accumulate(a, [&](size_t k) { return g[k]; });
      accumulate(b, [&](size_t k) { return g[k]; });
    });
    return {this, id};
  }

  Tensor<T> sub(Tensor<T> a, Tensor<T> b) {
    check_same_shape(a, b, "sub");
    const int id = new_node(shape_of(a), needs(a) || needs(b));
    auto& out = nodes_[id].value;
    const auto av = value_of(a), bv = value_of(b);
    for (size_t k = 0; k < out.size(); ++k) out[k] = av[k] - bv[k];
    record(id, [this, a, b, id] {
      const auto g = grad_span(id);
      accumulate(a, [&](size_t k) { return g[k]; });
      accumulate(b, [&](size_t k) { return -g[k]; });
    });
    return {this, id};
  }

  Tensor<T> mul(Tensor<T> a, Tensor<T> b) {
    check_same_shape(a, b, "mul");
    const int id = new_node(shape_of(a), needs(a) || needs(b));
    auto& out = nodes_[id].value;
    const auto av = value_of(a), bv = value_of(b);
    for (size_t k = 0; k < out.size(); ++k) out[k] = av[k] * bv[k];
    record(id, [this, a, b, id] {
      const auto g = grad_span(id);
      const auto av = value_of(a), bv = value_of(b);
      accumulate(a, [&](size_t k) { return g[k] * bv[k]; });
      accumulate(b, [&](size_t k) { return g[k] * av[k]; });
    });
    return {this, id};
  }

  Tensor<T> scale(Tensor<T> a, T s) {
    const int id = new_node(shape_of(a), needs(a));
    auto& out = nodes_[id].value;
    const auto av = value_of(a);
    for (size_t k = 0; k < out.size(); ++k) out[k] = av[k] * s;
    record(id, [this, a, s, id] {
      const auto g = grad_span(id);
      accumulate(a, [&](size_t k) { return g[k] * s; });
    });
    return {this, id};
  }

  Tensor<T> relu(Tensor<T> a) {
    const int id = new_node(shape_of(a), needs(a));
    auto& out = nodes_[id].value;
    const auto av = value_of(a);
    for (size_t k = 0; k < out.size(); ++k) out[k] = av[k] > T(0) ? av[k] : T(0);
    record(id, [this, a, id] {
      const auto g = grad_span(id);
      const auto av = value_of(a);
      accumulate(a, [&](size_t k) { return av[k] > T(0) ? g[k] : T(0); });
    });
    return {this, id};
  }

  /// |x| with subgradient 0 at exact zero.
  Tensor<T> abs(Tensor<T> a) {
    const int id = new_node(shape_of(a), needs(a));
    auto& out = nodes_[id].value;
    const auto av = value_of(a);
    for (size_t k = 0; k < out.size(); ++k) out[k] = std::abs(av[k]);
    record(id, [this, a, id] {
      const auto g = grad_span(id);
      const auto av = value_of(a);
      accumulate(a, [&](size_t k) {
        if (av[k] > T(0)) return g[k];
        if (av[k] < T(0)) return -g[k];
        return T(0);
      });
    });
    return {this, id};
  }

  /// Scalar sum over all elements; accumulation runs in double.
  Tensor<T> sum(Tensor<T> a) {
    const int id = new_node(Shape::scalar(), needs(a));
    const auto av = value_of(a);
    double acc = 0.0;
    for (size_t k = 0; k < av.size(); ++k) acc += static_cast<double>(av[k]);
    nodes_[id].value[0] = static_cast<T>(acc);
    record(id, [this, a, id] {
      const T g = grad_span(id)[0];
      accumulate(a, [&](size_t) { return g; });
    });
    return {this, id};
  }

  // -- structural ------------------------------------------------------------

  Tensor<T> concat_channels(Tensor<T> a, Tensor<T> b) {
    const Shape& sa = shape_of(a);
    const Shape& sb = shape_of(b);
    if (sa.rank != 3 || sb.rank != 3 || sa.h() != sb.h() || sa.w() != sb.w())
      throw std::invalid_argument("concat_channels: need rank-3 tensors with equal h, w");
    const Shape out_shape = Shape::chw(sa.c() + sb.c(), sa.h(), sa.w());
    const int id = new_node(out_shape, needs(a) || needs(b));
    auto& out = nodes_[id].value;
    const auto av = value_of(a), bv = value_of(b);
    std::copy(av.begin(), av.end(), out.begin());
    std::copy(bv.begin(), bv.end(), out.begin() + av.size());
    record(id, [this, a, b, id] {
      const auto g = grad_span(id);
      const size_t na = value_of(a).size();
      accumulate(a, [&](size_t k) { return g[k]; });
      accumulate(b, [&](size_t k) { return g[na + k]; });
    });
    return {this, id};
  }

  // -- convolution and resampling ---------------------------------------------

  /// Cross-correlation with zero padding. weights: (co, ci, k, k) with k odd,
  /// bias: (co). Output h' = (h + 2 pad - k) / stride + 1.
  Tensor<T> conv2d(Tensor<T> x, Tensor<T> w, Tensor<T> b, int stride = 1, int pad = 0) {
    const Shape& sx = shape_of(x);
    const Shape& sw = shape_of(w);
    const Shape& sb = shape_of(b);
    if (sx.rank != 3 || sw.rank != 4 || sb.rank != 1)
      throw std::invalid_argument("conv2d: need input rank 3, weights rank 4, bias rank 1");
    const int ci = sx.c(), h = sx.h(), wd = sx.w();
    const int co = sw.dim[0], k = sw.dim[2];
    if (sw.dim[1] != ci || sw.dim[3] != k) throw std::invalid_argument("conv2d: weight shape mismatch");
    if (sb.dim[0] != co) throw std::invalid_argument("conv2d: bias shape mismatch");
    if (k % 2 == 0) throw std::invalid_argument("conv2d: kernel size must be odd");
    if (stride < 1) throw std::invalid_argument("conv2d: stride must be >= 1");
    const int ho = (h + 2 * pad - k) / stride + 1;
    const int wo = (wd + 2 * pad - k) / stride + 1;
    if (ho < 1 || wo < 1) throw std::invalid_argument("conv2d: output would be empty");

    const int id = new_node(Shape::chw(co, ho, wo), needs(x) || needs(w) || needs(b));
    conv2d_forward(value_of(x).data(), value_of(w).data(), value_of(b).data(),
                   nodes_[id].value.data(), ci, h, wd, co, k, stride, pad, ho, wo);
    record(id, [this, x, w, b, id, ci, h, wd, co, k, stride, pad, ho, wo] {
      const T* g = grad_span(id).data();
      if (needs(x))
        conv2d_grad_input(g, value_of(w).data(), grad_buffer(x).data(), ci, h, wd, co, k, stride,
                          pad, ho, wo);
      if (needs(w))
        conv2d_grad_weights(g, value_of(x).data(), grad_buffer(w).data(), ci, h, wd, co, k, stride,
                            pad, ho, wo);
      if (needs(b)) {
        T* gb = grad_buffer(b).data();
        for (int c = 0; c < co; ++c) {
          double acc = 0.0;
          const T* gc = g + static_cast<size_t>(c) * ho * wo;
          for (int i = 0; i < ho * wo; ++i) acc += static_cast<double>(gc[i]);
          gb[c] += static_cast<T>(acc);
        }
      }
    });
    return {this, id};
  }

  /// Mean over non-overlapping-or-strided k x k windows, no padding.
  Tensor<T> avg_pool(Tensor<T> x, int k, int stride) {
    const Shape& sx = shape_of(x);
    if (sx.rank != 3) throw std::invalid_argument("avg_pool: need rank-3 input");
    if (k < 1 || stride < 1) throw std::invalid_argument("avg_pool: bad kernel or stride");
    const int c = sx.c(), h = sx.h(), w = sx.w();
    const int ho = (h - k) / stride + 1;
    const int wo = (w - k) / stride + 1;
    if (ho < 1 || wo < 1) throw std::invalid_argument("avg_pool: output would be empty");
    const int id = new_node(Shape::chw(c, ho, wo), needs(x));
    const auto xv = value_of(x);
    auto& out = nodes_[id].value;
    const T inv = T(1) / static_cast<T>(k * k);
    for (int ch = 0; ch < c; ++ch) {
      const T* xp = xv.data() + static_cast<size_t>(ch) * h * w;
      T* op = out.data() + static_cast<size_t>(ch) * ho * wo;
      for (int oy = 0; oy < ho; ++oy) {
        for (int ox = 0; ox < wo; ++ox) {
          double acc = 0.0;
          for (int ky = 0; ky < k; ++ky) {
            const T* row = xp + static_cast<size_t>(oy * stride + ky) * w + ox * stride;
            for (int kx = 0; kx < k; ++kx) acc += static_cast<double>(row[kx]);
          }
          op[static_cast<size_t>(oy) * wo + ox] = static_cast<T>(acc) * inv;
        }
      }
    }
    record(id, [this, x, id, c, h, w, k, stride, ho, wo] {
      const auto g = grad_span(id);
      T* gx = grad_buffer(x).data();
      const T inv = T(1) / static_cast<T>(k * k);
      for (int ch = 0; ch < c; ++ch) {
        const T* gp = g.data() + static_cast<size_t>(ch) * ho * wo;
        T* gxp = gx + static_cast<size_t>(ch) * h * w;
        for (int oy = 0; oy < ho; ++oy)
          for (int ox = 0; ox < wo; ++ox) {
            const T gv = gp[static_cast<size_t>(oy) * wo + ox] * inv;
            for (int ky = 0; ky < k; ++ky) {
              T* row = gxp + static_cast<size_t>(oy * stride + ky) * w + ox * stride;
              for (int kx = 0; kx < k; ++kx) row[kx] += gv;
            }
          }
      }
    });
    return {this, id};
  }

  /// Bilinear resampling to an arbitrary size (half-pixel centers, edges
  /// clamped).
  Tensor<T> bilinear_resize(Tensor<T> x, int h_out, int w_out) {
    const Shape& sx = shape_of(x);
    if (sx.rank != 3) throw std::invalid_argument("bilinear_resize: need rank-3 input");
    if (h_out < 1 || w_out < 1) throw std::invalid_argument("bilinear_resize: bad output size");
    const int c = sx.c(), h = sx.h(), w = sx.w();
    const int id = new_node(Shape::chw(c, h_out, w_out), needs(x));

    // Precompute the 1D sampling lattice once per axis.
    std::vector<int> y0(h_out), x0(w_out);
    std::vector<T> fy(h_out), fx(w_out);
    fill_resize_lattice(h, h_out, y0, fy);
    fill_resize_lattice(w, w_out, x0, fx);

    const auto xv = value_of(x);
    auto& out = nodes_[id].value;
    for (int ch = 0; ch < c; ++ch) {
      const T* xp = xv.data() + static_cast<size_t>(ch) * h * w;
      T* op = out.data() + static_cast<size_t>(ch) * h_out * w_out;
      for (int oy = 0; oy < h_out; ++oy) {
        const int ya = y0[oy], yb = std::min(ya + 1, h - 1);
        const T wy = fy[oy];
        for (int ox = 0; ox < w_out; ++ox) {
          const int xa = x0[ox], xb = std::min(xa + 1, w - 1);
          const T wx = fx[ox];
          const T v00 = xp[static_cast<size_t>(ya) * w + xa];
          const T v01 = xp[static_cast<size_t>(ya) * w + xb];
          const T v10 = xp[static_cast<size_t>(yb) * w + xa];
          const T v11 = xp[static_cast<size_t>(yb) * w + xb];
          op[static_cast<size_t>(oy) * w_out + ox] =
              (T(1) - wy) * ((T(1) - wx) * v00 + wx * v01) + wy * ((T(1) - wx) * v10 + wx * v11);
        }
      }
    }
    record(id, [this, x, id, c, h, w, h_out, w_out, y0, x0, fy, fx] {
      const auto g = grad_span(id);
      T* gx = grad_buffer(x).data();
      for (int ch = 0; ch < c; ++ch) {
        const T* gp = g.data() + static_cast<size_t>(ch) * h_out * w_out;
        T* gxp = gx + static_cast<size_t>(ch) * h * w;
        for (int oy = 0; oy < h_out; ++oy) {
          const int ya = y0[oy], yb = std::min(ya + 1, h - 1);
          const T wy = fy[oy];
          for (int ox = 0; ox < w_out; ++ox) {
            const int xa = x0[ox], xb = std::min(xa + 1, w - 1);
            const T wx = fx[ox];
            const T gv = gp[static_cast<size_t>(oy) * w_out + ox];
            gxp[static_cast<size_t>(ya) * w + xa] += (T(1) - wy) * (T(1) - wx) * gv;
            gxp[static_cast<size_t>(ya) * w + xb] += (T(1) - wy) * wx * gv;
            gxp[static_cast<size_t>(yb) * w + xa] += wy * (T(1) - wx) * gv;
            gxp[static_cast<size_t>(yb) * w + xb] += wy * wx * gv;
          }
        }
      }
    });
    return {this, id};
  }

  Tensor<T> bilinear_upsample(Tensor<T> x, int factor) {
    if (factor < 1) throw std::invalid_argument("bilinear_upsample: factor must be >= 1");
    const Shape& sx = shape_of(x);
    return bilinear_resize(x, sx.h() * factor, sx.w() * factor);
  }

  // -- custom ops -------------------------------------------------------------

  using CustomVjp = std::function<void(std::span<const T> upstream, Tape<T>& tape)>;

  /// Appends an externally computed op (the camera-to-ground warp uses this).
  /// The vjp receives the upstream gradient and must add into the parents'
  /// gradients via grad_buffer().
  Tensor<T> custom(const Shape& shape, std::vector<T> value, std::vector<int> parents,
                   CustomVjp vjp) {
    if (static_cast<int64_t>(value.size()) != shape.numel())
      throw std::invalid_argument("custom: value size does not match shape");
    bool rg = false;
    for (int p : parents) rg = rg || nodes_.at(p).requires_grad;
    const int id = new_node(shape, rg);
    nodes_[id].value = std::move(value);
    record(id, [this, id, vjp = std::move(vjp)] { vjp(grad_span(id), *this); });
    return {this, id};
  }

  // -- backward ---------------------------------------------------------------

  /// Exact reverse-mode sweep from a scalar loss. Leaf gradients accumulate
  /// across calls (zero_grad() resets them); intermediate gradients are
  /// re-derived on every sweep.
  void backward(Tensor<T> loss) {
    if (loss.tape != this) throw std::invalid_argument("backward: tensor from another tape");
    if (shape_of(loss).numel() != 1 || shape_of(loss).rank != 0)
      throw std::invalid_argument("backward: loss must be scalar");
    for (auto& n : nodes_)
      if (!n.is_leaf) std::fill(n.grad.begin(), n.grad.end(), T(0));
    grad_buffer(loss)[0] += T(1);
    for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
      if (it->first <= loss.id && nodes_[it->first].requires_grad) it->second();
    }
  }

  void zero_grad() {
    for (auto& n : nodes_) std::fill(n.grad.begin(), n.grad.end(), T(0));
  }

  // -- access -----------------------------------------------------------------

  const Shape& shape_of(Tensor<T> t) const { return nodes_.at(t.id).shape; }
  std::span<const T> value_of(Tensor<T> t) const {
    const auto& v = nodes_.at(t.id).value;
    return {v.data(), v.size()};
  }
  std::span<const T> grad_of(Tensor<T> t) const {
    const auto& n = nodes_.at(t.id);
    if (n.grad.empty())
      throw std::logic_error("grad_of: gradient not materialized (requires_grad false or no backward yet)");
    return {n.grad.data(), n.grad.size()};
  }
  bool needs(Tensor<T> t) const { return nodes_.at(t.id).requires_grad; }

  /// Mutable gradient storage, materialized on demand. Only meaningful for
  /// requires_grad nodes; custom-op vjps use this to scatter into parents.
  std::vector<T>& grad_buffer(Tensor<T> t) { return grad_buffer_by_id(t.id); }

  size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad;  // empty until materialized
    bool requires_grad = false;
    bool is_leaf = true;  // cleared when an op record writes this node
  };

  std::vector<Node> nodes_;
  std::vector<std::pair<int, std::function<void()>>> records_;

  int new_node(const Shape& shape, bool requires_grad) {
    Node n;
    n.shape = shape;
    n.value.assign(static_cast<size_t>(shape.numel()), T(0));
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  void record(int id, std::function<void()> vjp) {
    nodes_[id].is_leaf = false;
    if (nodes_[id].requires_grad) records_.emplace_back(id, std::move(vjp));
  }

  std::vector<T>& grad_buffer_by_id(int id) {
    Node& n = nodes_.at(id);
    if (n.grad.empty()) n.grad.assign(n.value.size(), T(0));
    return n.grad;
  }

  std::span<const T> grad_span(int id) {
    auto& g = grad_buffer_by_id(id);
    return {g.data(), g.size()};
  }

  void check_same_shape(Tensor<T> a, Tensor<T> b, const char* op) const {
    if (a.tape != this || b.tape != this)
      throw std::invalid_argument(std::string(op) + ": tensor from another tape");
    if (!(shape_of(a) == shape_of(b)))
      throw std::invalid_argument(std::string(op) + ": shape mismatch");
  }

  template <class Fn>
  void accumulate(Tensor<T> t, Fn&& per_element) {
    if (!needs(t)) return;
    auto& g = grad_buffer(t);
    for (size_t k = 0; k < g.size(); ++k) g[k] += per_element(k);
  }

  static void fill_resize_lattice(int in, int out, std::vector<int>& i0, std::vector<T>& frac) {
    for (int o = 0; o < out; ++o) {
      double s = (o + 0.5) * static_cast<double>(in) / out - 0.5;
      s = std::clamp(s, 0.0, static_cast<double>(in - 1));
      const int a = static_cast<int>(std::floor(s));
      i0[o] = std::min(a, in - 1);
      frac[o] = static_cast<T>(s - i0[o]);
    }
  }

  // Forward: per output channel, accumulate scalar * shifted input rows.
  static void conv2d_forward(const T* x, const T* w, const T* b, T* out, int ci, int h, int wd,
                             int co, int k, int stride, int pad, int ho, int wo) {
    for (int c = 0; c < co; ++c) {
      T* op = out + static_cast<size_t>(c) * ho * wo;
      for (int i = 0; i < ho * wo; ++i) op[i] = b[c];
      for (int ic = 0; ic < ci; ++ic) {
        const T* xp = x + static_cast<size_t>(ic) * h * wd;
        const T* wp = w + (static_cast<size_t>(c) * ci + ic) * k * k;
        for (int ky = 0; ky < k; ++ky) {
          for (int kx = 0; kx < k; ++kx) {
            const T wv = wp[static_cast<size_t>(ky) * k + kx];
            if (wv == T(0)) continue;
            for (int oy = 0; oy < ho; ++oy) {
              const int iy = oy * stride - pad + ky;
              if (iy < 0 || iy >= h) continue;
              const T* xrow = xp + static_cast<size_t>(iy) * wd;
              T* orow = op + static_cast<size_t>(oy) * wo;
              if (stride == 1) {
                const int x_lo = std::max(0, pad - kx);
                const int x_hi = std::min(wo, wd + pad - kx);
                const T* xs = xrow + x_lo - pad + kx;
                for (int ox = x_lo; ox < x_hi; ++ox) orow[ox] += wv * xs[ox - x_lo];
              } else {
                for (int ox = 0; ox < wo; ++ox) {
                  const int ix = ox * stride - pad + kx;
                  if (ix >= 0 && ix < wd) orow[ox] += wv * xrow[ix];
                }
              }
            }
          }
        }
      }
    }
  }

  // Gather-style gradient kernels: every output element is written by exactly
  // one iteration, so the result does not depend on any parallel schedule.
  static void conv2d_grad_input(const T* g, const T* w, T* gx, int ci, int h, int wd, int co,
                                int k, int stride, int pad, int ho, int wo) {
    for (int ic = 0; ic < ci; ++ic) {
      T* gxp = gx + static_cast<size_t>(ic) * h * wd;
      for (int c = 0; c < co; ++c) {
        const T* gp = g + static_cast<size_t>(c) * ho * wo;
        const T* wp = w + (static_cast<size_t>(c) * ci + ic) * k * k;
        for (int ky = 0; ky < k; ++ky) {
          for (int kx = 0; kx < k; ++kx) {
            const T wv = wp[static_cast<size_t>(ky) * k + kx];
            if (wv == T(0)) continue;
            if (stride == 1) {
              for (int iy = 0; iy < h; ++iy) {
                const int oy = iy + pad - ky;
                if (oy < 0 || oy >= ho) continue;
                const T* grow = gp + static_cast<size_t>(oy) * wo;
                T* gxrow = gxp + static_cast<size_t>(iy) * wd;
                const int x_lo = std::max(0, kx - pad);
                const int x_hi = std::min(wd, wo + kx - pad);
                const T* gs = grow + x_lo + pad - kx;
                for (int ix = x_lo; ix < x_hi; ++ix) gxrow[ix] += wv * gs[ix - x_lo];
              }
            } else {
              for (int iy = 0; iy < h; ++iy) {
                const int ny = iy + pad - ky;
                if (ny < 0 || ny % stride != 0) continue;
                const int oy = ny / stride;
                if (oy >= ho) continue;
                const T* grow = gp + static_cast<size_t>(oy) * wo;
                T* gxrow = gxp + static_cast<size_t>(iy) * wd;
                for (int ix = 0; ix < wd; ++ix) {
                  const int nx = ix + pad - kx;
                  if (nx < 0 || nx % stride != 0) continue;
                  const int ox = nx / stride;
                  if (ox < wo) gxrow[ix] += wv * grow[ox];
                }
              }
            }
          }
        }
      }
    }
  }

  static void conv2d_grad_weights(const T* g, const T* x, T* gw, int ci, int h, int wd, int co,
                                  int k, int stride, int pad, int ho, int wo) {
    for (int c = 0; c < co; ++c) {
      const T* gp = g + static_cast<size_t>(c) * ho * wo;
      for (int ic = 0; ic < ci; ++ic) {
        const T* xp = x + static_cast<size_t>(ic) * h * wd;
        T* gwp = gw + (static_cast<size_t>(c) * ci + ic) * k * k;
        for (int ky = 0; ky < k; ++ky) {
          for (int kx = 0; kx < k; ++kx) {
            double acc = 0.0;
            for (int oy = 0; oy < ho; ++oy) {
              const int iy = oy * stride - pad + ky;
              if (iy < 0 || iy >= h) continue;
              const T* grow = gp + static_cast<size_t>(oy) * wo;
              const T* xrow = xp + static_cast<size_t>(iy) * wd;
              for (int ox = 0; ox < wo; ++ox) {
                const int ix = ox * stride - pad + kx;
                if (ix >= 0 && ix < wd) acc += static_cast<double>(grow[ox]) * xrow[ix];
              }
            }
            gwp[static_cast<size_t>(ky) * k + kx] += static_cast<T>(acc);
          }
        }
      }
    }
  }
};

template <class T>
const Shape& Tensor<T>::shape() const {
  return tape->shape_of(*this);
}
template <class T>
std::span<const T> Tensor<T>::value() const {
  return tape->value_of(*this);
}
template <class T>
std::span<const T> Tensor<T>::grad() const {
  return tape->grad_of(*this);
}
template <class T>
bool Tensor<T>::requires_grad() const {
  return tape->needs(*this);
}

// ---------------------------------------------------------------------------
// Adam optimizer (coupled L2 weight decay, bias-corrected moments). State is
// kept in double so the bias-corrected first step is exact to ~1e-12.
// ---------------------------------------------------------------------------

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
};

struct AdamState {
  std::vector<double> m, v;
  int64_t step = 0;

  void reset(size_t n) {
    m.assign(n, 0.0);
    v.assign(n, 0.0);
    step = 0;
  }
};

template <class T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamState& state,
               const AdamConfig& cfg) {
  if (params.size() != grads.size()) throw std::invalid_argument("adam_step: size mismatch");
  if (state.m.size() != params.size()) state.reset(params.size());
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (size_t i = 0; i < params.size(); ++i) {
    const double g = static_cast<double>(grads[i]) + cfg.weight_decay * params[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] = static_cast<T>(params[i] - cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps));
  }
}

/// Kaiming-normal fill for conv/linear weights.
template <class T>
void he_normal_init(std::span<T> data, int fan_in, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, std::sqrt(2.0 / std::max(1, fan_in)));
  for (auto& v : data) v = static_cast<T>(n(rng));
}

}  // namespace lanedet::ad
