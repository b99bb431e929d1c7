#include "lanedet/sweeps.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <tuple>

#include "lanedet/io.hpp"

namespace lanedet {

PointCloud compensate_ego(const PointCloud& sweep, const Pose& pose_sweep, const Pose& pose_ref) {
  const Pose t = compose(pose_ref.inverse(), pose_sweep);
  PointCloud out;
  out.points.reserve(sweep.points.size());
  out.frame = "vehicle";
  out.timestamp = sweep.timestamp;
  for (const LidarPoint& p : sweep.points) {
    const Eigen::Vector3d q = t.apply({p.x, p.y, p.z});
    out.points.push_back({q.x(), q.y(), q.z(), p.intensity});
  }
  return out;
}

PointCloud aggregate_sweeps(std::span<const PointCloud> sweeps, std::span<const Pose> poses) {
  if (sweeps.empty()) throw std::invalid_argument("aggregate_sweeps: no sweeps");
  if (sweeps.size() != poses.size())
    throw std::invalid_argument("aggregate_sweeps: sweeps/poses length mismatch");
  const Pose& ref = poses.back();
  PointCloud out;
  size_t total = 0;
  for (const auto& s : sweeps) total += s.points.size();
  out.points.reserve(total);
  out.timestamp = sweeps.back().timestamp;
  for (size_t i = 0; i < sweeps.size(); ++i) {
    PointCloud moved = compensate_ego(sweeps[i], poses[i], ref);
    out.points.insert(out.points.end(), moved.points.begin(), moved.points.end());
  }
  return out;
}

namespace {

// Order-independent preference between two points competing for the same
// cell slot: larger (want_max) or smaller z wins; exact z ties fall back to
// the smallest (x, y, intensity) tuple.
bool beats(const LidarPoint& a, const LidarPoint& b, bool want_max) {
  if (a.z != b.z) return want_max ? a.z > b.z : a.z < b.z;
  return std::tie(a.x, a.y, a.intensity) < std::tie(b.x, b.y, b.intensity);
}

}  // namespace

LidarBev rasterize(const PointCloud& cloud, const GridSpec& spec, float fill,
                   BevEncoding encoding) {
  spec.validate();
  LidarBev bev;
  bev.spec = spec;
  bev.fill = fill;
  bev.grid = Grid3<float>(3, spec.rows, spec.cols, fill);
  bev.mask = MaskGrid(spec.rows, spec.cols, 0);

  const size_t cells = bev.mask.size();
  std::vector<LidarPoint> top(cells);
  std::vector<LidarPoint> bottom(cells);
  std::vector<double> intensity_sum(encoding == BevEncoding::kMinMeanCount ? cells : 0, 0.0);
  std::vector<uint32_t> count(encoding == BevEncoding::kMinMeanCount ? cells : 0, 0);

  for (const LidarPoint& p : cloud.points) {
    const auto cell = spec.point_to_cell(p.x, p.y);
    if (!cell) continue;
    const size_t idx = static_cast<size_t>(cell->first) * spec.cols + cell->second;
    if (!bev.mask.data[idx]) {
      bev.mask.data[idx] = 1;
      top[idx] = p;
      bottom[idx] = p;
    } else {
      if (beats(p, top[idx], true)) top[idx] = p;
      if (beats(p, bottom[idx], false)) bottom[idx] = p;
    }
    if (encoding == BevEncoding::kMinMeanCount) {
      intensity_sum[idx] += p.intensity;
      ++count[idx];
    }
  }

  float* c0 = bev.grid.channel(0);
  float* c1 = bev.grid.channel(1);
  float* c2 = bev.grid.channel(2);
  for (size_t idx = 0; idx < cells; ++idx) {
    if (!bev.mask.data[idx]) {
      c1[idx] = 0.0f;
      continue;
    }
    if (encoding == BevEncoding::kMaxMin) {
      c0[idx] = static_cast<float>(top[idx].z);
      c1[idx] = static_cast<float>(top[idx].intensity);
      c2[idx] = static_cast<float>(bottom[idx].z);
    } else {
      c0[idx] = static_cast<float>(bottom[idx].z);
      c1[idx] = static_cast<float>(intensity_sum[idx] / count[idx]);
      c2[idx] = static_cast<float>(count[idx]);
    }
  }
  return bev;
}

PointCloud rotate_points(const PointCloud& cloud, double yaw) {
  const double c = std::cos(yaw), s = std::sin(yaw);
  PointCloud out = cloud;
  for (LidarPoint& p : out.points) {
    const double x = p.x, y = p.y;
    p.x = c * x - s * y;
    p.y = s * x + c * y;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Photometric augmentation
// ---------------------------------------------------------------------------

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double d = mx - mn;
  v = mx;
  s = mx > 0.0 ? d / mx : 0.0;
  if (d <= 0.0) {
    h = 0.0;
    return;
  }
  if (mx == r)
    h = (g - b) / d;
  else if (mx == g)
    h = 2.0 + (b - r) / d;
  else
    h = 4.0 + (r - g) / d;
  h *= kTwoPi / 6.0;
  if (h < 0.0) h += kTwoPi;
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
  h = std::fmod(h, kTwoPi);
  if (h < 0.0) h += kTwoPi;
  const double hh = h * 6.0 / kTwoPi;
  const int i = std::min(5, static_cast<int>(hh));
  const double f = hh - i;
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - s * f);
  const double t = v * (1.0 - s * (1.0 - f));
  switch (i) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
}

}  // namespace

PhotometricDeltas draw_photometric_deltas(const PhotometricRanges& ranges, std::mt19937_64& rng) {
  auto draw = [&rng](double r) {
    return std::uniform_real_distribution<double>(-r, r)(rng);
  };
  PhotometricDeltas d;
  d.brightness = draw(ranges.brightness);
  d.contrast = draw(ranges.contrast);
  d.saturation = draw(ranges.saturation);
  d.hue = draw(ranges.hue);
  return d;
}

Image apply_photometric(const Image& image, const PhotometricDeltas& deltas) {
  if (image.channels != 3) throw std::invalid_argument("apply_photometric: expects RGB image");
  Image out = image;
  const size_t plane = static_cast<size_t>(image.rows) * image.cols;
  float* r_ch = out.channel(0);
  float* g_ch = out.channel(1);
  float* b_ch = out.channel(2);
  const bool touch_hsv = deltas.saturation != 0.0 || deltas.hue != 0.0;
  for (size_t i = 0; i < plane; ++i) {
    double r = r_ch[i] + deltas.brightness;
    double g = g_ch[i] + deltas.brightness;
    double b = b_ch[i] + deltas.brightness;
    const double k = 1.0 + deltas.contrast;
    r = 0.5 + k * (r - 0.5);
    g = 0.5 + k * (g - 0.5);
    b = 0.5 + k * (b - 0.5);
    if (touch_hsv) {
      r = std::clamp(r, 0.0, 1.0);
      g = std::clamp(g, 0.0, 1.0);
      b = std::clamp(b, 0.0, 1.0);
      double h, s, v;
      rgb_to_hsv(r, g, b, h, s, v);
      s = std::clamp(s * (1.0 + deltas.saturation), 0.0, 1.0);
      h += deltas.hue;
      hsv_to_rgb(h, s, v, r, g, b);
    }
    r_ch[i] = static_cast<float>(std::clamp(r, 0.0, 1.0));
    g_ch[i] = static_cast<float>(std::clamp(g, 0.0, 1.0));
    b_ch[i] = static_cast<float>(std::clamp(b, 0.0, 1.0));
  }
  return out;
}

Image photometric_augment(const Image& image, const PhotometricRanges& ranges, uint64_t seed) {
  std::mt19937_64 rng(seed);
  return apply_photometric(image, draw_photometric_deltas(ranges, rng));
}

// ---------------------------------------------------------------------------
// Point-cloud file
// ---------------------------------------------------------------------------

void write_point_cloud(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io::IoError("cannot write " + path.string());
  out.write("PCL1", 4);
  const uint64_t n = cloud.points.size();
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  std::vector<float> buf(4 * n);
  for (uint64_t i = 0; i < n; ++i) {
    const LidarPoint& p = cloud.points[i];
    buf[4 * i + 0] = static_cast<float>(p.x);
    buf[4 * i + 1] = static_cast<float>(p.y);
    buf[4 * i + 2] = static_cast<float>(p.z);
    buf[4 * i + 3] = static_cast<float>(p.intensity);
  }
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!out) throw io::IoError("write failed: " + path.string());
}

PointCloud read_point_cloud(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io::IoError("cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "PCL1", 4) != 0)
    throw io::IoError("not a point-cloud file: " + path.string());
  uint64_t n = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  if (!in) throw io::IoError("truncated point-cloud file: " + path.string());
  std::vector<float> buf(4 * n);
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!in) throw io::IoError("truncated point-cloud file: " + path.string());
  PointCloud cloud;
  cloud.points.resize(n);
  for (uint64_t i = 0; i < n; ++i)
    cloud.points[i] = {buf[4 * i + 0], buf[4 * i + 1], buf[4 * i + 2], buf[4 * i + 3]};
  return cloud;
}

}  // namespace lanedet
