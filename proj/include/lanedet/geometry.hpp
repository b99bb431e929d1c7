#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <utility>

namespace lanedet {

// Vehicle frame convention: x forward, y left, z up.

/// Rigid SE(3) transform. Applies as p_out = rotation * p_in + translation.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Pose identity() { return {}; }
  static Pose from_yaw(double yaw, const Eigen::Vector3d& t = Eigen::Vector3d::Zero()) {
    Pose p;
    p.rotation = Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    p.translation = t;
    return p;
  }

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }

  Pose inverse() const {
    Pose inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(rotation.transpose() * translation);
    return inv;
  }

  /// R * R^T = I and det(R) = +1, both within tol.
  bool is_valid(double tol = 1e-9) const {
    const Eigen::Matrix3d err = rotation * rotation.transpose() - Eigen::Matrix3d::Identity();
    return err.cwiseAbs().maxCoeff() <= tol && std::abs(rotation.determinant() - 1.0) <= tol;
  }

  void validate(double tol = 1e-9) const {
    if (!is_valid(tol)) throw std::invalid_argument("Pose: rotation is not orthonormal with det +1");
  }
};

/// Result applies b first, then a.
inline Pose compose(const Pose& a, const Pose& b) {
  Pose out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

struct PixelProjection {
  double u = 0.0;  // pixel column, integer coordinates at pixel centers
  double v = 0.0;  // pixel row
  double depth = 0.0;  // z in the camera frame, meters
};

/// Rectified pinhole camera with fixed vehicle-to-camera extrinsics.
/// Camera frame: z along the optical axis, x right, y down.
struct CameraModel {
  double fx = 1.0, fy = 1.0;
  double cx = 0.0, cy = 0.0;
  int width = 1, height = 1;
  Pose extrinsics;  // vehicle -> camera

  // Rejects points on or behind the camera plane.
  static constexpr double kDepthEpsilon = 1e-6;

  void validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) throw std::invalid_argument("CameraModel: fx, fy must be > 0");
    if (width < 1 || height < 1) throw std::invalid_argument("CameraModel: width, height must be >= 1");
    extrinsics.validate();
  }

  /// Projects a vehicle-frame point. Empty when depth <= kDepthEpsilon.
  /// No image-bounds clipping here.
  std::optional<PixelProjection> project(const Eigen::Vector3d& p_vehicle) const {
    const Eigen::Vector3d pc = extrinsics.apply(p_vehicle);
    if (!(pc.z() > kDepthEpsilon)) return std::nullopt;
    return PixelProjection{fx * pc.x() / pc.z() + cx, fy * pc.y() / pc.z() + cy, pc.z()};
  }

  bool inside_image(double u, double v) const {
    return u >= 0.0 && u <= width - 1.0 && v >= 0.0 && v <= height - 1.0;
  }
};

inline std::optional<PixelProjection> project_point(const CameraModel& cam,
                                                    const Eigen::Vector3d& p_vehicle) {
  return cam.project(p_vehicle);
}

/// Fixed-geometry overhead raster. Row index i maps to vehicle x, column
/// index j to vehicle y. `origin` is the vehicle-frame (x, y) of the center
/// of cell (0, 0).
struct GridSpec {
  int rows = 0;
  int cols = 0;
  double resolution = 0.0;  // meters per cell
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();

  /// Grid ahead of the ego vehicle: x in [0, rows*res), y centered, ego at
  /// the rear-center edge. Defaults follow the 960 x 960, 5 cm layout.
  static GridSpec standard(int rows = 960, int cols = 960, double resolution = 0.05) {
    GridSpec s;
    s.rows = rows;
    s.cols = cols;
    s.resolution = resolution;
    s.origin = {resolution / 2.0, -cols * resolution / 2.0 + resolution / 2.0};
    return s;
  }

  void validate() const {
    if (!(resolution > 0.0)) throw std::invalid_argument("GridSpec: resolution must be > 0");
    if (rows < 1 || cols < 1) throw std::invalid_argument("GridSpec: rows, cols must be >= 1");
  }

  std::pair<double, double> cell_center(int i, int j) const {
    if (i < 0 || i >= rows || j < 0 || j >= cols)
      throw std::out_of_range("GridSpec::cell_center: index out of range");
    return {origin.x() + i * resolution, origin.y() + j * resolution};
  }

  /// Continuous cell coordinates; cell (i, j) spans [i - 0.5, i + 0.5).
  std::pair<double, double> to_cell_coords(double x, double y) const {
    return {(x - origin.x()) / resolution, (y - origin.y()) / resolution};
  }

  /// Nearest cell, or empty when the point falls outside the grid.
  std::optional<std::pair<int, int>> point_to_cell(double x, double y) const {
    const auto [ci, cj] = to_cell_coords(x, y);
    const int i = static_cast<int>(std::floor(ci + 0.5));
    const int j = static_cast<int>(std::floor(cj + 0.5));
    if (i < 0 || i >= rows || j < 0 || j >= cols) return std::nullopt;
    return std::make_pair(i, j);
  }

  double extent_x() const { return rows * resolution; }
  double extent_y() const { return cols * resolution; }

  bool operator==(const GridSpec& o) const {
    return rows == o.rows && cols == o.cols && resolution == o.resolution && origin == o.origin;
  }
};

}  // namespace lanedet
