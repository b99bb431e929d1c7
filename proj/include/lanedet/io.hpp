#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "lanedet/geometry.hpp"
#include "lanedet/grid.hpp"

namespace lanedet::io {

/// Raised on any file that cannot be read, written, or parsed.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Key/value text documents. One key per line, values separated by spaces,
// '.' decimal separator regardless of locale.
// ---------------------------------------------------------------------------

using KvDoc = std::vector<std::pair<std::string, std::vector<double>>>;

KvDoc read_kv(const std::filesystem::path& path);
void write_kv(const std::filesystem::path& path, const KvDoc& doc);

/// Calibration document: fx, fy, cx, cy, width, height, R (9 row-major), t (3).
CameraModel read_calibration(const std::filesystem::path& path);
void write_calibration(const std::filesystem::path& path, const CameraModel& cam);

/// Pose document: R (9 row-major), t (3).
Pose read_pose(const std::filesystem::path& path);
void write_pose(const std::filesystem::path& path, const Pose& pose);

// ---------------------------------------------------------------------------
// Tensor blobs: magic "TNSR", dtype u8 (0=f32, 1=f64, 2=u8), rank u8,
// dims as u64 each, then a little-endian payload.
// ---------------------------------------------------------------------------

enum class BlobType : uint8_t { kF32 = 0, kF64 = 1, kU8 = 2 };

struct TensorBlob {
  BlobType dtype = BlobType::kF32;
  std::vector<uint64_t> dims;
  std::vector<uint8_t> payload;

  uint64_t numel() const;
  size_t dtype_size() const;

  static TensorBlob from_grid2(const Grid2<float>& g);
  static TensorBlob from_grid2(const Grid2<double>& g);
  static TensorBlob from_grid3(const Grid3<float>& g);
  static TensorBlob from_vector(const std::vector<float>& v,
                                const std::vector<uint64_t>& dims);
  Grid2<float> to_grid2_f32() const;
  Grid2<double> to_grid2_f64() const;
  Grid3<float> to_grid3_f32() const;
  std::vector<float> to_f32() const;
};

void write_blob(const std::filesystem::path& path, const TensorBlob& blob);
TensorBlob read_blob(const std::filesystem::path& path);

/// Container of named blobs (checkpoints, accumulator snapshots): magic
/// "TNSB", u64 entry count, then per entry u32 name length, name bytes, and
/// the blob in the format above.
using NamedBlobs = std::vector<std::pair<std::string, TensorBlob>>;

void write_blob_container(const std::filesystem::path& path, const NamedBlobs& blobs);
NamedBlobs read_blob_container(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// PNG images. Images are planar float (c, h, w) in [0, 1]; files are 8-bit
// RGB (or gray for single-channel writes).
// ---------------------------------------------------------------------------

void write_png(const std::filesystem::path& path, const Image& image);
Image read_png(const std::filesystem::path& path);

}  // namespace lanedet::io
