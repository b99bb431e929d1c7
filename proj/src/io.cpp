#include "lanedet/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "binary file formats assume a little-endian host");

namespace lanedet::io {

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(std::string_view tok, const std::filesystem::path& path) {
  double v = 0.0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw IoError("bad numeric token '" + std::string(tok) + "' in " + path.string());
  return v;
}

template <class T>
void write_raw(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_raw(std::istream& is, const std::filesystem::path& path) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw IoError("truncated file: " + path.string());
  return v;
}

}  // namespace

KvDoc read_kv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  KvDoc doc;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::string_view rest(line);
    auto next_token = [&]() -> std::string_view {
      const size_t b = rest.find_first_not_of(" \t\r");
      if (b == std::string_view::npos) return {};
      const size_t e = rest.find_first_of(" \t\r", b);
      std::string_view tok = rest.substr(b, e == std::string_view::npos ? e : e - b);
      rest = e == std::string_view::npos ? std::string_view{} : rest.substr(e);
      return tok;
    };
    const std::string_view key = next_token();
    if (key.empty()) continue;
    std::vector<double> values;
    for (std::string_view tok = next_token(); !tok.empty(); tok = next_token())
      values.push_back(parse_double(tok, path));
    doc.emplace_back(std::string(key), std::move(values));
  }
  return doc;
}

void write_kv(const std::filesystem::path& path, const KvDoc& doc) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& [key, values] : doc) {
    out << key;
    for (double v : values) out << ' ' << format_double(v);
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

namespace {

const std::vector<double>& kv_require(const KvDoc& doc, const std::string& key, size_t n,
                                      const std::filesystem::path& path) {
  for (const auto& [k, v] : doc) {
    if (k == key) {
      if (v.size() != n)
        throw IoError("key '" + key + "' in " + path.string() + " needs " + std::to_string(n) +
                      " values, got " + std::to_string(v.size()));
      return v;
    }
  }
  throw IoError("missing key '" + key + "' in " + path.string());
}

Pose pose_from_kv(const KvDoc& doc, const std::filesystem::path& path) {
  const auto& r = kv_require(doc, "R", 9, path);
  const auto& t = kv_require(doc, "t", 3, path);
  Pose p;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) p.rotation(i, j) = r[i * 3 + j];
  p.translation = {t[0], t[1], t[2]};
  p.validate(1e-6);
  return p;
}

void pose_to_kv(KvDoc& doc, const Pose& p) {
  std::vector<double> r(9);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[i * 3 + j] = p.rotation(i, j);
  doc.emplace_back("R", std::move(r));
  doc.emplace_back("t", std::vector<double>{p.translation.x(), p.translation.y(), p.translation.z()});
}

}  // namespace

CameraModel read_calibration(const std::filesystem::path& path) {
  const KvDoc doc = read_kv(path);
  CameraModel cam;
  cam.fx = kv_require(doc, "fx", 1, path)[0];
  cam.fy = kv_require(doc, "fy", 1, path)[0];
  cam.cx = kv_require(doc, "cx", 1, path)[0];
  cam.cy = kv_require(doc, "cy", 1, path)[0];
  cam.width = static_cast<int>(std::lround(kv_require(doc, "width", 1, path)[0]));
  cam.height = static_cast<int>(std::lround(kv_require(doc, "height", 1, path)[0]));
  cam.extrinsics = pose_from_kv(doc, path);
  cam.validate();
  return cam;
}

void write_calibration(const std::filesystem::path& path, const CameraModel& cam) {
  KvDoc doc;
  doc.emplace_back("fx", std::vector<double>{cam.fx});
  doc.emplace_back("fy", std::vector<double>{cam.fy});
  doc.emplace_back("cx", std::vector<double>{cam.cx});
  doc.emplace_back("cy", std::vector<double>{cam.cy});
  doc.emplace_back("width", std::vector<double>{static_cast<double>(cam.width)});
  doc.emplace_back("height", std::vector<double>{static_cast<double>(cam.height)});
  pose_to_kv(doc, cam.extrinsics);
  write_kv(path, doc);
}

Pose read_pose(const std::filesystem::path& path) {
  return pose_from_kv(read_kv(path), path);
}

void write_pose(const std::filesystem::path& path, const Pose& pose) {
  KvDoc doc;
  pose_to_kv(doc, pose);
  write_kv(path, doc);
}

// ---------------------------------------------------------------------------
// Tensor blobs
// ---------------------------------------------------------------------------

uint64_t TensorBlob::numel() const {
  uint64_t n = 1;
  for (uint64_t d : dims) n *= d;
  return n;
}

size_t TensorBlob::dtype_size() const {
  switch (dtype) {
    case BlobType::kF32: return 4;
    case BlobType::kF64: return 8;
    case BlobType::kU8: return 1;
  }
  throw IoError("unknown blob dtype");
}

namespace {

template <class T>
TensorBlob make_blob(BlobType type, const T* data, size_t n, std::vector<uint64_t> dims) {
  TensorBlob b;
  b.dtype = type;
  b.dims = std::move(dims);
  b.payload.resize(n * sizeof(T));
  std::memcpy(b.payload.data(), data, b.payload.size());
  return b;
}

void check_blob(const TensorBlob& b, BlobType want, size_t rank) {
  if (b.dtype != want) throw IoError("blob dtype mismatch");
  if (b.dims.size() != rank) throw IoError("blob rank mismatch");
}

}  // namespace

TensorBlob TensorBlob::from_grid2(const Grid2<float>& g) {
  return make_blob(BlobType::kF32, g.data.data(), g.data.size(),
                   {static_cast<uint64_t>(g.rows), static_cast<uint64_t>(g.cols)});
}

TensorBlob TensorBlob::from_grid2(const Grid2<double>& g) {
  return make_blob(BlobType::kF64, g.data.data(), g.data.size(),
                   {static_cast<uint64_t>(g.rows), static_cast<uint64_t>(g.cols)});
}

TensorBlob TensorBlob::from_grid3(const Grid3<float>& g) {
  return make_blob(BlobType::kF32, g.data.data(), g.data.size(),
                   {static_cast<uint64_t>(g.channels), static_cast<uint64_t>(g.rows),
                    static_cast<uint64_t>(g.cols)});
}

TensorBlob TensorBlob::from_vector(const std::vector<float>& v,
                                   const std::vector<uint64_t>& dims) {
  uint64_t n = 1;
  for (uint64_t d : dims) n *= d;
  if (n != v.size()) throw IoError("blob dims do not match payload size");
  return make_blob(BlobType::kF32, v.data(), v.size(), dims);
}

Grid2<float> TensorBlob::to_grid2_f32() const {
  check_blob(*this, BlobType::kF32, 2);
  Grid2<float> g(static_cast<int>(dims[0]), static_cast<int>(dims[1]));
  std::memcpy(g.data.data(), payload.data(), payload.size());
  return g;
}

Grid2<double> TensorBlob::to_grid2_f64() const {
  check_blob(*this, BlobType::kF64, 2);
  Grid2<double> g(static_cast<int>(dims[0]), static_cast<int>(dims[1]));
  std::memcpy(g.data.data(), payload.data(), payload.size());
  return g;
}

Grid3<float> TensorBlob::to_grid3_f32() const {
  check_blob(*this, BlobType::kF32, 3);
  Grid3<float> g(static_cast<int>(dims[0]), static_cast<int>(dims[1]), static_cast<int>(dims[2]));
  std::memcpy(g.data.data(), payload.data(), payload.size());
  return g;
}

std::vector<float> TensorBlob::to_f32() const {
  if (dtype != BlobType::kF32) throw IoError("blob dtype mismatch");
  std::vector<float> v(numel());
  std::memcpy(v.data(), payload.data(), payload.size());
  return v;
}

namespace {

constexpr char kBlobMagic[4] = {'T', 'N', 'S', 'R'};
constexpr char kContainerMagic[4] = {'T', 'N', 'S', 'B'};

void write_blob_stream(std::ostream& os, const TensorBlob& blob) {
  os.write(kBlobMagic, 4);
  write_raw(os, static_cast<uint8_t>(blob.dtype));
  write_raw(os, static_cast<uint8_t>(blob.dims.size()));
  for (uint64_t d : blob.dims) write_raw(os, d);
  if (blob.payload.size() != blob.numel() * blob.dtype_size())
    throw IoError("blob payload length does not match dims");
  os.write(reinterpret_cast<const char*>(blob.payload.data()),
           static_cast<std::streamsize>(blob.payload.size()));
}

TensorBlob read_blob_stream(std::istream& is, const std::filesystem::path& path) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kBlobMagic, 4) != 0)
    throw IoError("not a tensor blob: " + path.string());
  TensorBlob b;
  const auto dtype = read_raw<uint8_t>(is, path);
  if (dtype > 2) throw IoError("unknown blob dtype in " + path.string());
  b.dtype = static_cast<BlobType>(dtype);
  const auto rank = read_raw<uint8_t>(is, path);
  b.dims.resize(rank);
  for (auto& d : b.dims) d = read_raw<uint64_t>(is, path);
  b.payload.resize(b.numel() * b.dtype_size());
  is.read(reinterpret_cast<char*>(b.payload.data()),
          static_cast<std::streamsize>(b.payload.size()));
  if (!is) throw IoError("truncated blob: " + path.string());
  return b;
}

}  // namespace

void write_blob(const std::filesystem::path& path, const TensorBlob& blob) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_blob_stream(out, blob);
  if (!out) throw IoError("write failed: " + path.string());
}

TensorBlob read_blob(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_blob_stream(in, path);
}

void write_blob_container(const std::filesystem::path& path, const NamedBlobs& blobs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kContainerMagic, 4);
  write_raw(out, static_cast<uint64_t>(blobs.size()));
  for (const auto& [name, blob] : blobs) {
    write_raw(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_blob_stream(out, blob);
  }
  if (!out) throw IoError("write failed: " + path.string());
}

NamedBlobs read_blob_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kContainerMagic, 4) != 0)
    throw IoError("not a blob container: " + path.string());
  const auto count = read_raw<uint64_t>(in, path);
  NamedBlobs blobs;
  blobs.reserve(count);
  for (uint64_t i = 0; i < count; ++i) {
    const auto name_len = read_raw<uint32_t>(in, path);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw IoError("truncated container: " + path.string());
    blobs.emplace_back(std::move(name), read_blob_stream(in, path));
  }
  return blobs;
}

// ---------------------------------------------------------------------------
// PNG
// ---------------------------------------------------------------------------

namespace {

uint8_t to_u8(float v) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<uint8_t>(std::lround(c * 255.0f));
}

struct PngFileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};

}  // namespace

void write_png(const std::filesystem::path& path, const Image& image) {
  if (image.channels != 1 && image.channels != 3)
    throw IoError("write_png expects 1 or 3 channels");
  std::unique_ptr<std::FILE, PngFileCloser> fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw IoError("cannot write " + path.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng write failed: " + path.string());
  }
  png_init_io(png, fp.get());
  const int color = image.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY;
  png_set_IHDR(png, info, image.cols, image.rows, 8, color, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<uint8_t> row(static_cast<size_t>(image.cols) * image.channels);
  for (int y = 0; y < image.rows; ++y) {
    for (int x = 0; x < image.cols; ++x)
      for (int c = 0; c < image.channels; ++c)
        row[static_cast<size_t>(x) * image.channels + c] = to_u8(image.at(c, y, x));
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image read_png(const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, PngFileCloser> fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) throw IoError("cannot open " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng read failed: " + path.string());
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  // Normalize anything to 8-bit RGB.
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);

  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  Image image(3, h, w);
  std::vector<uint8_t> row(static_cast<size_t>(w) * 3);
  for (int y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        image.at(c, y, x) = static_cast<float>(row[static_cast<size_t>(x) * 3 + c]) / 255.0f;
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

}  // namespace lanedet::io
