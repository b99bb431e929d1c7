#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>

#include "lanedet/io.hpp"
#include "test_util.hpp"

using namespace lanedet;

namespace {

std::filesystem::path tmp(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("kv documents survive a round trip with full precision") {
  io::KvDoc doc;
  doc.emplace_back("alpha", std::vector<double>{1.0, -2.5, 3.141592653589793});
  doc.emplace_back("beta", std::vector<double>{1e-300, 1e300});
  const auto path = tmp("lanedet_test_kv.txt");
  io::write_kv(path, doc);
  const io::KvDoc back = io::read_kv(path);
  REQUIRE(back.size() == doc.size());
  for (size_t i = 0; i < doc.size(); ++i) {
    CHECK(back[i].first == doc[i].first);
    CHECK(back[i].second == doc[i].second);
  }
  std::filesystem::remove(path);
}

TEST_CASE("tensor blob round trip for all dtypes") {
  std::mt19937_64 rng(3);
  const auto g32 = test::random_grid2<float>(7, 5, rng, -2.0f, 2.0f);
  const auto g64 = test::random_grid2<double>(4, 9, rng, -2.0, 2.0);

  const auto path = tmp("lanedet_test_blob.tnsr");
  io::write_blob(path, io::TensorBlob::from_grid2(g32));
  CHECK(io::read_blob(path).to_grid2_f32() == g32);
  io::write_blob(path, io::TensorBlob::from_grid2(g64));
  CHECK(io::read_blob(path).to_grid2_f64() == g64);
  std::filesystem::remove(path);
}

TEST_CASE("blob payload length is validated") {
  io::TensorBlob blob;
  blob.dtype = io::BlobType::kF32;
  blob.dims = {4, 4};
  blob.payload.resize(3);  // wrong on purpose
  CHECK_THROWS_AS(io::write_blob(tmp("lanedet_test_bad.tnsr"), blob), io::IoError);
}

TEST_CASE("named blob container keeps order and content") {
  std::mt19937_64 rng(5);
  io::NamedBlobs blobs;
  blobs.emplace_back("net.conv1.w",
                     io::TensorBlob::from_grid2(test::random_grid2<float>(3, 3, rng)));
  blobs.emplace_back("net.conv1.b",
                     io::TensorBlob::from_grid2(test::random_grid2<float>(1, 16, rng)));
  const auto path = tmp("lanedet_test_container.ckpt");
  io::write_blob_container(path, blobs);
  const io::NamedBlobs back = io::read_blob_container(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].first == "net.conv1.w");
  CHECK(back[1].first == "net.conv1.b");
  CHECK(back[0].second.payload == blobs[0].second.payload);
  CHECK(back[1].second.payload == blobs[1].second.payload);
  std::filesystem::remove(path);
}

TEST_CASE("png round trip is exact at 8-bit resolution") {
  Image img(3, 6, 10);
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> u(0, 255);
  for (auto& v : img.data) v = static_cast<float>(u(rng)) / 255.0f;

  const auto path = tmp("lanedet_test_img.png");
  io::write_png(path, img);
  const Image back = io::read_png(path);
  REQUIRE(back.channels == 3);
  REQUIRE(back.rows == img.rows);
  REQUIRE(back.cols == img.cols);
  for (size_t i = 0; i < img.data.size(); ++i) CHECK(back.data[i] == img.data[i]);
  std::filesystem::remove(path);
}

TEST_CASE("missing files raise IoError") {
  CHECK_THROWS_AS(io::read_kv("/nonexistent/lanedet/file.txt"), io::IoError);
  CHECK_THROWS_AS(io::read_blob("/nonexistent/lanedet/file.tnsr"), io::IoError);
  CHECK_THROWS_AS(io::read_png("/nonexistent/lanedet/file.png"), io::IoError);
}
