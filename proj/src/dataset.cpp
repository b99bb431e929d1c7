#include "lanedet/dataset.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "lanedet/io.hpp"

namespace lanedet {

Profile highway_profile() {
  Profile p;
  p.name = "highway";
  p.tau = 30.0;
  p.binarize_threshold = 20.0;
  p.scene.lane_count_min = 2;
  p.scene.lane_count_max = 6;
  p.scene.curvature_max = 0.0025;
  p.scene.clutter_per_lane = 0.9;
  return p;
}

Profile city_profile() {
  Profile p;
  p.name = "city";
  p.tau = 20.0;
  p.binarize_threshold = 15.0;
  p.scene.lane_count_min = 2;
  p.scene.lane_count_max = 4;
  p.scene.curvature_max = 0.006;
  p.scene.clutter_per_lane = 1.6;
  p.scene.noise_level = 0.3;
  return p;
}

Profile profile_by_name(const std::string& name) {
  if (name == "highway") return highway_profile();
  if (name == "city") return city_profile();
  throw std::invalid_argument("unknown profile '" + name + "' (expected highway or city)");
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  nlohmann::json j;
  j["scenes"] = m.scenes;
  j["seed"] = m.seed;
  j["profile"] = m.profile;
  j["tau"] = m.tau;
  j["binarize_threshold"] = m.binarize_threshold;
  j["frames"] = m.frames;
  j["grid"] = {{"rows", m.grid.rows},
               {"cols", m.grid.cols},
               {"resolution", m.grid.resolution},
               {"origin", {m.grid.origin.x(), m.grid.origin.y()}}};
  j["splits"] = {{"train", m.train}, {"val", m.val}, {"test", m.test}};
  std::ofstream out(path);
  if (!out) throw io::IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw io::IoError("write failed: " + path.string());
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io::IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw io::IoError("bad manifest " + path.string() + ": " + e.what());
  }
  DatasetManifest m;
  m.scenes = j.at("scenes").get<int>();
  m.seed = j.at("seed").get<uint64_t>();
  m.profile = j.at("profile").get<std::string>();
  m.tau = j.at("tau").get<double>();
  m.binarize_threshold = j.at("binarize_threshold").get<double>();
  m.frames = j.at("frames").get<int>();
  m.grid.rows = j.at("grid").at("rows").get<int>();
  m.grid.cols = j.at("grid").at("cols").get<int>();
  m.grid.resolution = j.at("grid").at("resolution").get<double>();
  m.grid.origin = {j.at("grid").at("origin").at(0).get<double>(),
                   j.at("grid").at("origin").at(1).get<double>()};
  m.train = j.at("splits").at("train").get<std::vector<int>>();
  m.val = j.at("splits").at("val").get<std::vector<int>>();
  m.test = j.at("splits").at("test").get<std::vector<int>>();
  return m;
}

namespace {

std::string scene_dir_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scene_%03d", index);
  return buf;
}

}  // namespace

SceneDataset::SceneDataset(const std::filesystem::path& root)
    : root_(root), manifest_(read_manifest(root / "manifest.json")) {}

std::filesystem::path SceneDataset::scene_dir(int index) const {
  return root_ / scene_dir_name(index);
}

SceneRecord SceneDataset::load_record(int index) const {
  if (index < 0 || index >= manifest_.scenes)
    throw std::out_of_range("SceneDataset: scene index out of range");
  const auto dir = scene_dir(index);
  SceneRecord rec;
  rec.cam = io::read_calibration(dir / "calib.txt");
  for (int t = 0; t < manifest_.frames; ++t) {
    rec.sweeps.push_back(read_point_cloud(dir / ("sweep_" + std::to_string(t) + ".pcl")));
    rec.sweeps.back().timestamp = t;
    rec.poses.push_back(io::read_pose(dir / ("pose_" + std::to_string(t) + ".txt")));
  }
  const std::string ref = std::to_string(manifest_.frames - 1);
  rec.image = io::read_png(dir / ("image_" + ref + ".png"));
  rec.lanes = read_lanes(dir / ("lanes_" + ref + ".json"));
  rec.ground = io::read_blob(dir / ("ground_" + ref + ".tnsr")).to_grid2_f32();
  return rec;
}

void generate_dataset(const std::filesystem::path& out, int scenes, uint64_t seed,
                      const Profile& profile, const GridSpec& grid, int frames, int jobs) {
  if (scenes < 1) throw std::invalid_argument("generate_dataset: need at least one scene");
  grid.validate();
  std::filesystem::create_directories(out);

  const CameraModel cam = synth::default_camera();
  const synth::SensorSpec sensor;

#ifdef _OPENMP
  const int n_threads = jobs > 0 ? jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(n_threads)
#endif
  for (int s = 0; s < scenes; ++s) {
    synth::SceneConfig cfg = profile.scene;
    cfg.frames = frames;
    const uint64_t scene_seed = seed * 1000003ULL + static_cast<uint64_t>(s);
    const synth::Scene scene = synth::make_scene(scene_seed, cfg);

    const auto dir = out / scene_dir_name(s);
    std::filesystem::create_directories(dir);
    io::write_calibration(dir / "calib.txt", cam);
    for (int t = 0; t < frames; ++t) {
      const PointCloud sweep =
          synth::simulate_lidar(scene, scene.trajectory[t], sensor, scene_seed * 31ULL + t);
      write_point_cloud(dir / ("sweep_" + std::to_string(t) + ".pcl"), sweep);
      io::write_pose(dir / ("pose_" + std::to_string(t) + ".txt"), scene.trajectory[t]);
    }
    const Pose& ref = scene.trajectory[frames - 1];
    const std::string ref_name = std::to_string(frames - 1);
    io::write_png(dir / ("image_" + ref_name + ".png"), synth::render_camera(scene, cam, ref));
    write_lanes(dir / ("lanes_" + ref_name + ".json"), synth::lanes_in_frame(scene, ref));
    io::write_blob(dir / ("ground_" + ref_name + ".tnsr"),
                   io::TensorBlob::from_grid2(synth::ground_grid(scene, ref, grid)));
  }

  DatasetManifest m;
  m.scenes = scenes;
  m.seed = seed;
  m.profile = profile.name;
  m.tau = profile.tau;
  m.binarize_threshold = profile.binarize_threshold;
  m.frames = frames;
  m.grid = grid;
  const int n_train = static_cast<int>(scenes * 0.8);
  const int n_val = static_cast<int>(scenes * 0.9) - n_train;
  for (int i = 0; i < scenes; ++i) {
    if (i < n_train)
      m.train.push_back(i);
    else if (i < n_train + n_val)
      m.val.push_back(i);
    else
      m.test.push_back(i);
  }
  write_manifest(out / "manifest.json", m);

  io::KvDoc cfg_doc;
  cfg_doc.emplace_back("tau", std::vector<double>{profile.tau});
  cfg_doc.emplace_back("binarize_threshold", std::vector<double>{profile.binarize_threshold});
  cfg_doc.emplace_back("lambda", std::vector<double>{20.0});
  cfg_doc.emplace_back("lr", std::vector<double>{1e-4});
  cfg_doc.emplace_back("weight_decay", std::vector<double>{1e-4});
  cfg_doc.emplace_back("batch_size", std::vector<double>{8});
  io::write_kv(out / "train_config.cfg", cfg_doc);
}

}  // namespace lanedet
