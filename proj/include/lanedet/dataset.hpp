#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lanedet/dt_label.hpp"
#include "lanedet/geometry.hpp"
#include "lanedet/grid.hpp"
#include "lanedet/sweeps.hpp"
#include "lanedet/synth.hpp"

namespace lanedet {

/// Scenario profile: the paper-derived thresholds plus the scene generator
/// settings that go with them.
struct Profile {
  std::string name;
  double tau = 30.0;                 // DT cap, px
  double binarize_threshold = 20.0;  // postprocess threshold, px
  synth::SceneConfig scene;
};

Profile highway_profile();
Profile city_profile();
Profile profile_by_name(const std::string& name);

struct DatasetManifest {
  int scenes = 0;
  uint64_t seed = 0;
  std::string profile = "highway";
  double tau = 30.0;
  double binarize_threshold = 20.0;
  int frames = 5;
  GridSpec grid;
  std::vector<int> train, val, test;
};

void write_manifest(const std::filesystem::path& path, const DatasetManifest& m);
DatasetManifest read_manifest(const std::filesystem::path& path);

/// One reference frame of one scene, as stored on disk. Sweeps and poses
/// cover all frames; image / lanes / ground belong to the last (reference)
/// frame.
struct SceneRecord {
  CameraModel cam;
  std::vector<PointCloud> sweeps;
  std::vector<Pose> poses;  // vehicle -> world per sweep
  Image image;
  LaneGraph lanes;
  Grid2<float> ground;
};

/// Dataset directory access. Records are re-read from disk on every load;
/// callers in parallel loops each get their own copy.
class SceneDataset {
 public:
  explicit SceneDataset(const std::filesystem::path& root);

  const DatasetManifest& manifest() const { return manifest_; }
  const GridSpec& grid() const { return manifest_.grid; }
  int size() const { return manifest_.scenes; }
  std::filesystem::path scene_dir(int index) const;
  SceneRecord load_record(int index) const;

 private:
  std::filesystem::path root_;
  DatasetManifest manifest_;
};

/// Generates `scenes` synthetic scenes under `out`, writes the dataset
/// layout (calib, sweeps, poses, reference image / lanes / ground), the
/// 80/10/10 split manifest, and a default training config. Deterministic in
/// `seed`; scene-level parallelism honors `jobs`.
void generate_dataset(const std::filesystem::path& out, int scenes, uint64_t seed,
                      const Profile& profile, const GridSpec& grid, int frames = 5, int jobs = 0);

}  // namespace lanedet
