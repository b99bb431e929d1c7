#pragma once

#include <filesystem>
#include <vector>

#include "lanedet/dataset.hpp"
#include "lanedet/metrics.hpp"
#include "lanedet/models.hpp"
#include "lanedet/pipeline.hpp"

namespace lanedet {

struct TrainConfig {
  double lambda = 20.0;  // loss mixing factor
  double tau = 30.0;     // DT cap, px
  double lr = 1e-4;
  double weight_decay = 1e-4;
  int batch_size = 8;
  int max_epochs = 40;
  int patience = 10;  // epochs without validation improvement
  uint64_t seed = 0;
  SensorMode mode = SensorMode::kBoth;
  bool augment = true;
  double rot_aug_deg = 8.0;
  PhotometricRanges photo;
  bool loss_valid_cells_only = false;
  int jobs = 0;  // 0 -> all hardware threads
};

TrainConfig read_train_config(const std::filesystem::path& path);
void write_train_config(const std::filesystem::path& path, const TrainConfig& cfg);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lane = 0.0;
  double gnd = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> log;
  int best_epoch = -1;
  double best_val = 0.0;
};

/// Adam over the combined loss with the paper's augmentations; early stop on
/// validation patience. Leaves the best-on-validation parameters in the
/// nets. Throws std::runtime_error when the loss turns non-finite.
TrainResult train(const SceneDataset& dataset, const std::vector<int>& train_idx,
                  const std::vector<int>& val_idx, DeskGroundNet<float>& ground_net,
                  DeskLaneNet<float>& lane_net, const TrainConfig& cfg);

void write_loss_csv(const std::filesystem::path& path, const std::vector<EpochLog>& log);

struct EvalConfig {
  SensorMode mode = SensorMode::kBoth;
  double tau = 30.0;
  double binarize_threshold = 20.0;
  double bin_width_m = 8.0;
  bool use_true_ground = false;  // warp onto the ground-truth height grid
  int jobs = 0;
};

/// The full evaluation protocol over a list of scenes; per-scene metrics are
/// averaged in index order.
MetricsReport evaluate_scenes(const SceneDataset& dataset, const std::vector<int>& indices,
                              DeskGroundNet<float>& ground_net, DeskLaneNet<float>& lane_net,
                              const EvalConfig& cfg);

}  // namespace lanedet
