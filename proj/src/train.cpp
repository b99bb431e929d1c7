#include "lanedet/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "lanedet/io.hpp"

namespace lanedet {

TrainConfig read_train_config(const std::filesystem::path& path) {
  TrainConfig cfg;
  std::ifstream in(path);
  if (!in) throw io::IoError("cannot open " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    if (key == "lambda") cfg.lambda = std::stod(val);
    else if (key == "tau") cfg.tau = std::stod(val);
    else if (key == "lr") cfg.lr = std::stod(val);
    else if (key == "weight_decay") cfg.weight_decay = std::stod(val);
    else if (key == "batch_size") cfg.batch_size = std::stoi(val);
    else if (key == "max_epochs") cfg.max_epochs = std::stoi(val);
    else if (key == "patience") cfg.patience = std::stoi(val);
    else if (key == "seed") cfg.seed = std::stoull(val);
    else if (key == "mode") cfg.mode = parse_sensor_mode(val);
    else if (key == "augment") cfg.augment = val == "1" || val == "true";
    else if (key == "rot_aug_deg") cfg.rot_aug_deg = std::stod(val);
    else if (key == "loss_valid_cells_only") cfg.loss_valid_cells_only = val == "1" || val == "true";
    else if (key == "jobs") cfg.jobs = std::stoi(val);
  }
  return cfg;
}

void write_train_config(const std::filesystem::path& path, const TrainConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw io::IoError("cannot write " + path.string());
  char buf[64];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  out << "lambda=" << num(cfg.lambda) << '\n';
  out << "tau=" << num(cfg.tau) << '\n';
  out << "lr=" << num(cfg.lr) << '\n';
  out << "weight_decay=" << num(cfg.weight_decay) << '\n';
  out << "batch_size=" << cfg.batch_size << '\n';
  out << "max_epochs=" << cfg.max_epochs << '\n';
  out << "patience=" << cfg.patience << '\n';
  out << "seed=" << cfg.seed << '\n';
  out << "mode=" << to_string(cfg.mode) << '\n';
  out << "augment=" << (cfg.augment ? 1 : 0) << '\n';
  out << "rot_aug_deg=" << num(cfg.rot_aug_deg) << '\n';
  out << "loss_valid_cells_only=" << (cfg.loss_valid_cells_only ? 1 : 0) << '\n';
  out << "jobs=" << cfg.jobs << '\n';
  if (!out) throw io::IoError("write failed: " + path.string());
}

namespace {

struct ItemResult {
  double total = 0.0, lane = 0.0, gnd = 0.0;
  std::vector<std::vector<float>> grads;  // aligned with the param list
};

struct LossTensors {
  ad::Tensor<float> total, lane, gnd;
};

LossTensors build_losses(ad::Tape<float>& tape, PipelineResult<float>& fwd,
                         const PreparedSample& sample, const TrainConfig& cfg) {
  const int rows = sample.spec.rows, cols = sample.spec.cols;
  std::vector<float> target_v(sample.dt_target.grid.data.begin(), sample.dt_target.grid.data.end());
  auto target = tape.leaf(ad::Shape::chw(1, rows, cols), std::span<const float>(target_v), false);
  std::vector<float> gt_v(sample.ground_gt.data.begin(), sample.ground_gt.data.end());
  auto gt = tape.leaf(ad::Shape::chw(1, rows, cols), std::span<const float>(gt_v), false);

  ad::Tensor<float> pred_dt = fwd.dt;
  ad::Tensor<float> target_dt = target;
  if (cfg.loss_valid_cells_only) {
    std::vector<float> mask_v(fwd.warp_valid.data.size());
    for (size_t k = 0; k < mask_v.size(); ++k) mask_v[k] = fwd.warp_valid.data[k] ? 1.0f : 0.0f;
    auto mask = tape.leaf(ad::Shape::chw(1, rows, cols), std::span<const float>(mask_v), false);
    pred_dt = tape.mul(pred_dt, mask);
    target_dt = tape.mul(target_dt, mask);
  }

  LossTensors out;
  out.lane = lane_loss(tape, pred_dt, target_dt);
  out.gnd = ground_loss(tape, fwd.ground, gt);
  out.total = total_loss(tape, out.lane, out.gnd, static_cast<float>(cfg.lambda));
  return out;
}

double mean_loss_over(const SceneDataset& dataset, const std::vector<int>& indices,
                      DeskGroundNet<float>& ground_net, DeskLaneNet<float>& lane_net,
                      const TrainConfig& cfg, int jobs) {
  std::vector<double> losses(indices.size(), 0.0);
  bool failed = false;
  std::string error;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
#endif
  for (size_t k = 0; k < indices.size(); ++k) {
    if (failed) continue;
    try {
      const SceneRecord rec = dataset.load_record(indices[k]);
      const PreparedSample sample = prepare_sample(rec, dataset.grid(), cfg.tau);
      ad::Tape<float> tape;
      auto fwd = forward_pipeline(tape, sample.bev, sample.image, sample.cam, sample.spec,
                                  ground_net, lane_net, cfg.mode, false);
      const LossTensors losses_t = build_losses(tape, fwd, sample, cfg);
      losses[k] = losses_t.total.value()[0];
    } catch (const std::exception& e) {
#ifdef _OPENMP
#pragma omp critical
#endif
      {
        failed = true;
        error = e.what();
      }
    }
  }
  if (failed) throw std::runtime_error("validation pass failed: " + error);
  double sum = 0.0;
  for (double v : losses) sum += v;
  return indices.empty() ? 0.0 : sum / static_cast<double>(indices.size());
}

}  // namespace

TrainResult train(const SceneDataset& dataset, const std::vector<int>& train_idx,
                  const std::vector<int>& val_idx, DeskGroundNet<float>& ground_net,
                  DeskLaneNet<float>& lane_net, const TrainConfig& cfg) {
  if (train_idx.empty() || val_idx.empty())
    throw std::invalid_argument("train: need non-empty train and validation splits");

  ground_net.init(substream_seed(cfg.seed, "init-ground"));
  lane_net.init(substream_seed(cfg.seed, "init-lane"));

  std::vector<Param<float>*> params = ground_net.params();
  for (auto* p : lane_net.params()) params.push_back(p);
  for (auto* p : params) p->opt.reset(p->value.size());

  ad::AdamConfig adam;
  adam.lr = cfg.lr;
  adam.weight_decay = cfg.weight_decay;

  const int jobs = cfg.jobs > 0 ? cfg.jobs
#ifdef _OPENMP
                                : omp_get_max_threads();
#else
                                : 1;
#endif

  const AugmentConfig aug{cfg.rot_aug_deg, cfg.photo};
  std::mt19937_64 shuffle_rng(substream_seed(cfg.seed, "shuffle"));

  TrainResult result;
  std::vector<std::vector<float>> best_params;
  int since_best = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::vector<int> order = train_idx;
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double epoch_total = 0.0, epoch_lane = 0.0, epoch_gnd = 0.0;
    int n_items = 0;

    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const size_t count = std::min<size_t>(cfg.batch_size, order.size() - start);
      std::vector<ItemResult> items(count);
      bool failed = false;
      std::string error;

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
#endif
      for (size_t b = 0; b < count; ++b) {
        if (failed) continue;
        try {
          const int scene = order[start + b];
          const SceneRecord rec = dataset.load_record(scene);
          const uint64_t aug_seed = substream_seed(cfg.seed, "augment",
                                                   static_cast<uint64_t>(scene),
                                                   static_cast<uint64_t>(epoch));
          const PreparedSample sample =
              prepare_sample(rec, dataset.grid(), cfg.tau, cfg.augment ? &aug : nullptr, aug_seed);
          ad::Tape<float> tape;
          auto fwd = forward_pipeline(tape, sample.bev, sample.image, sample.cam, sample.spec,
                                      ground_net, lane_net, cfg.mode, true);
          const LossTensors losses = build_losses(tape, fwd, sample, cfg);
          tape.backward(losses.total);

          ItemResult& item = items[b];
          item.total = losses.total.value()[0];
          item.lane = losses.lane.value()[0];
          item.gnd = losses.gnd.value()[0];
          item.grads.resize(fwd.bound.size());
          for (size_t p = 0; p < fwd.bound.size(); ++p) {
            const auto g = fwd.bound[p].second.grad();
            item.grads[p].assign(g.begin(), g.end());
          }
        } catch (const std::exception& e) {
#ifdef _OPENMP
#pragma omp critical
#endif
          {
            failed = true;
            error = e.what();
          }
        }
      }
      if (failed) throw std::runtime_error("training step failed: " + error);

      // Fixed-order reduction across batch items, then one Adam step on the
      // batch-mean gradient. The bound-param order is identical across items
      // because every item runs the same graph.
      const double inv = 1.0 / static_cast<double>(count);
      std::vector<std::vector<float>> mean_grads(params.size());
      // Map bound order -> params order. Bound order is ground params then
      // lane params, matching `params`, with each parameter appearing once.
      for (size_t p = 0; p < params.size(); ++p) {
        mean_grads[p].assign(params[p]->value.size(), 0.0f);
      }
      for (const ItemResult& item : items) {
        if (item.grads.size() != params.size())
          throw std::runtime_error("training step: parameter binding mismatch");
        for (size_t p = 0; p < params.size(); ++p)
          for (size_t k = 0; k < mean_grads[p].size(); ++k)
            mean_grads[p][k] += static_cast<float>(item.grads[p][k] * inv);
      }
      for (size_t p = 0; p < params.size(); ++p)
        ad::adam_step<float>(std::span<float>(params[p]->value),
                             std::span<const float>(mean_grads[p]), params[p]->opt, adam);

      for (const ItemResult& item : items) {
        if (!std::isfinite(item.total))
          throw std::runtime_error("training diverged: non-finite loss");
        epoch_total += item.total;
        epoch_lane += item.lane;
        epoch_gnd += item.gnd;
        ++n_items;
      }
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = epoch_total / std::max(1, n_items);
    log.lane = epoch_lane / std::max(1, n_items);
    log.gnd = epoch_gnd / std::max(1, n_items);
    log.val_loss = mean_loss_over(dataset, val_idx, ground_net, lane_net, cfg, jobs);
    if (!std::isfinite(log.val_loss))
      throw std::runtime_error("training diverged: non-finite validation loss");
    result.log.push_back(log);

    if (result.best_epoch < 0 || log.val_loss < result.best_val) {
      result.best_epoch = epoch;
      result.best_val = log.val_loss;
      best_params.clear();
      for (auto* p : params) best_params.push_back(p->value);
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }

  if (!best_params.empty())
    for (size_t p = 0; p < params.size(); ++p) params[p]->value = best_params[p];
  return result;
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<EpochLog>& log) {
  std::ofstream out(path);
  if (!out) throw io::IoError("cannot write " + path.string());
  out << "epoch,train_loss,val_loss,lane,gnd\n";
  char buf[256];
  for (const auto& row : log) {
    std::snprintf(buf, sizeof(buf), "%d,%.9e,%.9e,%.9e,%.9e\n", row.epoch, row.train_loss,
                  row.val_loss, row.lane, row.gnd);
    out << buf;
  }
  if (!out) throw io::IoError("write failed: " + path.string());
}

MetricsReport evaluate_scenes(const SceneDataset& dataset, const std::vector<int>& indices,
                              DeskGroundNet<float>& ground_net, DeskLaneNet<float>& lane_net,
                              const EvalConfig& cfg) {
  if (indices.empty()) throw std::invalid_argument("evaluate_scenes: no scenes");
  const int jobs = cfg.jobs > 0 ? cfg.jobs
#ifdef _OPENMP
                                : omp_get_max_threads();
#else
                                : 1;
#endif

  struct SceneMetrics {
    double l1 = 0.0, l2 = 0.0, ap = 0.0;
    std::map<int, double> precision, recall;
    int topo = 0;
    std::vector<DistanceBinAp> bins;
  };
  std::vector<SceneMetrics> per_scene(indices.size());
  bool failed = false;
  std::string error;

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
#endif
  for (size_t k = 0; k < indices.size(); ++k) {
    if (failed) continue;
    try {
      const SceneRecord rec = dataset.load_record(indices[k]);
      const PreparedSample sample = prepare_sample(rec, dataset.grid(), cfg.tau);
      ad::Tape<float> tape;
      auto fwd = forward_pipeline(tape, sample.bev, sample.image, sample.cam, sample.spec,
                                  ground_net, lane_net, cfg.mode, false, false,
                                  cfg.use_true_ground ? &sample.ground_gt : nullptr);
      Grid2<float> pred(sample.spec.rows, sample.spec.cols);
      const auto dv = fwd.dt.value();
      std::copy(dv.begin(), dv.end(), pred.data.begin());

      SceneMetrics& m = per_scene[k];
      const DtTarget pred_target{pred, static_cast<float>(cfg.tau)};
      std::tie(m.l1, m.l2) = dt_error(pred_target, sample.dt_target, sample.spec.resolution);
      const MaskGrid binary = binarize(pred, static_cast<float>(cfg.binarize_threshold));
      const Skeleton skel = skeletonize(binary);
      for (int tol = kApToleranceMin; tol <= kApToleranceMax; ++tol) {
        const auto [p, r] = chamfer_pr(skel.mask, sample.gt_lane_mask, tol);
        m.precision[tol] = p;
        m.recall[tol] = r;
        m.ap += p;
      }
      m.ap /= (kApToleranceMax - kApToleranceMin + 1);
      m.topo = topology_deviation(skel, sample.lanes.lane_count);
      m.bins = ap_by_distance(skel.mask, sample.gt_lane_mask, sample.spec, cfg.bin_width_m);
    } catch (const std::exception& e) {
#ifdef _OPENMP
#pragma omp critical
#endif
      {
        failed = true;
        error = e.what();
      }
    }
  }
  if (failed) throw std::runtime_error("evaluation failed: " + error);

  MetricsReport report;
  report.scene_count = static_cast<int>(indices.size());
  report.tau = cfg.tau;
  report.binarize_threshold = cfg.binarize_threshold;
  report.bin_width_m = cfg.bin_width_m;
  report.resolution_m = dataset.grid().resolution;
  report.sensor_mode = to_string(cfg.mode);
  const double inv = 1.0 / static_cast<double>(indices.size());
  for (const auto& m : per_scene) {
    report.dt_l1_cm += m.l1 * inv;
    report.dt_l2_cm2 += m.l2 * inv;
    report.ap += m.ap * inv;
    report.topology_mean_dev += m.topo * inv;
    for (const auto& [tol, p] : m.precision) report.precision_at[tol] += p * inv;
    for (const auto& [tol, r] : m.recall) report.recall_at[tol] += r * inv;
    if (report.ap_by_distance.empty()) {
      report.ap_by_distance = m.bins;
      for (auto& b : report.ap_by_distance) {
        b.ap *= inv;
        b.recall_at_report *= inv;
      }
    } else {
      for (size_t b = 0; b < m.bins.size(); ++b) {
        report.ap_by_distance[b].ap += m.bins[b].ap * inv;
        report.ap_by_distance[b].recall_at_report += m.bins[b].recall_at_report * inv;
      }
    }
  }
  return report;
}

}  // namespace lanedet
