#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "lanedet/dataset.hpp"
#include "lanedet/gradcheck.hpp"
#include "lanedet/io.hpp"
#include "lanedet/metrics.hpp"
#include "lanedet/models.hpp"
#include "lanedet/pipeline.hpp"
#include "lanedet/postprocess.hpp"
#include "lanedet/train.hpp"
#include "lanedet/warp.hpp"

namespace fs = std::filesystem;
using namespace lanedet;

namespace {

// Exit codes: 0 ok, 2 usage, 3 numeric failure, 4 IO. cmd_gradcheck returns
// 1 when a gradient check exceeds its tolerance.
constexpr int kExitOk = 0;
constexpr int kExitGradFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

struct CheckpointMeta {
  SensorMode mode = SensorMode::kBoth;
  double tau = 30.0;
};

void save_checkpoint(const fs::path& path, DeskGroundNet<float>& ground_net,
                     DeskLaneNet<float>& lane_net, const CheckpointMeta& meta) {
  io::NamedBlobs blobs = checkpoint_blobs(ground_net, lane_net);
  blobs.emplace_back("meta.sensor_mode",
                     io::TensorBlob::from_vector(
                         {static_cast<float>(static_cast<int>(meta.mode))}, {1}));
  blobs.emplace_back("meta.tau",
                     io::TensorBlob::from_vector({static_cast<float>(meta.tau)}, {1}));
  io::write_blob_container(path, blobs);
}

CheckpointMeta load_checkpoint(const fs::path& path, DeskGroundNet<float>& ground_net,
                               DeskLaneNet<float>& lane_net) {
  const io::NamedBlobs blobs = io::read_blob_container(path);
  load_checkpoint_blobs(blobs, ground_net, lane_net);
  CheckpointMeta meta;
  for (const auto& [name, blob] : blobs) {
    if (name == "meta.sensor_mode")
      meta.mode = static_cast<SensorMode>(static_cast<int>(blob.to_f32()[0]));
    if (name == "meta.tau") meta.tau = blob.to_f32()[0];
  }
  return meta;
}

int cmd_synth(const fs::path& out, int scenes, uint64_t seed, const std::string& profile_name,
              int rows, int cols, double res, int frames, int jobs) {
  if (scenes < 1) {
    std::cerr << "error: --scenes must be >= 1\n";
    return kExitUsage;
  }
  const Profile profile = profile_by_name(profile_name);
  GridSpec grid = GridSpec::standard(rows, cols, res);
  generate_dataset(out, scenes, seed, profile, grid, frames, jobs);
  std::cout << "wrote " << scenes << " scenes to " << out.string() << " (profile "
            << profile.name << ", tau " << profile.tau << ")\n";
  return kExitOk;
}

int cmd_train(const fs::path& data, const fs::path& out, const fs::path& config_path,
              TrainConfig cfg, bool config_given) {
  const SceneDataset dataset(data);
  if (config_given) {
    TrainConfig file_cfg = read_train_config(config_path);
    file_cfg.seed = cfg.seed;
    file_cfg.mode = cfg.mode;
    file_cfg.jobs = cfg.jobs;
    if (cfg.max_epochs > 0) file_cfg.max_epochs = cfg.max_epochs;
    cfg = file_cfg;
  }
  if (cfg.tau <= 0.0) cfg.tau = dataset.manifest().tau;

  DeskGroundNet<float> ground_net;
  DeskLaneNet<float> lane_net;
  const TrainResult result =
      train(dataset, dataset.manifest().train, dataset.manifest().val, ground_net, lane_net, cfg);

  save_checkpoint(out, ground_net, lane_net, {cfg.mode, cfg.tau});
  write_loss_csv(fs::path(out.string() + ".loss.csv"), result.log);
  std::printf("final validation loss %.9e (best epoch %d)\n", result.best_val, result.best_epoch);
  return kExitOk;
}

int cmd_eval(const fs::path& data, const fs::path& ckpt, const std::string& split,
             const fs::path& report_path, const std::string& mode_flag, bool true_ground,
             int jobs) {
  const SceneDataset dataset(data);
  DeskGroundNet<float> ground_net;
  DeskLaneNet<float> lane_net;
  const CheckpointMeta meta = load_checkpoint(ckpt, ground_net, lane_net);

  EvalConfig cfg;
  cfg.mode = mode_flag.empty() ? meta.mode : parse_sensor_mode(mode_flag);
  cfg.tau = meta.tau;
  cfg.binarize_threshold = dataset.manifest().binarize_threshold;
  cfg.use_true_ground = true_ground;
  cfg.jobs = jobs;

  const std::vector<int>* indices = nullptr;
  if (split == "train") indices = &dataset.manifest().train;
  else if (split == "val") indices = &dataset.manifest().val;
  else if (split == "test") indices = &dataset.manifest().test;
  else {
    std::cerr << "error: unknown split '" << split << "'\n";
    return kExitUsage;
  }

  MetricsReport report = evaluate_scenes(dataset, *indices, ground_net, lane_net, cfg);
  report.split = split;
  report.checkpoint = ckpt.string();
  write_report(report_path, report);
  std::printf("AP %.4f  Pre@5px %.4f  Rec@5px %.4f  DT L1 %.3f cm  topology dev %.3f\n",
              report.ap, report.precision_at[kPrReportTolerance],
              report.recall_at[kPrReportTolerance], report.dt_l1_cm, report.topology_mean_dev);
  return kExitOk;
}

int cmd_infer(const fs::path& scene_dir, const fs::path& ckpt, const fs::path& viz_out) {
  const fs::path dataset_root = scene_dir.parent_path();
  const SceneDataset dataset(dataset_root);
  int index = -1;
  for (int i = 0; i < dataset.size(); ++i)
    if (dataset.scene_dir(i) == scene_dir) index = i;
  if (index < 0) {
    std::cerr << "error: " << scene_dir.string() << " is not a scene of " << dataset_root.string()
              << "\n";
    return kExitUsage;
  }

  DeskGroundNet<float> ground_net;
  DeskLaneNet<float> lane_net;
  const CheckpointMeta meta = load_checkpoint(ckpt, ground_net, lane_net);

  const SceneRecord rec = dataset.load_record(index);
  const PreparedSample sample = prepare_sample(rec, dataset.grid(), meta.tau);
  ad::Tape<float> tape;
  auto fwd = forward_pipeline(tape, sample.bev, sample.image, sample.cam, sample.spec, ground_net,
                              lane_net, meta.mode, false);

  Grid2<float> pred(sample.spec.rows, sample.spec.cols);
  const auto dv = fwd.dt.value();
  std::copy(dv.begin(), dv.end(), pred.data.begin());
  Grid2<float> ground_pred(sample.spec.rows, sample.spec.cols);
  const auto gv = fwd.ground.value();
  std::copy(gv.begin(), gv.end(), ground_pred.data.begin());

  const Skeleton skel =
      skeletonize(binarize(pred, static_cast<float>(dataset.manifest().binarize_threshold)));
  const WarpResult<float> warped =
      backproject(sample.image, ground_pred, sample.cam, sample.spec);

  const Image dt_img = colorize_dt(pred, static_cast<float>(meta.tau));
  std::vector<Image> panels;
  panels.push_back(colorize_bev(sample.bev));
  panels.push_back(dt_img);
  panels.push_back(overlay_mask(dt_img, skel.mask, 1.0f, 0.1f, 0.1f));
  panels.push_back(overlay_mask(warped.bev_image, skel.mask, 1.0f, 0.1f, 0.1f));
  io::write_png(viz_out, hstack(panels));
  std::cout << "wrote " << viz_out.string() << "\n";
  return kExitOk;
}

int cmd_gradcheck(uint64_t seed) {
  const auto entries = run_gradcheck(seed);
  bool all_pass = true;
  for (const auto& e : entries) {
    std::printf("%-28s max rel err %.3e  (tol %.0e)  %s\n", e.op.c_str(), e.max_rel_err,
                e.tolerance, e.pass ? "ok" : "FAIL");
    all_pass = all_pass && e.pass;
  }
  return all_pass ? kExitOk : kExitGradFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-sensor 3D lane detection (LiDAR BEV + camera re-projection) at desk scale"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  std::string synth_out, synth_profile = "highway";
  int synth_scenes = 10, synth_rows = 960, synth_cols = 960, synth_frames = 5, synth_jobs = 0;
  double synth_res = 0.05;
  uint64_t synth_seed = 0;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--scenes", synth_scenes, "number of scenes")->required();
  synth->add_option("--seed", synth_seed, "root seed");
  synth->add_option("--profile", synth_profile, "highway|city");
  synth->add_option("--rows", synth_rows, "BEV rows");
  synth->add_option("--cols", synth_cols, "BEV cols");
  synth->add_option("--res", synth_res, "meters per cell");
  synth->add_option("--frames", synth_frames, "sweeps per scene");
  synth->add_option("--jobs", synth_jobs, "parallel scene jobs (0 = all cores)");

  // train
  auto* train_cmd = app.add_subcommand("train", "train the two nets");
  std::string train_data, train_out, train_config, train_mode = "both";
  TrainConfig tcfg;
  tcfg.tau = 0.0;  // 0 = take tau from the dataset manifest
  uint64_t train_seed = 0;
  int train_epochs = 0, train_jobs = 0;
  train_cmd->add_option("--data", train_data, "dataset directory")->required();
  train_cmd->add_option("--out", train_out, "checkpoint path")->required();
  train_cmd->add_option("--config", train_config, "key=value training config");
  train_cmd->add_option("--mode", train_mode, "lidar|camera|both");
  train_cmd->add_option("--seed", train_seed, "root seed");
  train_cmd->add_option("--epochs", train_epochs, "override max epochs");
  train_cmd->add_option("--batch", tcfg.batch_size, "batch size");
  train_cmd->add_option("--lr", tcfg.lr, "learning rate");
  train_cmd->add_option("--lambda", tcfg.lambda, "loss mixing factor");
  train_cmd->add_option("--tau", tcfg.tau, "DT cap in px (0 = from manifest)");
  train_cmd->add_option("--patience", tcfg.patience, "early-stop patience");
  train_cmd->add_option("--jobs", train_jobs, "parallel batch items (0 = all cores)");
  bool no_augment = false;
  train_cmd->add_flag("--no-augment", no_augment, "disable augmentation");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "run the evaluation protocol");
  std::string eval_data, eval_ckpt, eval_split = "test", eval_report = "report.json",
              eval_mode;
  bool eval_true_ground = false;
  int eval_jobs = 0;
  eval_cmd->add_option("--data", eval_data, "dataset directory")->required();
  eval_cmd->add_option("--ckpt", eval_ckpt, "checkpoint path")->required();
  eval_cmd->add_option("--split", eval_split, "train|val|test");
  eval_cmd->add_option("--report", eval_report, "output report JSON");
  eval_cmd->add_option("--mode", eval_mode, "override sensor mode");
  eval_cmd->add_flag("--true-ground", eval_true_ground, "warp onto ground-truth heights");
  eval_cmd->add_option("--jobs", eval_jobs, "parallel scenes (0 = all cores)");

  // infer
  auto* infer_cmd = app.add_subcommand("infer", "run one scene and write a composite PNG");
  std::string infer_scene, infer_ckpt, infer_viz = "viz.png";
  infer_cmd->add_option("--scene", infer_scene, "scene directory inside a dataset")->required();
  infer_cmd->add_option("--ckpt", infer_ckpt, "checkpoint path")->required();
  infer_cmd->add_option("--viz", infer_viz, "output PNG");

  // gradcheck
  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference suite over all ops");
  uint64_t grad_seed = 7;
  grad_cmd->add_option("--seed", grad_seed, "seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (synth->parsed())
      return cmd_synth(synth_out, synth_scenes, synth_seed, synth_profile, synth_rows, synth_cols,
                       synth_res, synth_frames, synth_jobs);
    if (train_cmd->parsed()) {
      tcfg.seed = train_seed;
      tcfg.mode = parse_sensor_mode(train_mode);
      tcfg.jobs = train_jobs;
      tcfg.augment = !no_augment;
      if (train_epochs > 0) tcfg.max_epochs = train_epochs;
      return cmd_train(train_data, train_out, train_config, tcfg, !train_config.empty());
    }
    if (eval_cmd->parsed())
      return cmd_eval(eval_data, eval_ckpt, eval_split, eval_report, eval_mode, eval_true_ground,
                      eval_jobs);
    if (infer_cmd->parsed()) return cmd_infer(infer_scene, infer_ckpt, infer_viz);
    if (grad_cmd->parsed()) return cmd_gradcheck(grad_seed);
  } catch (const io::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitUsage;
}
