#include "lanedet/metrics.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "lanedet/io.hpp"

namespace lanedet {

std::pair<double, double> dt_error(const DtTarget& pred, const DtTarget& target,
                                   double resolution_m) {
  if (pred.grid.rows != target.grid.rows || pred.grid.cols != target.grid.cols)
    throw std::invalid_argument("dt_error: shape mismatch");
  if (pred.tau != target.tau) throw std::invalid_argument("dt_error: tau mismatch");
  const double cm_per_px = resolution_m * 100.0;
  double l1 = 0.0, l2 = 0.0;
  for (size_t k = 0; k < pred.grid.data.size(); ++k) {
    const double d = static_cast<double>(pred.grid.data[k]) - target.grid.data[k];
    l1 += std::abs(d);
    l2 += d * d;
  }
  const double n = static_cast<double>(pred.grid.data.size());
  return {l1 / n * cm_per_px, l2 / n * cm_per_px * cm_per_px};
}

namespace {

size_t count_true(const MaskGrid& m) {
  size_t n = 0;
  for (auto v : m.data) n += v;
  return n;
}

}  // namespace

std::pair<double, double> chamfer_pr(const MaskGrid& pred, const MaskGrid& gt,
                                     double tolerance_px) {
  if (pred.rows != gt.rows || pred.cols != gt.cols)
    throw std::invalid_argument("chamfer_pr: shape mismatch");
  const size_t n_pred = count_true(pred);
  const size_t n_gt = count_true(gt);
  if (n_pred == 0 && n_gt == 0) return {1.0, 1.0};
  if (n_pred == 0) return {1.0, 0.0};
  if (n_gt == 0) return {0.0, 1.0};

  const Grid2<float> dt_gt = euclidean_dt(gt);
  const Grid2<float> dt_pred = euclidean_dt(pred);
  size_t pred_hit = 0, gt_hit = 0;
  for (size_t k = 0; k < pred.data.size(); ++k) {
    if (pred.data[k] && dt_gt.data[k] <= tolerance_px) ++pred_hit;
    if (gt.data[k] && dt_pred.data[k] <= tolerance_px) ++gt_hit;
  }
  return {static_cast<double>(pred_hit) / n_pred, static_cast<double>(gt_hit) / n_gt};
}

double ap(const MaskGrid& pred, const MaskGrid& gt) {
  double sum = 0.0;
  for (int tol = kApToleranceMin; tol <= kApToleranceMax; ++tol)
    sum += chamfer_pr(pred, gt, tol).first;
  return sum / (kApToleranceMax - kApToleranceMin + 1);
}

int topology_deviation(const Skeleton& pred, int gt_lane_count) {
  return std::abs(pred.component_count - gt_lane_count);
}

std::vector<DistanceBinAp> ap_by_distance(const MaskGrid& pred, const MaskGrid& gt,
                                          const GridSpec& spec, double bin_width_m) {
  if (pred.rows != spec.rows || pred.cols != spec.cols)
    throw std::invalid_argument("ap_by_distance: prediction shape does not match grid");
  const Grid2<float> dt_gt = euclidean_dt(gt);
  const Grid2<float> dt_pred = euclidean_dt(pred);
  const double x0 = spec.origin.x() - spec.resolution / 2.0;

  std::vector<DistanceBinAp> bins;
  for (double lo = 0.0; lo < spec.extent_x() - 1e-9; lo += bin_width_m) {
    DistanceBinAp bin;
    bin.x_min_m = lo;
    bin.x_max_m = std::min(lo + bin_width_m, spec.extent_x());
    const int i_lo = static_cast<int>(std::floor((lo - 0.0) / spec.resolution));
    const int i_hi =
        std::min(spec.rows, static_cast<int>(std::ceil((bin.x_max_m) / spec.resolution)));

    double ap_sum = 0.0;
    for (int tol = kApToleranceMin; tol <= kApToleranceMax; ++tol) {
      size_t n_pred = 0, hit = 0;
      for (int i = i_lo; i < i_hi; ++i) {
        const double x = x0 + (i + 0.5) * spec.resolution;
        if (x < bin.x_min_m || x >= bin.x_max_m) continue;
        for (int j = 0; j < spec.cols; ++j) {
          if (!pred.at(i, j)) continue;
          ++n_pred;
          if (dt_gt.at(i, j) <= tol) ++hit;
        }
      }
      ap_sum += n_pred == 0 ? 1.0 : static_cast<double>(hit) / n_pred;
    }
    bin.ap = ap_sum / (kApToleranceMax - kApToleranceMin + 1);

    size_t n_gt = 0, gt_hit = 0;
    for (int i = i_lo; i < i_hi; ++i) {
      const double x = x0 + (i + 0.5) * spec.resolution;
      if (x < bin.x_min_m || x >= bin.x_max_m) continue;
      for (int j = 0; j < spec.cols; ++j) {
        if (!gt.at(i, j)) continue;
        ++n_gt;
        if (dt_pred.at(i, j) <= kPrReportTolerance) ++gt_hit;
      }
    }
    bin.recall_at_report = n_gt == 0 ? 1.0 : static_cast<double>(gt_hit) / n_gt;
    bins.push_back(bin);
  }
  return bins;
}

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  j["dt_l1_cm"] = dt_l1_cm;
  j["dt_l2_cm2"] = dt_l2_cm2;
  j["ap"] = ap;
  for (const auto& [tol, p] : precision_at) j["precision_at"][std::to_string(tol)] = p;
  for (const auto& [tol, r] : recall_at) j["recall_at"][std::to_string(tol)] = r;
  j["topology_mean_dev"] = topology_mean_dev;
  auto& bins = j["ap_by_distance"] = nlohmann::json::array();
  for (const auto& b : ap_by_distance) {
    bins.push_back({{"x_min_m", b.x_min_m},
                    {"x_max_m", b.x_max_m},
                    {"ap", b.ap},
                    {"recall_at_5px", b.recall_at_report}});
  }
  j["scene_count"] = scene_count;
  j["config"] = {{"tau", tau},
                 {"binarize_threshold", binarize_threshold},
                 {"bin_width_m", bin_width_m},
                 {"resolution_m", resolution_m},
                 {"sensor_mode", sensor_mode},
                 {"split", split},
                 {"checkpoint", checkpoint},
                 {"ap_tolerances_px",
                  {kApToleranceMin, kApToleranceMax}},
                 {"pr_report_tolerance_px", kPrReportTolerance}};
  return j.dump(2);
}

void write_report(const std::filesystem::path& path, const MetricsReport& report) {
  std::ofstream out(path);
  if (!out) throw io::IoError("cannot write " + path.string());
  out << report.to_json() << '\n';
  if (!out) throw io::IoError("write failed: " + path.string());
}

}  // namespace lanedet
