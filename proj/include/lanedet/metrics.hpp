#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lanedet/dt_label.hpp"
#include "lanedet/geometry.hpp"
#include "lanedet/grid.hpp"
#include "lanedet/postprocess.hpp"

namespace lanedet {

/// Chamfer tolerances for the average-precision sweep: 1..9 px (5-45 cm at
/// the 5 cm grid).
inline constexpr int kApToleranceMin = 1;
inline constexpr int kApToleranceMax = 9;
/// Precision/recall are additionally reported at this deviation (25 cm).
inline constexpr int kPrReportTolerance = 5;

struct DistanceBinAp {
  double x_min_m = 0.0;
  double x_max_m = 0.0;
  double ap = 0.0;
  double recall_at_report = 0.0;
};

struct MetricsReport {
  double dt_l1_cm = 0.0;
  double dt_l2_cm2 = 0.0;
  double ap = 0.0;
  std::map<int, double> precision_at;  // tolerance px -> fraction
  std::map<int, double> recall_at;
  double topology_mean_dev = 0.0;
  std::vector<DistanceBinAp> ap_by_distance;
  int scene_count = 0;

  // Config echo for auditability.
  double tau = 0.0;
  double binarize_threshold = 0.0;
  double bin_width_m = 8.0;
  double resolution_m = 0.0;
  std::string sensor_mode;
  std::string split;
  std::string checkpoint;

  std::string to_json() const;
};

void write_report(const std::filesystem::path& path, const MetricsReport& report);

/// Mean |delta| (cm) and mean delta^2 (cm^2) between two inverted truncated
/// DT grids; pixel differences are converted via the grid resolution.
/// Throws std::invalid_argument on shape or tau mismatch.
std::pair<double, double> dt_error(const DtTarget& pred, const DtTarget& target,
                                   double resolution_m);

/// Chamfer precision/recall at a pixel tolerance. Conventions: empty
/// prediction gives precision 1 and recall 0 against nonempty gt; empty gt
/// gives precision 0 (if anything was predicted) and recall 1.
std::pair<double, double> chamfer_pr(const MaskGrid& pred, const MaskGrid& gt, double tolerance_px);

/// Mean chamfer precision over tolerances 1..9 px.
double ap(const MaskGrid& pred, const MaskGrid& gt);

/// |component count - ground truth lane count|.
int topology_deviation(const Skeleton& pred, int gt_lane_count);

/// AP restricted to prediction cells whose vehicle x falls in each bin;
/// distances are measured against the full ground truth. Bins partition
/// [0, rows * resolution) along x.
std::vector<DistanceBinAp> ap_by_distance(const MaskGrid& pred, const MaskGrid& gt,
                                          const GridSpec& spec, double bin_width_m = 8.0);

}  // namespace lanedet
