#include "lanedet/models.hpp"

namespace lanedet {

std::string to_string(SensorMode mode) {
  switch (mode) {
    case SensorMode::kLidar: return "lidar";
    case SensorMode::kCamera: return "camera";
    case SensorMode::kBoth: return "both";
  }
  return "both";
}

SensorMode parse_sensor_mode(const std::string& s) {
  if (s == "lidar") return SensorMode::kLidar;
  if (s == "camera") return SensorMode::kCamera;
  if (s == "both") return SensorMode::kBoth;
  throw std::invalid_argument("unknown sensor mode '" + s + "' (expected lidar, camera or both)");
}

}  // namespace lanedet
