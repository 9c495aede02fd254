#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "occslam/dataset.hpp"
#include "occslam/pose.hpp"

namespace occslam {

struct Segment {
  Eigen::Vector2d a = Eigen::Vector2d::Zero();
  Eigen::Vector2d b = Eigen::Vector2d::Zero();
};

/// Obstacles as line segments.
struct World {
  std::string name;
  std::vector<Segment> segments;

  /// Throws std::invalid_argument on degenerate or non-finite segments.
  void Validate() const;
};

struct SensorSpec {
  int n_beams = 1081;
  double angle_min = -0.75 * 3.14159265358979323846;  // -135 deg
  double angle_max = 0.75 * 3.14159265358979323846;   // +135 deg
  double range_max = 30.0;
  double range_noise_sigma = 0.02;

  double AngleIncrement() const {
    return n_beams > 1 ? (angle_max - angle_min) / (n_beams - 1) : 0.0;
  }
};

struct NoiseSpec {
  double odom_xy_sigma = 0.04;
  double odom_theta_sigma = 0.003;
  std::uint64_t seed = 1;
};

/// Distance along a ray to the nearest segment, or +inf when nothing is hit.
double RayDistance(const World& world, const Eigen::Vector2d& origin,
                   const Eigen::Vector2d& direction);

/// Noiseless ranges for every beam; beams without a hit within range_max are
/// set to the no-return sentinel range_max + 1.
std::vector<double> Raycast(const World& world, const Pose2& pose, const SensorSpec& sensor);

/// Scans and odometry along a ground-truth trajectory. Each record's noise
/// stream is seeded from (seed, record index), so output is independent of
/// generation order.
Dataset GenerateDataset(const World& world, const std::vector<Pose2>& trajectory,
                        const SensorSpec& sensor, const NoiseSpec& noise);

struct Scenario {
  World world;
  std::vector<Pose2> trajectory;  // starts at the origin
};

/// Built-in scenarios: "room" (60 poses), "sim1-like" (340), "sim2-like"
/// (527). A positive `n_poses` resamples the trajectory to that length.
Scenario MakeScenario(std::string_view name, int n_poses = 0);

std::vector<std::string> ScenarioNames();

}  // namespace occslam
