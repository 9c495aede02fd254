#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "occslam/pose.hpp"

namespace occslam {

/// One lidar scan with its odometry increment from the previous record.
struct ScanRecord {
  double timestamp = 0.0;
  std::vector<double> ranges;
  double angle_min = 0.0;
  double angle_increment = 0.0;
  double range_max = 0.0;
  std::optional<OdomIncrement> odom;
  std::optional<Pose2> gt_pose;
  std::optional<Pose2> init_pose;

  double BeamAngle(std::size_t beam) const {
    return angle_min + static_cast<double>(beam) * angle_increment;
  }
  /// Ranges beyond range_max (the file sentinel is range_max + 1) carry no return.
  bool IsNoReturn(std::size_t beam) const { return ranges[beam] > range_max; }
  double NoReturnSentinel() const { return range_max + 1.0; }

  /// Throws std::invalid_argument when a range or beam parameter is invalid.
  void Validate() const;
};

struct Dataset {
  std::vector<ScanRecord> records;
  std::map<std::string, std::string> meta;

  std::size_t size() const { return records.size(); }
  bool HasOdometry() const;
  bool HasGroundTruth() const;
  bool HasInitialPoses() const;

  /// Checks the record-level invariants and the dataset-level ones: at least
  /// two records, no odometry on record 0, and odometry either on every later
  /// record or on none.
  void Validate() const;

  std::vector<Pose2> GroundTruth() const;
  std::vector<Pose2> InitialPoses() const;
};

/// Dead-reckoned trajectory starting at the origin.
std::vector<Pose2> IntegrateOdometry(const Dataset& dataset);

/// Keeps every k-th record with k = round(1 / rate), compounding the
/// odometry of dropped records into the next kept one.
Dataset Subsample(const Dataset& dataset, double rate);

}  // namespace occslam
