#include "occslam/dataset.hpp"

#include <cmath>
#include <stdexcept>

namespace occslam {

void ScanRecord::Validate() const {
  if (ranges.empty()) {
    throw std::invalid_argument("scan has no beams");
  }
  if (!(range_max > 0.0) || !std::isfinite(range_max)) {
    throw std::invalid_argument("scan range_max must be positive");
  }
  if (!std::isfinite(angle_min) || !std::isfinite(angle_increment)) {
    throw std::invalid_argument("scan beam angles must be finite");
  }
  for (double r : ranges) {
    const bool in_range = r > 0.0 && r <= range_max;
    const bool sentinel = r == range_max + 1.0;
    if (!in_range && !sentinel) {
      throw std::invalid_argument("scan range outside (0, range_max] and not the no-return sentinel");
    }
  }
  if (odom) {
    odom->Validate();
  }
}

bool Dataset::HasOdometry() const {
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].odom) return true;
  }
  return false;
}

bool Dataset::HasGroundTruth() const {
  if (records.empty()) return false;
  for (const auto& r : records) {
    if (!r.gt_pose) return false;
  }
  return true;
}

bool Dataset::HasInitialPoses() const {
  if (records.empty()) return false;
  for (const auto& r : records) {
    if (!r.init_pose) return false;
  }
  return true;
}

void Dataset::Validate() const {
  if (records.size() < 2) {
    throw std::invalid_argument("dataset needs at least two records");
  }
  if (records.front().odom) {
    throw std::invalid_argument("odometry on first record");
  }
  const bool with_odom = HasOdometry();
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i].Validate();
    if (i > 0 && with_odom && !records[i].odom) {
      throw std::invalid_argument("record " + std::to_string(i) + " is missing odometry");
    }
  }
}

std::vector<Pose2> Dataset::GroundTruth() const {
  if (!HasGroundTruth()) {
    throw std::invalid_argument("dataset has no ground-truth poses");
  }
  std::vector<Pose2> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(*r.gt_pose);
  return out;
}

std::vector<Pose2> Dataset::InitialPoses() const {
  if (!HasInitialPoses()) {
    throw std::invalid_argument("dataset has no initial poses");
  }
  std::vector<Pose2> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(*r.init_pose);
  return out;
}

std::vector<Pose2> IntegrateOdometry(const Dataset& dataset) {
  if (!dataset.HasOdometry()) {
    throw std::invalid_argument("dataset has no odometry to integrate");
  }
  std::vector<Pose2> poses;
  poses.reserve(dataset.size());
  poses.emplace_back();
  for (std::size_t i = 1; i < dataset.size(); ++i) {
    poses.push_back(ApplyIncrement(poses.back(), *dataset.records[i].odom));
  }
  return poses;
}

Dataset Subsample(const Dataset& dataset, double rate) {
  if (!(rate > 0.0) || rate > 1.0) {
    throw std::invalid_argument("subsample rate must lie in (0, 1]");
  }
  const auto stride = static_cast<std::size_t>(std::lround(1.0 / rate));
  Dataset out;
  out.meta = dataset.meta;
  out.meta["subsample_stride"] = std::to_string(stride);

  std::optional<OdomIncrement> pending;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const ScanRecord& rec = dataset.records[i];
    if (i > 0 && rec.odom) {
      pending = pending ? ComposeIncrements(*pending, *rec.odom) : *rec.odom;
    }
    if (i % stride != 0) continue;
    ScanRecord kept = rec;
    kept.odom = (i == 0) ? std::nullopt : pending;
    pending.reset();
    out.records.push_back(std::move(kept));
  }
  return out;
}

}  // namespace occslam
