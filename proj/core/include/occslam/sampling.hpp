#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "occslam/dataset.hpp"

namespace occslam {

/// Log-odds of an occupied hit, log(0.7 / 0.3).
double OccupiedEvidence();
/// Log-odds of a free-space sample, log(0.4 / 0.6).
double FreeEvidence();

/// Beams shorter than this are treated as sensor self-hits and dropped.
inline constexpr double kDefaultMinBeamRange = 0.1;

struct SamplePoint {
  Eigen::Vector2d x_local = Eigen::Vector2d::Zero();  // laser frame, meters
  double z = 0.0;                                     // evidence label
  bool occupied = false;
};

struct SampledScan {
  std::vector<SamplePoint> points;
  std::size_t k() const { return points.size(); }
};

/// Equidistant sampling along every beam: free samples at s, 2s, ... strictly
/// before the endpoint and one occupied sample exactly at the endpoint.
/// No-return beams yield free samples up to range_max and no occupied sample.
SampledScan SampleScan(const ScanRecord& scan, double resolution,
                       double min_beam_range = kDefaultMinBeamRange);

std::vector<SampledScan> SampleDataset(const Dataset& dataset, double resolution,
                                       double min_beam_range = kDefaultMinBeamRange);

std::size_t TotalSamples(const std::vector<SampledScan>& scans);

}  // namespace occslam
