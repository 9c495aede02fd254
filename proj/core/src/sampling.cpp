#include "occslam/sampling.hpp"

#include <cmath>
#include <stdexcept>

namespace occslam {

namespace {

// Tolerance for "strictly before the endpoint": keeps k*s from landing on an
// endpoint that is an exact multiple of s after rounding.
constexpr double kEndpointTolerance = 1e-9;

}  // namespace

double OccupiedEvidence() {
  static const double value = std::log(0.7 / 0.3);
  return value;
}

double FreeEvidence() {
  static const double value = std::log(0.4 / 0.6);
  return value;
}

SampledScan SampleScan(const ScanRecord& scan, double resolution, double min_beam_range) {
  if (!(resolution > 0.0) || !std::isfinite(resolution)) {
    throw std::invalid_argument("SampleScan: resolution must be positive");
  }
  SampledScan out;
  const double z_free = FreeEvidence();
  const double z_occ = OccupiedEvidence();

  for (std::size_t b = 0; b < scan.ranges.size(); ++b) {
    const double alpha = scan.BeamAngle(b);
    const Eigen::Vector2d dir(std::cos(alpha), std::sin(alpha));
    const bool no_return = scan.IsNoReturn(b);
    const double r = no_return ? scan.range_max : scan.ranges[b];
    if (!no_return && r < min_beam_range) continue;

    // Free samples: d = k*s for k = 1, 2, ...; strictly before a return,
    // up to and including range_max on a no-return beam.
    for (int k = 1;; ++k) {
      const double d = k * resolution;
      const bool keep = no_return ? d <= r + kEndpointTolerance : d < r - kEndpointTolerance;
      if (!keep) break;
      out.points.push_back({d * dir, z_free, false});
    }
    if (!no_return) {
      out.points.push_back({r * dir, z_occ, true});
    }
  }
  return out;
}

std::vector<SampledScan> SampleDataset(const Dataset& dataset, double resolution,
                                       double min_beam_range) {
  std::vector<SampledScan> out;
  out.reserve(dataset.size());
  for (const auto& rec : dataset.records) {
    out.push_back(SampleScan(rec, resolution, min_beam_range));
  }
  return out;
}

std::size_t TotalSamples(const std::vector<SampledScan>& scans) {
  std::size_t total = 0;
  for (const auto& s : scans) total += s.k();
  return total;
}

}  // namespace occslam
