#include "occslam/experiment.hpp"

#include <random>
#include <stdexcept>

#include "occslam/sampling.hpp"

namespace occslam {

std::vector<Pose2> PerturbPoses(const std::vector<Pose2>& poses, double sigma_xy,
                                double sigma_theta, std::uint64_t seed) {
  if (!(sigma_xy >= 0.0) || !(sigma_theta >= 0.0)) {
    throw std::invalid_argument("PerturbPoses: sigmas must be >= 0");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<Pose2> out;
  out.reserve(poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) {
    if (i == 0) {
      out.push_back(poses[0]);
      continue;
    }
    const double dx = sigma_xy * unit(rng);
    const double dy = sigma_xy * unit(rng);
    const double dth = sigma_theta * unit(rng);
    out.emplace_back(poses[i].x() + dx, poses[i].y() + dy, WrapAngle(poses[i].theta() + dth));
  }
  return out;
}

Metrics EvaluateAgainstGroundTruth(const Dataset& dataset, const std::vector<Pose2>& poses,
                                   const GridMap& map, const HitMap& hits,
                                   const SolverConfig& config, bool with_map,
                                   const ClassifyOptions& classify) {
  if (!dataset.HasGroundTruth()) {
    throw std::invalid_argument("dataset has no ground-truth poses");
  }
  const std::vector<Pose2> gt = Reanchor(dataset.GroundTruth());
  Metrics metrics{PoseErrors(poses, gt), std::nullopt};
  if (with_map) {
    const auto scans = SampleDataset(dataset, map.geometry().resolution, config.min_beam_range);
    const ReferenceMap ref = BuildReferenceMap(scans, gt, map.geometry(), MapModel::kContinuous);
    metrics.map = MapErrors(ClassifyMap(map, hits, classify), ClassifyMap(ref.map, ref.hits, classify));
  }
  return metrics;
}

}  // namespace occslam
