#pragma once

#include <cstdint>
#include <vector>

#include "occslam/dataset.hpp"
#include "occslam/evaluation.hpp"
#include "occslam/io.hpp"
#include "occslam/solver.hpp"

namespace occslam {

/// Adds N(0, sigma_xy) to x and y and N(0, sigma_theta) to theta of every
/// pose except pose 0, which stays at the origin.
std::vector<Pose2> PerturbPoses(const std::vector<Pose2>& poses, double sigma_xy,
                                double sigma_theta, std::uint64_t seed);

/// Pose errors against the dataset's ground truth and, with `with_map`, the
/// estimated map against the map built from ground-truth poses at the same
/// geometry.
Metrics EvaluateAgainstGroundTruth(const Dataset& dataset, const std::vector<Pose2>& poses,
                                   const GridMap& map, const HitMap& hits,
                                   const SolverConfig& config, bool with_map = true,
                                   const ClassifyOptions& classify = {});

}  // namespace occslam
