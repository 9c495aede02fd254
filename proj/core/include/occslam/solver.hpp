#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "occslam/config.hpp"
#include "occslam/dataset.hpp"
#include "occslam/grid_map.hpp"
#include "occslam/linear.hpp"
#include "occslam/pose.hpp"

namespace occslam {

struct IterationInfo {
  int k = 0;
  double cost = 0.0;  // after the step, under w_s
  double step_sq_norm = 0.0;
  double w_s = 0.0;
  std::size_t skipped_samples = 0;
  int halvings = 0;
  bool accepted = true;
};

using ProgressCallback = std::function<void(const IterationInfo&)>;

struct SolveReport {
  bool converged = false;
  std::string stop_reason;
  int iterations = 0;
  double final_cost = 0.0;
  // cost_history[0] is the initial cost, cost_history[k] the cost after
  // iteration k, each under the smoothing weight of that iteration.
  std::vector<double> cost_history;
  std::vector<double> w_s_history;  // same indexing as cost_history
  std::vector<double> step_sq_norms;  // applied step, one per iteration (0 if rejected)
  // Full Gauss-Newton step before step control; NaN while a stalled window
  // waits for the next annealing.
  std::vector<double> gn_step_sq_norms;
  std::vector<std::size_t> skipped_samples_per_iter;  // one per iteration
  std::optional<CovarianceSummary> covariance;
};

struct SolveResult {
  std::vector<Pose2> poses;
  GridMap map;
  HitMap hits;
  SolveReport report;
};

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Joint Gauss-Newton over robot poses and map node evidence. The initial
/// poses are re-anchored so pose 0 is the origin, which then stays fixed.
/// Throws SolverError when the linear solve fails after regularization or
/// the cost becomes non-finite.
SolveResult Solve(const Dataset& dataset, const std::vector<Pose2>& init_poses,
                  const SolverConfig& config, const ProgressCallback& progress = {});

}  // namespace occslam
