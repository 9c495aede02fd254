#include "occslam/solver.hpp"

#include <cmath>
#include <limits>
#include <utility>

#include "occslam/objective.hpp"
#include "occslam/sampling.hpp"

namespace occslam {

namespace {

std::vector<Pose2> StepPoses(const std::vector<Pose2>& poses, const StateLayout& layout,
                             const Eigen::VectorXd& delta, double alpha) {
  std::vector<Pose2> out;
  out.reserve(poses.size());
  out.push_back(poses.front());
  for (int i = 1; i <= layout.n_poses; ++i) {
    out.push_back(poses[i].Plus(alpha * delta.segment<3>(layout.PoseOffset(i))));
  }
  return out;
}

// True when no annealing after iteration k can change w_s any further.
bool WeightSettled(const SolverConfig& config, int k) {
  const int next_boundary = (k / config.tau_s + 1) * config.tau_s;
  return next_boundary > config.tau_k ||
         config.SmoothingWeightAt(next_boundary) == config.SmoothingWeightAt(k);
}

// Exact minimiser over the node values for fixed poses and hit map: the
// residuals are linear in M, so one Gauss-Newton step on the map block is
// enough.
GridMap RefitMap(const Objective& objective, const std::vector<Pose2>& poses, const GridMap& map,
                 const HitMap& hits, const TermWeights& weights, const SolverConfig& config) {
  const StateLayout layout = objective.Layout();
  const NormalSystem system = objective.Assemble(poses, map, hits, weights, config.threads);
  const int off = layout.NodeOffset(0);
  const Eigen::SparseMatrix<double> block =
      system.lhs.bottomRightCorner(layout.n_nodes, layout.n_nodes);
  const LinearSolution step = SolveLinear(block, system.rhs.segment(off, layout.n_nodes),
                                          config.tikhonov);
  return GridMap(map.geometry(), map.values() + step.x);
}

}  // namespace

SolveResult Solve(const Dataset& dataset, const std::vector<Pose2>& init_poses,
                  const SolverConfig& config, const ProgressCallback& progress) {
  config.Validate();
  dataset.Validate();
  if (init_poses.size() != dataset.size()) {
    throw std::invalid_argument("Solve: initial pose count does not match record count");
  }

  std::vector<Pose2> poses = Reanchor(init_poses);
  std::vector<SampledScan> scans =
      SampleDataset(dataset, config.resolution_s, config.min_beam_range);
  const GridGeometry geom =
      ComputeGeometry(scans, poses, config.resolution_s, config.map_margin);

  std::vector<std::optional<OdomIncrement>> odometry(dataset.size());
  if (config.w_o > 0.0 && dataset.HasOdometry()) {
    for (std::size_t i = 1; i < dataset.size(); ++i) odometry[i] = dataset.records[i].odom;
  }
  const ObservationOptions obs_options{config.map_model, config.gradient_model, config.min_hits};
  const Objective objective(std::move(scans), std::move(odometry), geom, obs_options);
  const StateLayout layout = objective.Layout();
  const MapModel model = config.map_model;

  GridMap map = InitializeMap(objective.scans(), poses, geom, model);
  ScatterResult scatter = ScatterHits(objective.scans(), poses, geom, model);
  HitMap hits = std::move(scatter.hits);

  TermWeights weights{config.w_z, config.w_o, config.SmoothingWeightAt(1)};
  if (config.map_refit) map = RefitMap(objective, poses, map, hits, weights, config);
  CostBreakdown current = objective.Cost(poses, map, hits, weights, config.threads);
  if (!std::isfinite(current.total)) {
    throw SolverError("initial cost is not finite");
  }

  SolveReport report;
  report.cost_history.push_back(current.total);
  report.w_s_history.push_back(weights.w_s);
  report.stop_reason = "max iterations";
  bool window_stalled = false;

  for (int k = 1; k <= config.tau_k; ++k) {
    const double w_s = config.SmoothingWeightAt(k);
    if (w_s != weights.w_s) {
      weights.w_s = w_s;
      window_stalled = false;
      current = objective.Cost(poses, map, hits, weights, config.threads);
    }

    IterationInfo info;
    info.k = k;
    info.w_s = w_s;
    double gn_step_sq_norm = std::numeric_limits<double>::quiet_NaN();  // no system solved

    if (window_stalled) {
      // No descent found under this weight; wait for the next annealing.
      info.cost = current.total;
      info.accepted = false;
      info.skipped_samples = current.skipped();
    } else {
      const NormalSystem system = objective.Assemble(poses, map, hits, weights, config.threads);
      LinearSolution step;
      try {
        step = SolveLinear(system.lhs, system.rhs, config.tikhonov);
      } catch (const LinearSolveError& e) {
        throw SolverError(std::string("iteration ") + std::to_string(k) + ": " + e.what());
      }

      const Eigen::VectorXd& delta = step.x;
      gn_step_sq_norm = delta.squaredNorm();
      double alpha = 1.0;
      const int max_halvings = config.step_control ? config.max_halvings : 0;
      bool accepted = false;
      double applied_sq = 0.0;
      for (int h = 0; h <= max_halvings; ++h) {
        std::vector<Pose2> trial_poses = StepPoses(poses, layout, delta, alpha);
        GridMap trial_map(geom, map.values() + alpha * delta.tail(layout.n_nodes));
        ScatterResult trial_scatter = ScatterHits(objective.scans(), trial_poses, geom, model);
        if (config.map_refit) {
          trial_map = RefitMap(objective, trial_poses, trial_map, trial_scatter.hits, weights, config);
        }
        const CostBreakdown trial_cost = objective.Cost(trial_poses, trial_map,
                                                        trial_scatter.hits, weights,
                                                        config.threads);
        const bool finite = std::isfinite(trial_cost.total);
        if (!config.step_control && !finite) {
          throw SolverError("iteration " + std::to_string(k) + ": cost is not finite");
        }
        if (finite && (!config.step_control || trial_cost.total <= current.total)) {
          // The map part of the applied step is the actual change, which
          // differs from alpha * delta when the map is refitted.
          applied_sq = alpha * alpha * delta.head(3 * layout.n_poses).squaredNorm() +
                       (trial_map.values() - map.values()).squaredNorm();
          poses = std::move(trial_poses);
          map = std::move(trial_map);
          hits = std::move(trial_scatter.hits);
          current = trial_cost;
          info.halvings = h;
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      info.accepted = accepted;
      info.cost = current.total;
      info.skipped_samples = current.skipped();
      info.step_sq_norm = applied_sq;
      window_stalled = !accepted;
    }

    report.cost_history.push_back(info.cost);
    report.w_s_history.push_back(w_s);
    report.step_sq_norms.push_back(info.step_sq_norm);
    report.gn_step_sq_norms.push_back(gn_step_sq_norm);
    report.skipped_samples_per_iter.push_back(info.skipped_samples);
    report.iterations = k;
    if (progress) progress(info);

    if (info.accepted && info.step_sq_norm < config.tau_delta) {
      report.converged = true;
      report.stop_reason = "step below threshold";
      break;
    }
    if (!info.accepted && WeightSettled(config, k)) {
      report.converged = true;
      report.stop_reason = "no further descent";
      break;
    }
  }
  report.final_cost = current.total;

  if (config.compute_covariance) {
    const NormalSystem system = objective.Assemble(poses, map, hits, weights, config.threads);
    Eigen::SparseMatrix<double> info_matrix = system.lhs;
    if (config.tikhonov > 0.0) {
      for (int i = 0; i < info_matrix.rows(); ++i) info_matrix.coeffRef(i, i) += config.tikhonov;
    }
    report.covariance = ExtractCovariance(info_matrix, layout);
  }

  return {std::move(poses), std::move(map), std::move(hits), std::move(report)};
}

}  // namespace occslam
