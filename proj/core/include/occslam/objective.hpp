#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "occslam/config.hpp"
#include "occslam/grid_map.hpp"
#include "occslam/pose.hpp"
#include "occslam/sampling.hpp"

namespace occslam {

/// Column layout of the stacked state [pose_1, ..., pose_n, M(m_00), ...].
/// Pose 0 is the gauge and has no columns.
struct StateLayout {
  int n_poses = 0;  // variable poses, excluding pose 0
  int n_nodes = 0;

  int Dim() const { return 3 * n_poses + n_nodes; }
  /// First column of pose i, or -1 for the fixed pose 0.
  int PoseOffset(int i) const { return i == 0 ? -1 : 3 * (i - 1); }
  int NodeOffset(int node) const { return 3 * n_poses + node; }
};

struct ObservationOptions {
  MapModel map_model = MapModel::kContinuous;
  GradientModel gradient_model = GradientModel::kNodeBlend;
  double min_hits = 1e-6;
};

/// Residual Z - M(P)/N(P) and its Jacobian rows for one sample. The hit
/// value N(P) is held constant when differentiating.
struct ObservationTerm {
  double residual = 0.0;
  double hits = 0.0;
  Eigen::RowVector3d jac_pose = Eigen::RowVector3d::Zero();
  Stencil stencil;
  std::array<double, 4> jac_map{};
};

enum class ObservationStatus { kOk, kOutOfBounds, kTooFewHits };

/// Evaluates the observation term. When `node_gradients` is null and the
/// gradient model needs them, jac_pose is left at zero.
ObservationStatus EvaluateObservation(const SamplePoint& sample, const Pose2& pose,
                                      const GridMap& map, const NodeGradients* node_gradients,
                                      const HitMap& hits, const ObservationOptions& options,
                                      ObservationTerm* term);

/// Z - M(P)/N(P); empty when P is out of bounds or N(P) < min_hits.
std::optional<double> ObservationResidual(const SamplePoint& sample, const Pose2& pose,
                                          const GridMap& map, const HitMap& hits,
                                          const ObservationOptions& options = {});

/// d(residual)/d(t, theta) = -(1/N) dM/dP (1/s) [I | (R')^T x]. Throws
/// std::domain_error when the sample is excluded.
Eigen::RowVector3d ObservationJacobianPose(const SamplePoint& sample, const Pose2& pose,
                                           const GridMap& map,
                                           const NodeGradients& node_gradients,
                                           const HitMap& hits,
                                           const ObservationOptions& options = {});

struct MapJacobianRow {
  std::array<int, 4> nodes{};
  std::array<double, 4> values{};
  int size = 0;
};

/// d(residual)/d(node values) = -weights / N(P). Throws std::domain_error
/// when the sample is excluded.
MapJacobianRow ObservationJacobianMap(const SamplePoint& sample, const Pose2& pose,
                                      const HitMap& hits, const ObservationOptions& options = {});

/// [O^t - R_prev (t_next - t_prev); wrap(O^theta - theta_next + theta_prev)].
Eigen::Vector3d OdometryResidual(const OdomIncrement& odom, const Pose2& prev, const Pose2& next);

/// dF^O/d(t_prev, theta_prev, t_next, theta_next) for the odometry model
/// F^O = [R_prev (t_next - t_prev); theta_next - theta_prev]. The residual
/// Jacobian is the negation.
Eigen::Matrix<double, 3, 6> OdometryJacobian(const Pose2& prev, const Pose2& next);

using SmoothingMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Difference operator over neighbouring nodes: one row per (node, right
/// neighbour) and (node, upper neighbour) pair, (+1, -1) entries,
/// 2 l_w l_h + l_w + l_h rows.
SmoothingMatrix BuildSmoothingMatrix(const GridGeometry& geom);

struct TermWeights {
  double w_z = 1.0;
  double w_o = 1.0;
  double w_s = 0.1;
};

struct CostBreakdown {
  double observation = 0.0;  // unweighted sum of squares
  double odometry = 0.0;     // sum of Mahalanobis norms
  double smoothing = 0.0;    // ||A M||^2
  double total = 0.0;        // weighted sum
  std::size_t used = 0;
  std::size_t out_of_bounds = 0;
  std::size_t too_few_hits = 0;
  std::size_t skipped() const { return out_of_bounds + too_few_hits; }
};

/// Gauss-Newton normal equations (J^T W J) delta = -J^T W F at one state.
struct NormalSystem {
  StateLayout layout;
  Eigen::SparseMatrix<double> lhs;  // full symmetric storage
  Eigen::VectorXd rhs;
  CostBreakdown cost;
};

/// Fixed data of one problem instance: sampled scans, odometry, and the
/// smoothing operator.
class Objective {
 public:
  /// `odometry[i]` is the increment from pose i-1 to pose i; entry 0 and
  /// all entries when odometry is unused must be empty.
  Objective(std::vector<SampledScan> scans, std::vector<std::optional<OdomIncrement>> odometry,
            const GridGeometry& geom, ObservationOptions options);

  const std::vector<SampledScan>& scans() const { return scans_; }
  const GridGeometry& geometry() const { return geom_; }
  const SmoothingMatrix& smoothing() const { return smoothing_; }
  const ObservationOptions& options() const { return options_; }
  StateLayout Layout() const;
  bool HasOdometry() const { return has_odometry_; }

  CostBreakdown Cost(const std::vector<Pose2>& poses, const GridMap& map, const HitMap& hits,
                     const TermWeights& weights, int threads = 1) const;

  NormalSystem Assemble(const std::vector<Pose2>& poses, const GridMap& map, const HitMap& hits,
                        const TermWeights& weights, int threads = 1) const;

 private:
  std::vector<SampledScan> scans_;
  std::vector<std::optional<OdomIncrement>> odometry_;
  std::vector<Eigen::Matrix3d> information_;  // sigma^-1 per edge
  bool has_odometry_ = false;
  GridGeometry geom_;
  SmoothingMatrix smoothing_;
  ObservationOptions options_;
};

}  // namespace occslam
