#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "occslam/config.hpp"
#include "occslam/pose.hpp"
#include "occslam/sampling.hpp"

namespace occslam {

/// Node lattice: node (w, h) sits at origin + s * (w, h), for
/// 0 <= w <= l_w and 0 <= h <= l_h. Nodes are stored with w varying fastest.
struct GridGeometry {
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();  // t_0, world position of node (0, 0)
  double resolution = 1.0;
  int l_w = 1;
  int l_h = 1;

  int Width() const { return l_w + 1; }
  int Height() const { return l_h + 1; }
  int NodeCount() const { return (l_w + 1) * (l_h + 1); }
  int NodeIndex(int w, int h) const { return h * (l_w + 1) + w; }
  bool Contains(const Eigen::Vector2d& p) const {
    return p.x() >= 0.0 && p.x() <= l_w && p.y() >= 0.0 && p.y() <= l_h;
  }
  void Validate() const;
  bool operator==(const GridGeometry&) const = default;
};

/// Continuous grid coordinate of a laser-frame point seen from `pose`:
/// (R^T x_local + t - t_0) / s.
Eigen::Vector2d WorldToGrid(const Eigen::Vector2d& x_local, const Pose2& pose,
                            const GridGeometry& geom);

/// The nodes and weights that define a map read at P. For the continuous
/// model the order is [m_wh, m_(w+1)h, m_w(h+1), m_(w+1)(h+1)] with weights
/// [a1 b1, a0 b1, a1 b0, a0 b0]; the discrete model uses only the nearest node.
struct Stencil {
  std::array<int, 4> nodes{};
  std::array<double, 4> weights{};
  int size = 0;
  int cell_w = 0;  // lower-left node of the containing cell
  int cell_h = 0;
  double a0 = 0.0;  // x - w
  double b0 = 0.0;  // y - h
};

/// Throws std::out_of_range when P lies outside [0, l_w] x [0, l_h].
Stencil MakeStencil(const GridGeometry& geom, const Eigen::Vector2d& p,
                    MapModel model = MapModel::kContinuous);

using NodeGradients = std::vector<Eigen::Vector2d>;

class GridMap {
 public:
  GridMap() = default;
  explicit GridMap(const GridGeometry& geom);
  GridMap(const GridGeometry& geom, Eigen::VectorXd values);

  const GridGeometry& geometry() const { return geom_; }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd& mutable_values() { return values_; }
  double at(int w, int h) const { return values_[geom_.NodeIndex(w, h)]; }
  double& at(int w, int h) { return values_[geom_.NodeIndex(w, h)]; }

  double Interpolate(const Eigen::Vector2d& p, MapModel model = MapModel::kContinuous) const;
  double Evaluate(const Stencil& stencil) const;

 private:
  GridGeometry geom_;
  Eigen::VectorXd values_;
};

/// Equivalent hit multipliers at the nodes.
class HitMap {
 public:
  HitMap() = default;
  explicit HitMap(const GridGeometry& geom);

  const GridGeometry& geometry() const { return geom_; }
  const Eigen::VectorXd& counts() const { return counts_; }
  Eigen::VectorXd& mutable_counts() { return counts_; }
  double Total() const { return counts_.sum(); }

  /// N(P): bilinear (or nearest-node) read of the counts.
  double At(const Eigen::Vector2d& p, MapModel model = MapModel::kContinuous) const;
  double Evaluate(const Stencil& stencil) const;

  /// Adds one unit hit at P, distributed by the stencil weights.
  void Scatter(const Stencil& stencil);

 private:
  GridGeometry geom_;
  Eigen::VectorXd counts_;
};

/// Central differences at interior nodes, one-sided at the border, in grid
/// units (per node spacing).
NodeGradients ComputeNodeGradients(const GridMap& map);

/// Bilinear blend of the four surrounding node gradients.
Eigen::Vector2d InterpolateGradient(const GridMap& map, const NodeGradients& gradients,
                                    const Eigen::Vector2d& p,
                                    MapModel model = MapModel::kContinuous);
Eigen::Vector2d InterpolateGradient(const NodeGradients& gradients, const Stencil& stencil);

/// Exact derivative of the bilinear interpolant inside the containing cell.
Eigen::Vector2d BilinearDerivative(const GridMap& map, const Stencil& stencil);

struct ScatterResult {
  HitMap hits;
  std::size_t scattered = 0;
  std::size_t skipped = 0;  // projected outside the grid
};

/// Hit map N for the given poses: each in-bounds sample adds one hit spread
/// by its stencil weights.
ScatterResult ScatterHits(const std::vector<SampledScan>& scans, const std::vector<Pose2>& poses,
                          const GridGeometry& geom, MapModel model = MapModel::kContinuous);

/// Additive evidence grid: every node accumulates weight * z of the samples
/// around it, so that M(P) / N(P) is the local average evidence.
GridMap InitializeMap(const std::vector<SampledScan>& scans, const std::vector<Pose2>& poses,
                      const GridGeometry& geom, MapModel model = MapModel::kContinuous);

/// Bounding box of all projected occupied endpoints and robot positions,
/// grown by `margin` meters, with the origin at its lower-left corner.
GridGeometry ComputeGeometry(const std::vector<SampledScan>& scans,
                             const std::vector<Pose2>& poses, double resolution, double margin);

}  // namespace occslam
