#pragma once

#include <string>

namespace occslam {

/// How map values are read at a continuous grid coordinate.
enum class MapModel {
  kContinuous,  // bilinear interpolation over the four surrounding nodes
  kDiscrete,    // nearest-node lookup (ablation)
};

/// How dM/dP is obtained for the pose Jacobian.
enum class GradientModel {
  // Bilinear blend of per-node central-difference gradients. Smooth across
  // cell boundaries; an approximation of the interpolant's derivative.
  kNodeBlend,
  // Exact derivative of the bilinear interpolant inside the cell.
  kExactBilinear,
};

std::string ToString(MapModel model);
std::string ToString(GradientModel model);
MapModel ParseMapModel(const std::string& name);
GradientModel ParseGradientModel(const std::string& name);

struct SolverConfig {
  double resolution_s = 0.1;  // meters between map nodes and between beam samples
  double w_z = 1.0;
  double w_o = 1.0;
  double w_s_initial = 0.1;
  double d_s = 10.0;  // annealing divisor
  int tau_s = 18;     // iterations between annealings
  int tau_k = 60;     // max iterations
  double tau_delta = 1e-8;
  double w_s_floor = 1e-4;
  double map_margin = 1.0;  // meters added around the initial map extent
  bool step_control = true;
  // Re-solve the node values for every trial pose update (the residual is
  // linear in them) instead of taking the map part of the joint step.
  bool map_refit = true;
  int max_halvings = 8;

  double tikhonov = 1e-8;
  double min_hits = 1e-6;  // samples with N(P) below this are dropped
  double min_beam_range = 0.1;

  MapModel map_model = MapModel::kContinuous;
  GradientModel gradient_model = GradientModel::kNodeBlend;
  bool compute_covariance = false;
  int threads = 1;

  /// Throws std::invalid_argument on out-of-range fields.
  void Validate() const;

  /// Smoothing weight in effect at iteration k (k >= 1):
  /// max(w_s_initial / d_s^floor(k / tau_s), w_s_floor).
  double SmoothingWeightAt(int k) const;
};

}  // namespace occslam
