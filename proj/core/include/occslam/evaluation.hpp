#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "occslam/grid_map.hpp"
#include "occslam/pose.hpp"
#include "occslam/sampling.hpp"

namespace occslam {

struct PoseErrorReport {
  double mae_translation = 0.0;
  double mae_rotation = 0.0;
  double rmse_translation = 0.0;
  double rmse_rotation = 0.0;
  std::vector<double> translation_errors;  // per pose, meters
  std::vector<double> rotation_errors;     // per pose, radians
};

/// Per-pose ||t_est - t_gt|| and |wrap(theta_est - theta_gt)|, averaged
/// over all poses. No alignment: both trajectories share the pose-0 gauge.
PoseErrorReport PoseErrors(std::span<const Pose2> estimate, std::span<const Pose2> ground_truth);

enum class CellLabel : std::uint8_t { kFree = 0, kOccupied = 1, kUnknown = 2 };

/// Per-cell labels of an l_w x l_h map, cell (w, h) at index h * l_w + w.
struct CellClassification {
  int l_w = 0;
  int l_h = 0;
  std::vector<CellLabel> labels;
  std::vector<double> probabilities;  // from the evidence at the cell center
};

struct ClassifyOptions {
  double p_occupied = 0.6;
  double p_free = 0.4;
  double min_cell_hits = 0.5;  // summed over the four corner nodes
};

double EvidenceToProbability(double evidence);

/// Occupied when p >= p_occupied, free when p <= p_free, unknown otherwise
/// or when the cell has too few hits.
CellClassification ClassifyMap(const GridMap& map, const HitMap& hits,
                               const ClassifyOptions& options = {});

struct MapErrorReport {
  double auc = 0.0;
  // Rows: ground truth label, columns: estimated label, indexed by CellLabel.
  std::array<std::array<std::int64_t, 3>, 3> confusion{};
  std::array<double, 3> precision{};  // per estimated class; NaN if never predicted
  double known_precision = 0.0;       // correct among cells predicted free or occupied
  std::int64_t scored_cells = 0;      // cells entering the AUC
};

/// Area under the ROC curve of `scores` for the `positive` labels, with
/// ties counted half (Mann-Whitney). Throws when either class is empty.
double RocAuc(std::span<const double> scores, std::span<const std::uint8_t> positive);

/// Occupied-vs-free AUC over cells known in both maps, plus the confusion
/// matrix over all cells. Throws std::invalid_argument when the grids differ
/// or no cell is known in both.
MapErrorReport MapErrors(const CellClassification& estimate, const CellClassification& truth);

/// Map built from the same samples with ground-truth poses, at the given
/// geometry. Samples that project outside it are dropped.
struct ReferenceMap {
  GridMap map;
  HitMap hits;
};
ReferenceMap BuildReferenceMap(const std::vector<SampledScan>& scans,
                               const std::vector<Pose2>& ground_truth, const GridGeometry& geom,
                               MapModel model = MapModel::kContinuous);

}  // namespace occslam
