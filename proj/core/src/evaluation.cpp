#include "occslam/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace occslam {

PoseErrorReport PoseErrors(std::span<const Pose2> estimate, std::span<const Pose2> ground_truth) {
  if (estimate.size() != ground_truth.size()) {
    throw std::invalid_argument("PoseErrors: trajectories have different lengths (" +
                                std::to_string(estimate.size()) + " vs " +
                                std::to_string(ground_truth.size()) + ")");
  }
  if (estimate.empty()) {
    throw std::invalid_argument("PoseErrors: empty trajectories");
  }
  PoseErrorReport rep;
  double sum_t = 0.0, sum_r = 0.0, sq_t = 0.0, sq_r = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    const double et = (estimate[i].t() - ground_truth[i].t()).norm();
    const double er = std::abs(WrapAngle(estimate[i].theta() - ground_truth[i].theta()));
    rep.translation_errors.push_back(et);
    rep.rotation_errors.push_back(er);
    sum_t += et;
    sum_r += er;
    sq_t += et * et;
    sq_r += er * er;
  }
  const double n = static_cast<double>(estimate.size());
  rep.mae_translation = sum_t / n;
  rep.mae_rotation = sum_r / n;
  rep.rmse_translation = std::sqrt(sq_t / n);
  rep.rmse_rotation = std::sqrt(sq_r / n);
  return rep;
}

double EvidenceToProbability(double evidence) {
  // Logistic function written to avoid overflow for large |evidence|.
  if (evidence >= 0.0) {
    return 1.0 / (1.0 + std::exp(-evidence));
  }
  const double e = std::exp(evidence);
  return e / (1.0 + e);
}

CellClassification ClassifyMap(const GridMap& map, const HitMap& hits,
                               const ClassifyOptions& options) {
  if (!(0.0 < options.p_free && options.p_free < options.p_occupied &&
        options.p_occupied < 1.0)) {
    throw std::invalid_argument("ClassifyMap: need 0 < p_free < p_occupied < 1");
  }
  if (!(map.geometry() == hits.geometry())) {
    throw std::invalid_argument("ClassifyMap: map and hit map geometries differ");
  }
  const GridGeometry& g = map.geometry();
  CellClassification out;
  out.l_w = g.l_w;
  out.l_h = g.l_h;
  out.labels.resize(static_cast<std::size_t>(g.l_w) * g.l_h);
  out.probabilities.resize(out.labels.size());
  for (int h = 0; h < g.l_h; ++h) {
    for (int w = 0; w < g.l_w; ++w) {
      const std::size_t idx = static_cast<std::size_t>(h) * g.l_w + w;
      const Eigen::Vector2d center(w + 0.5, h + 0.5);
      const double p = EvidenceToProbability(map.Interpolate(center));
      const double cell_hits = hits.counts()[g.NodeIndex(w, h)] +
                               hits.counts()[g.NodeIndex(w + 1, h)] +
                               hits.counts()[g.NodeIndex(w, h + 1)] +
                               hits.counts()[g.NodeIndex(w + 1, h + 1)];
      out.probabilities[idx] = p;
      if (cell_hits < options.min_cell_hits) {
        out.labels[idx] = CellLabel::kUnknown;
      } else if (p >= options.p_occupied) {
        out.labels[idx] = CellLabel::kOccupied;
      } else if (p <= options.p_free) {
        out.labels[idx] = CellLabel::kFree;
      } else {
        out.labels[idx] = CellLabel::kUnknown;
      }
    }
  }
  return out;
}

double RocAuc(std::span<const double> scores, std::span<const std::uint8_t> positive) {
  if (scores.size() != positive.size()) {
    throw std::invalid_argument("RocAuc: size mismatch");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Average ranks over ties, then the Mann-Whitney U statistic.
  double rank_sum_pos = 0.0;
  std::size_t n_pos = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (positive[order[k]]) {
        rank_sum_pos += avg_rank;
        ++n_pos;
      }
    }
    i = j + 1;
  }
  const std::size_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw std::invalid_argument("RocAuc: need both positive and negative samples");
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

MapErrorReport MapErrors(const CellClassification& estimate, const CellClassification& truth) {
  if (estimate.l_w != truth.l_w || estimate.l_h != truth.l_h ||
      estimate.labels.size() != truth.labels.size()) {
    throw std::invalid_argument("MapErrors: classifications cover different grids");
  }
  MapErrorReport rep;
  std::vector<double> scores;
  std::vector<std::uint8_t> positive;
  for (std::size_t i = 0; i < truth.labels.size(); ++i) {
    const auto gt = static_cast<int>(truth.labels[i]);
    const auto est = static_cast<int>(estimate.labels[i]);
    ++rep.confusion[gt][est];
    if (truth.labels[i] != CellLabel::kUnknown && estimate.labels[i] != CellLabel::kUnknown) {
      scores.push_back(estimate.probabilities[i]);
      positive.push_back(truth.labels[i] == CellLabel::kOccupied ? 1 : 0);
    }
  }
  if (scores.empty()) {
    throw std::invalid_argument("MapErrors: no cell is known in both maps");
  }
  rep.scored_cells = static_cast<std::int64_t>(scores.size());
  rep.auc = RocAuc(scores, positive);

  std::int64_t correct_known = 0, predicted_known = 0;
  for (int est = 0; est < 3; ++est) {
    std::int64_t predicted = 0;
    for (int gt = 0; gt < 3; ++gt) predicted += rep.confusion[gt][est];
    rep.precision[est] = predicted > 0 ? static_cast<double>(rep.confusion[est][est]) / predicted
                                       : std::numeric_limits<double>::quiet_NaN();
    if (est != static_cast<int>(CellLabel::kUnknown)) {
      correct_known += rep.confusion[est][est];
      predicted_known += predicted;
    }
  }
  rep.known_precision =
      predicted_known > 0 ? static_cast<double>(correct_known) / predicted_known : 0.0;
  return rep;
}

ReferenceMap BuildReferenceMap(const std::vector<SampledScan>& scans,
                               const std::vector<Pose2>& ground_truth, const GridGeometry& geom,
                               MapModel model) {
  return {InitializeMap(scans, ground_truth, geom, model),
          ScatterHits(scans, ground_truth, geom, model).hits};
}

}  // namespace occslam
