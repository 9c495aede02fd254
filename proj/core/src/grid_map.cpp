#include "occslam/grid_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace occslam {

void GridGeometry::Validate() const {
  if (l_w < 1 || l_h < 1) {
    throw std::invalid_argument("GridGeometry: l_w and l_h must be >= 1");
  }
  if (!(resolution > 0.0) || !std::isfinite(resolution)) {
    throw std::invalid_argument("GridGeometry: resolution must be positive");
  }
  if (!origin.allFinite()) {
    throw std::invalid_argument("GridGeometry: non-finite origin");
  }
}

Eigen::Vector2d WorldToGrid(const Eigen::Vector2d& x_local, const Pose2& pose,
                            const GridGeometry& geom) {
  return (pose.R().transpose() * x_local + pose.t() - geom.origin) / geom.resolution;
}

Stencil MakeStencil(const GridGeometry& geom, const Eigen::Vector2d& p, MapModel model) {
  if (!geom.Contains(p)) {
    throw std::out_of_range("grid coordinate (" + std::to_string(p.x()) + ", " +
                            std::to_string(p.y()) + ") outside the map");
  }
  Stencil st;
  const int w = std::min(static_cast<int>(std::floor(p.x())), geom.l_w - 1);
  const int h = std::min(static_cast<int>(std::floor(p.y())), geom.l_h - 1);
  st.cell_w = w;
  st.cell_h = h;
  st.a0 = p.x() - w;
  st.b0 = p.y() - h;
  if (model == MapModel::kDiscrete) {
    const int nw = st.a0 < 0.5 ? w : w + 1;
    const int nh = st.b0 < 0.5 ? h : h + 1;
    st.size = 1;
    st.nodes[0] = geom.NodeIndex(nw, nh);
    st.weights[0] = 1.0;
    return st;
  }
  const double a1 = 1.0 - st.a0;
  const double b1 = 1.0 - st.b0;
  st.size = 4;
  st.nodes = {geom.NodeIndex(w, h), geom.NodeIndex(w + 1, h), geom.NodeIndex(w, h + 1),
              geom.NodeIndex(w + 1, h + 1)};
  st.weights = {a1 * b1, st.a0 * b1, a1 * st.b0, st.a0 * st.b0};
  return st;
}

GridMap::GridMap(const GridGeometry& geom)
    : geom_(geom), values_(Eigen::VectorXd::Zero(geom.NodeCount())) {
  geom_.Validate();
}

GridMap::GridMap(const GridGeometry& geom, Eigen::VectorXd values)
    : geom_(geom), values_(std::move(values)) {
  geom_.Validate();
  if (values_.size() != geom_.NodeCount()) {
    throw std::invalid_argument("GridMap: value count does not match geometry");
  }
}

double GridMap::Evaluate(const Stencil& stencil) const {
  double v = 0.0;
  for (int i = 0; i < stencil.size; ++i) v += stencil.weights[i] * values_[stencil.nodes[i]];
  return v;
}

double GridMap::Interpolate(const Eigen::Vector2d& p, MapModel model) const {
  return Evaluate(MakeStencil(geom_, p, model));
}

HitMap::HitMap(const GridGeometry& geom)
    : geom_(geom), counts_(Eigen::VectorXd::Zero(geom.NodeCount())) {
  geom_.Validate();
}

double HitMap::Evaluate(const Stencil& stencil) const {
  double v = 0.0;
  for (int i = 0; i < stencil.size; ++i) v += stencil.weights[i] * counts_[stencil.nodes[i]];
  return v;
}

double HitMap::At(const Eigen::Vector2d& p, MapModel model) const {
  return Evaluate(MakeStencil(geom_, p, model));
}

void HitMap::Scatter(const Stencil& stencil) {
  for (int i = 0; i < stencil.size; ++i) counts_[stencil.nodes[i]] += stencil.weights[i];
}

NodeGradients ComputeNodeGradients(const GridMap& map) {
  const GridGeometry& g = map.geometry();
  NodeGradients grads(g.NodeCount());
  for (int h = 0; h <= g.l_h; ++h) {
    for (int w = 0; w <= g.l_w; ++w) {
      double gx;
      if (w == 0) {
        gx = map.at(1, h) - map.at(0, h);
      } else if (w == g.l_w) {
        gx = map.at(w, h) - map.at(w - 1, h);
      } else {
        gx = 0.5 * (map.at(w + 1, h) - map.at(w - 1, h));
      }
      double gy;
      if (h == 0) {
        gy = map.at(w, 1) - map.at(w, 0);
      } else if (h == g.l_h) {
        gy = map.at(w, h) - map.at(w, h - 1);
      } else {
        gy = 0.5 * (map.at(w, h + 1) - map.at(w, h - 1));
      }
      grads[g.NodeIndex(w, h)] = Eigen::Vector2d(gx, gy);
    }
  }
  return grads;
}

Eigen::Vector2d InterpolateGradient(const NodeGradients& gradients, const Stencil& stencil) {
  Eigen::Vector2d g = Eigen::Vector2d::Zero();
  for (int i = 0; i < stencil.size; ++i) g += stencil.weights[i] * gradients[stencil.nodes[i]];
  return g;
}

Eigen::Vector2d InterpolateGradient(const GridMap& map, const NodeGradients& gradients,
                                    const Eigen::Vector2d& p, MapModel model) {
  if (gradients.size() != static_cast<std::size_t>(map.geometry().NodeCount())) {
    throw std::invalid_argument("InterpolateGradient: gradient count does not match map");
  }
  return InterpolateGradient(gradients, MakeStencil(map.geometry(), p, model));
}

Eigen::Vector2d BilinearDerivative(const GridMap& map, const Stencil& stencil) {
  if (stencil.size != 4) {
    return Eigen::Vector2d::Zero();
  }
  const auto& v = map.values();
  const double m00 = v[stencil.nodes[0]];
  const double m10 = v[stencil.nodes[1]];
  const double m01 = v[stencil.nodes[2]];
  const double m11 = v[stencil.nodes[3]];
  const double a0 = stencil.a0, a1 = 1.0 - stencil.a0;
  const double b0 = stencil.b0, b1 = 1.0 - stencil.b0;
  return {b1 * (m10 - m00) + b0 * (m11 - m01), a1 * (m01 - m00) + a0 * (m11 - m10)};
}

namespace {

void CheckPoseCount(const std::vector<SampledScan>& scans, const std::vector<Pose2>& poses) {
  if (scans.size() != poses.size()) {
    throw std::invalid_argument("scan count does not match pose count");
  }
}

}  // namespace

ScatterResult ScatterHits(const std::vector<SampledScan>& scans, const std::vector<Pose2>& poses,
                          const GridGeometry& geom, MapModel model) {
  CheckPoseCount(scans, poses);
  ScatterResult out{HitMap(geom), 0, 0};
  for (std::size_t i = 0; i < scans.size(); ++i) {
    for (const SamplePoint& sp : scans[i].points) {
      const Eigen::Vector2d p = WorldToGrid(sp.x_local, poses[i], geom);
      if (!geom.Contains(p)) {
        ++out.skipped;
        continue;
      }
      out.hits.Scatter(MakeStencil(geom, p, model));
      ++out.scattered;
    }
  }
  return out;
}

GridMap InitializeMap(const std::vector<SampledScan>& scans, const std::vector<Pose2>& poses,
                      const GridGeometry& geom, MapModel model) {
  CheckPoseCount(scans, poses);
  GridMap map(geom);
  Eigen::VectorXd& values = map.mutable_values();
  for (std::size_t i = 0; i < scans.size(); ++i) {
    for (const SamplePoint& sp : scans[i].points) {
      const Eigen::Vector2d p = WorldToGrid(sp.x_local, poses[i], geom);
      if (!geom.Contains(p)) continue;
      const Stencil st = MakeStencil(geom, p, model);
      for (int k = 0; k < st.size; ++k) values[st.nodes[k]] += st.weights[k] * sp.z;
    }
  }
  return map;
}

GridGeometry ComputeGeometry(const std::vector<SampledScan>& scans,
                             const std::vector<Pose2>& poses, double resolution, double margin) {
  CheckPoseCount(scans, poses);
  if (!(resolution > 0.0)) {
    throw std::invalid_argument("ComputeGeometry: resolution must be positive");
  }
  Eigen::Vector2d lo = Eigen::Vector2d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector2d hi = -lo;
  for (std::size_t i = 0; i < scans.size(); ++i) {
    lo = lo.cwiseMin(poses[i].t());
    hi = hi.cwiseMax(poses[i].t());
    for (const SamplePoint& sp : scans[i].points) {
      if (!sp.occupied) continue;
      const Eigen::Vector2d w = poses[i].ToWorld(sp.x_local);
      lo = lo.cwiseMin(w);
      hi = hi.cwiseMax(w);
    }
  }
  lo.array() -= margin;
  hi.array() += margin;
  GridGeometry geom;
  geom.origin = lo;
  geom.resolution = resolution;
  geom.l_w = std::max(1, static_cast<int>(std::ceil((hi.x() - lo.x()) / resolution)));
  geom.l_h = std::max(1, static_cast<int>(std::ceil((hi.y() - lo.y()) / resolution)));
  return geom;
}

}  // namespace occslam
