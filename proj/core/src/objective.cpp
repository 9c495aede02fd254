#include "occslam/objective.hpp"

#include <algorithm>
#include <stdexcept>
#include <thread>
#include <utility>

#include <Eigen/LU>

namespace occslam {

ObservationStatus EvaluateObservation(const SamplePoint& sample, const Pose2& pose,
                                      const GridMap& map, const NodeGradients* node_gradients,
                                      const HitMap& hits, const ObservationOptions& options,
                                      ObservationTerm* term) {
  const GridGeometry& geom = map.geometry();
  const Eigen::Vector2d p = WorldToGrid(sample.x_local, pose, geom);
  if (!geom.Contains(p)) {
    return ObservationStatus::kOutOfBounds;
  }
  term->stencil = MakeStencil(geom, p, options.map_model);
  const Stencil& st = term->stencil;
  term->hits = hits.Evaluate(st);
  if (term->hits < options.min_hits) {
    return ObservationStatus::kTooFewHits;
  }
  const double inv_n = 1.0 / term->hits;
  term->residual = sample.z - map.Evaluate(st) * inv_n;
  for (int k = 0; k < st.size; ++k) term->jac_map[k] = -st.weights[k] * inv_n;

  Eigen::Vector2d grad = Eigen::Vector2d::Zero();
  const bool exact = options.gradient_model == GradientModel::kExactBilinear &&
                     options.map_model == MapModel::kContinuous;
  if (exact) {
    grad = BilinearDerivative(map, st);
  } else if (node_gradients != nullptr) {
    grad = InterpolateGradient(*node_gradients, st);
  }
  // dP/d(t, theta) = (1/s) [I | (R')^T x]
  const Eigen::Vector2d dp_dtheta =
      pose.dR().transpose() * sample.x_local;
  const double scale = -inv_n / geom.resolution;
  term->jac_pose << scale * grad.x(), scale * grad.y(), scale * grad.dot(dp_dtheta);
  return ObservationStatus::kOk;
}

std::optional<double> ObservationResidual(const SamplePoint& sample, const Pose2& pose,
                                          const GridMap& map, const HitMap& hits,
                                          const ObservationOptions& options) {
  ObservationTerm term;
  if (EvaluateObservation(sample, pose, map, nullptr, hits, options, &term) !=
      ObservationStatus::kOk) {
    return std::nullopt;
  }
  return term.residual;
}

Eigen::RowVector3d ObservationJacobianPose(const SamplePoint& sample, const Pose2& pose,
                                           const GridMap& map,
                                           const NodeGradients& node_gradients,
                                           const HitMap& hits,
                                           const ObservationOptions& options) {
  ObservationTerm term;
  if (EvaluateObservation(sample, pose, map, &node_gradients, hits, options, &term) !=
      ObservationStatus::kOk) {
    throw std::domain_error("observation excluded: out of bounds or too few hits");
  }
  return term.jac_pose;
}

MapJacobianRow ObservationJacobianMap(const SamplePoint& sample, const Pose2& pose,
                                      const HitMap& hits, const ObservationOptions& options) {
  const GridGeometry& geom = hits.geometry();
  const Eigen::Vector2d p = WorldToGrid(sample.x_local, pose, geom);
  if (!geom.Contains(p)) {
    throw std::domain_error("observation excluded: out of bounds");
  }
  const Stencil st = MakeStencil(geom, p, options.map_model);
  const double n = hits.Evaluate(st);
  if (n < options.min_hits) {
    throw std::domain_error("observation excluded: too few hits");
  }
  // Nodes with zero weight (P on a cell edge or node) carry no entry.
  MapJacobianRow row;
  for (int k = 0; k < st.size; ++k) {
    if (st.weights[k] == 0.0) continue;
    row.nodes[row.size] = st.nodes[k];
    row.values[row.size] = -st.weights[k] / n;
    ++row.size;
  }
  return row;
}

Eigen::Vector3d OdometryResidual(const OdomIncrement& odom, const Pose2& prev, const Pose2& next) {
  Eigen::Vector3d r;
  r.head<2>() = odom.dt - prev.R() * (next.t() - prev.t());
  r.z() = WrapAngle(odom.dtheta - next.theta() + prev.theta());
  return r;
}

Eigen::Matrix<double, 3, 6> OdometryJacobian(const Pose2& prev, const Pose2& next) {
  // Columns: t_prev (2), theta_prev, t_next (2), theta_next. The theta_prev
  // column is R'_prev (t_next - t_prev); central differences confirm it.
  const Eigen::Matrix2d r = prev.R();
  Eigen::Matrix<double, 3, 6> j = Eigen::Matrix<double, 3, 6>::Zero();
  j.block<2, 2>(0, 0) = -r;
  j.block<2, 1>(0, 2) = prev.dR() * (next.t() - prev.t());
  j.block<2, 2>(0, 3) = r;
  j(2, 2) = -1.0;
  j(2, 5) = 1.0;
  return j;
}

SmoothingMatrix BuildSmoothingMatrix(const GridGeometry& geom) {
  geom.Validate();
  const int rows = 2 * geom.l_w * geom.l_h + geom.l_w + geom.l_h;
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(2 * static_cast<std::size_t>(rows));
  int row = 0;
  auto add = [&](int a, int b) {
    triplets.emplace_back(row, a, 1.0);
    triplets.emplace_back(row, b, -1.0);
    ++row;
  };
  for (int h = 0; h <= geom.l_h; ++h) {
    for (int w = 0; w <= geom.l_w; ++w) {
      const int self = geom.NodeIndex(w, h);
      if (w < geom.l_w) add(self, geom.NodeIndex(w + 1, h));
      if (h < geom.l_h) add(self, geom.NodeIndex(w, h + 1));
    }
  }
  SmoothingMatrix a(rows, geom.NodeCount());
  a.setFromTriplets(triplets.begin(), triplets.end());
  return a;
}

Objective::Objective(std::vector<SampledScan> scans,
                     std::vector<std::optional<OdomIncrement>> odometry, const GridGeometry& geom,
                     ObservationOptions options)
    : scans_(std::move(scans)),
      odometry_(std::move(odometry)),
      geom_(geom),
      smoothing_(BuildSmoothingMatrix(geom)),
      options_(options) {
  if (scans_.size() < 2) {
    throw std::invalid_argument("Objective: need at least two scans");
  }
  if (odometry_.empty()) {
    odometry_.resize(scans_.size());
  }
  if (odometry_.size() != scans_.size()) {
    throw std::invalid_argument("Objective: odometry count does not match scan count");
  }
  if (odometry_.front()) {
    throw std::invalid_argument("odometry on first record");
  }
  information_.resize(odometry_.size(), Eigen::Matrix3d::Zero());
  for (std::size_t i = 1; i < odometry_.size(); ++i) {
    if (odometry_[i]) {
      has_odometry_ = true;
      information_[i] = odometry_[i]->sigma.inverse();
    }
  }
}

StateLayout Objective::Layout() const {
  return {static_cast<int>(scans_.size()) - 1, geom_.NodeCount()};
}

namespace {

// Neighbour slot of node b relative to node a, for nodes at most one step
// apart in each direction: (dw + 1) + 3 (dh + 1).
inline int NeighbourSlot(int a, int b, int width) {
  const int ah = a / width, aw = a - ah * width;
  const int bh = b / width, bw = b - bh * width;
  return (bw - aw + 1) + 3 * (bh - ah + 1);
}

// Slot of stencil node l relative to stencil node k for the four-node
// stencil order [(0,0), (1,0), (0,1), (1,1)].
constexpr std::array<std::array<int, 4>, 4> kStencilSlot = [] {
  std::array<std::array<int, 4>, 4> t{};
  for (int k = 0; k < 4; ++k) {
    for (int l = 0; l < 4; ++l) t[k][l] = ((l & 1) - (k & 1) + 1) + 3 * ((l >> 1) - (k >> 1) + 1);
  }
  return t;
}();

std::vector<std::pair<std::size_t, std::size_t>> SplitRange(std::size_t n, int parts) {
  parts = std::max(1, std::min<int>(parts, static_cast<int>(n)));
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  std::size_t begin = 0;
  for (int p = 0; p < parts; ++p) {
    const std::size_t end = begin + (n - begin) / static_cast<std::size_t>(parts - p);
    ranges.emplace_back(begin, end);
    begin = end;
  }
  return ranges;
}

template <typename Fn>
void RunWorkers(const std::vector<std::pair<std::size_t, std::size_t>>& ranges, Fn&& fn) {
  if (ranges.size() == 1) {
    fn(0, ranges[0].first, ranges[0].second);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(ranges.size());
  for (std::size_t w = 0; w < ranges.size(); ++w) {
    workers.emplace_back([&, w] { fn(w, ranges[w].first, ranges[w].second); });
  }
  for (auto& t : workers) t.join();
}

void AddCounts(CostBreakdown* into, const CostBreakdown& from) {
  into->observation += from.observation;
  into->used += from.used;
  into->out_of_bounds += from.out_of_bounds;
  into->too_few_hits += from.too_few_hits;
}

// Per-worker accumulators for the observation part of the normal equations.
struct ObservationAccumulator {
  explicit ObservationAccumulator(int n_nodes)
      : node_node(static_cast<std::size_t>(n_nodes), std::array<double, 9>{}),
        node_rhs(Eigen::VectorXd::Zero(n_nodes)),
        scratch(static_cast<std::size_t>(n_nodes), Eigen::Vector3d::Zero()),
        touched_flag(static_cast<std::size_t>(n_nodes), 0) {}

  std::vector<std::array<double, 9>> node_node;
  Eigen::VectorXd node_rhs;
  std::vector<Eigen::Vector3d> scratch;
  std::vector<char> touched_flag;
  std::vector<int> touched;
  CostBreakdown cost;
};

}  // namespace

CostBreakdown Objective::Cost(const std::vector<Pose2>& poses, const GridMap& map,
                              const HitMap& hits, const TermWeights& weights, int threads) const {
  if (poses.size() != scans_.size()) {
    throw std::invalid_argument("Objective::Cost: pose count does not match scan count");
  }
  const auto ranges = SplitRange(scans_.size(), threads);
  std::vector<CostBreakdown> partial(ranges.size());
  RunWorkers(ranges, [&](std::size_t worker, std::size_t begin, std::size_t end) {
    CostBreakdown& c = partial[worker];
    ObservationTerm term;
    for (std::size_t i = begin; i < end; ++i) {
      for (const SamplePoint& sp : scans_[i].points) {
        switch (EvaluateObservation(sp, poses[i], map, nullptr, hits, options_, &term)) {
          case ObservationStatus::kOutOfBounds:
            ++c.out_of_bounds;
            break;
          case ObservationStatus::kTooFewHits:
            ++c.too_few_hits;
            break;
          case ObservationStatus::kOk:
            ++c.used;
            c.observation += term.residual * term.residual;
            break;
        }
      }
    }
  });
  CostBreakdown cost;
  for (const auto& c : partial) AddCounts(&cost, c);

  if (has_odometry_) {
    for (std::size_t i = 1; i < scans_.size(); ++i) {
      if (!odometry_[i]) continue;
      const Eigen::Vector3d r = OdometryResidual(*odometry_[i], poses[i - 1], poses[i]);
      cost.odometry += r.dot(information_[i] * r);
    }
  }
  cost.smoothing = (smoothing_ * map.values()).squaredNorm();
  cost.total = weights.w_z * cost.observation + weights.w_o * cost.odometry +
               weights.w_s * cost.smoothing;
  return cost;
}

NormalSystem Objective::Assemble(const std::vector<Pose2>& poses, const GridMap& map,
                                 const HitMap& hits, const TermWeights& weights,
                                 int threads) const {
  if (poses.size() != scans_.size()) {
    throw std::invalid_argument("Objective::Assemble: pose count does not match scan count");
  }
  const StateLayout layout = Layout();
  const int n_nodes = layout.n_nodes;
  const int width = geom_.Width();
  const std::size_t n_records = scans_.size();

  NodeGradients node_gradients;
  const bool need_node_gradients = options_.gradient_model == GradientModel::kNodeBlend ||
                                   options_.map_model == MapModel::kDiscrete;
  if (need_node_gradients) {
    node_gradients = ComputeNodeGradients(map);
  }

  // Pose-owned blocks; each pose is handled by exactly one worker.
  std::vector<Eigen::Matrix3d> pose_diag(n_records, Eigen::Matrix3d::Zero());
  std::vector<Eigen::Vector3d> pose_rhs(n_records, Eigen::Vector3d::Zero());
  std::vector<std::vector<std::pair<int, Eigen::Vector3d>>> pose_node(n_records);

  const auto ranges = SplitRange(n_records, threads);
  std::vector<ObservationAccumulator> acc;
  acc.reserve(ranges.size());
  for (std::size_t w = 0; w < ranges.size(); ++w) acc.emplace_back(n_nodes);

  const double wz = weights.w_z;
  RunWorkers(ranges, [&](std::size_t worker, std::size_t begin, std::size_t end) {
    ObservationAccumulator& a = acc[worker];
    ObservationTerm term;
    for (std::size_t i = begin; i < end; ++i) {
      const bool pose_variable = i > 0;
      Eigen::Matrix3d& hpp = pose_diag[i];
      Eigen::Vector3d& gp = pose_rhs[i];
      for (const SamplePoint& sp : scans_[i].points) {
        const ObservationStatus status = EvaluateObservation(
            sp, poses[i], map, need_node_gradients ? &node_gradients : nullptr, hits, options_,
            &term);
        if (status == ObservationStatus::kOutOfBounds) {
          ++a.cost.out_of_bounds;
          continue;
        }
        if (status == ObservationStatus::kTooFewHits) {
          ++a.cost.too_few_hits;
          continue;
        }
        ++a.cost.used;
        const double r = term.residual;
        a.cost.observation += r * r;
        const Stencil& st = term.stencil;
        const Eigen::Vector3d jp = term.jac_pose.transpose();
        if (pose_variable) {
          hpp.noalias() += wz * jp * jp.transpose();
          gp -= wz * r * jp;
        }
        for (int k = 0; k < st.size; ++k) {
          const int nk = st.nodes[k];
          const double jk = term.jac_map[k];
          a.node_rhs[nk] -= wz * jk * r;
          auto& row = a.node_node[nk];
          if (st.size == 1) {
            row[4] += wz * jk * jk;
          } else {
            for (int l = 0; l < 4; ++l) row[kStencilSlot[k][l]] += wz * jk * term.jac_map[l];
          }
          if (pose_variable) {
            if (!a.touched_flag[nk]) {
              a.touched_flag[nk] = 1;
              a.touched.push_back(nk);
            }
            a.scratch[nk] += wz * jk * jp;
          }
        }
      }
      if (pose_variable) {
        std::sort(a.touched.begin(), a.touched.end());
        auto& out = pose_node[i];
        out.reserve(a.touched.size());
        for (int node : a.touched) {
          out.emplace_back(node, a.scratch[node]);
          a.scratch[node].setZero();
          a.touched_flag[node] = 0;
        }
        a.touched.clear();
      }
    }
  });

  NormalSystem sys;
  sys.layout = layout;
  CostBreakdown& cost = sys.cost;
  std::vector<std::array<double, 9>> node_node = std::move(acc[0].node_node);
  Eigen::VectorXd node_rhs = std::move(acc[0].node_rhs);
  AddCounts(&cost, acc[0].cost);
  for (std::size_t w = 1; w < acc.size(); ++w) {
    for (int n = 0; n < n_nodes; ++n) {
      for (int s = 0; s < 9; ++s) node_node[n][s] += acc[w].node_node[n][s];
    }
    node_rhs += acc[w].node_rhs;
    AddCounts(&cost, acc[w].cost);
  }
  acc.clear();

  // Odometry edges: residual Jacobian is -dF^O/dX.
  std::vector<Eigen::Matrix3d> pose_off(n_records, Eigen::Matrix3d::Zero());  // (i-1, i) block
  if (has_odometry_) {
    for (std::size_t i = 1; i < n_records; ++i) {
      if (!odometry_[i]) continue;
      const Eigen::Vector3d r = OdometryResidual(*odometry_[i], poses[i - 1], poses[i]);
      const Eigen::Matrix3d info = weights.w_o * information_[i];
      cost.odometry += r.dot(information_[i] * r);
      const Eigen::Matrix<double, 3, 6> j = -OdometryJacobian(poses[i - 1], poses[i]);
      const Eigen::Matrix3d jprev = j.leftCols<3>();
      const Eigen::Matrix3d jnext = j.rightCols<3>();
      pose_diag[i] += jnext.transpose() * info * jnext;
      pose_rhs[i] -= jnext.transpose() * info * r;
      if (i - 1 > 0) {
        pose_diag[i - 1] += jprev.transpose() * info * jprev;
        pose_rhs[i - 1] -= jprev.transpose() * info * r;
        pose_off[i] += jprev.transpose() * info * jnext;
      }
    }
  }

  // Smoothing rows (+1, -1) on neighbouring nodes.
  const Eigen::VectorXd smooth_residual = smoothing_ * map.values();
  cost.smoothing = smooth_residual.squaredNorm();
  const double ws = weights.w_s;
  for (int row = 0; row < smoothing_.rows(); ++row) {
    int plus = -1, minus = -1;
    for (SmoothingMatrix::InnerIterator it(smoothing_, row); it; ++it) {
      (it.value() > 0 ? plus : minus) = static_cast<int>(it.col());
    }
    const double r = smooth_residual[row];
    node_node[plus][4] += ws;
    node_node[minus][4] += ws;
    node_node[plus][NeighbourSlot(plus, minus, width)] -= ws;
    node_node[minus][NeighbourSlot(minus, plus, width)] -= ws;
    node_rhs[plus] -= ws * r;
    node_rhs[minus] += ws * r;
  }
  cost.total = weights.w_z * cost.observation + weights.w_o * cost.odometry +
               weights.w_s * cost.smoothing;

  // Right-hand side.
  const int dim = layout.Dim();
  sys.rhs.resize(dim);
  for (std::size_t i = 1; i < n_records; ++i) {
    sys.rhs.segment<3>(layout.PoseOffset(static_cast<int>(i))) = pose_rhs[i];
  }
  sys.rhs.tail(n_nodes) = node_rhs;

  // Node -> (pose, block) lists, pose order ascending.
  std::vector<int> node_pose_count(n_nodes + 1, 0);
  for (std::size_t i = 1; i < n_records; ++i) {
    for (const auto& [node, v] : pose_node[i]) ++node_pose_count[node + 1];
  }
  for (int n = 0; n < n_nodes; ++n) node_pose_count[n + 1] += node_pose_count[n];
  std::vector<std::pair<int, Eigen::Vector3d>> node_pose(node_pose_count[n_nodes]);
  {
    std::vector<int> cursor(node_pose_count.begin(), node_pose_count.end() - 1);
    for (std::size_t i = 1; i < n_records; ++i) {
      for (const auto& [node, v] : pose_node[i]) {
        node_pose[cursor[node]++] = {static_cast<int>(i), v};
      }
    }
  }

  // Compressed column storage, rows ascending within each column.
  std::vector<int> outer(dim + 1, 0);
  std::vector<int> inner;
  std::vector<double> values;
  std::size_t estimate = 0;
  for (std::size_t i = 1; i < n_records; ++i) estimate += 2 * 3 * pose_node[i].size() + 27;
  estimate += 9 * static_cast<std::size_t>(n_nodes);
  inner.reserve(estimate);
  values.reserve(estimate);

  const int n_var = layout.n_poses;
  for (int i = 1; i <= n_var; ++i) {
    for (int c = 0; c < 3; ++c) {
      if (i > 1) {
        const Eigen::Matrix3d& off = pose_off[i];  // block (i-1, i)
        for (int r = 0; r < 3; ++r) {
          inner.push_back(layout.PoseOffset(i - 1) + r);
          values.push_back(off(r, c));
        }
      }
      for (int r = 0; r < 3; ++r) {
        inner.push_back(layout.PoseOffset(i) + r);
        values.push_back(pose_diag[i](r, c));
      }
      if (i < n_var) {
        const Eigen::Matrix3d& off = pose_off[i + 1];  // block (i, i+1); need (i+1, i)
        for (int r = 0; r < 3; ++r) {
          inner.push_back(layout.PoseOffset(i + 1) + r);
          values.push_back(off(c, r));
        }
      }
      for (const auto& [node, v] : pose_node[i]) {
        inner.push_back(layout.NodeOffset(node));
        values.push_back(v[c]);
      }
      outer[layout.PoseOffset(i) + c + 1] = static_cast<int>(inner.size());
    }
  }
  const int height = geom_.Height();
  for (int n = 0; n < n_nodes; ++n) {
    for (int k = node_pose_count[n]; k < node_pose_count[n + 1]; ++k) {
      const auto& [pose, v] = node_pose[k];
      for (int r = 0; r < 3; ++r) {
        inner.push_back(layout.PoseOffset(pose) + r);
        values.push_back(v[r]);
      }
    }
    const int nh = n / width, nw = n - nh * width;
    for (int dh = -1; dh <= 1; ++dh) {
      for (int dw = -1; dw <= 1; ++dw) {
        const int w = nw + dw, h = nh + dh;
        if (w < 0 || w >= width || h < 0 || h >= height) continue;
        const double v = node_node[n][(dw + 1) + 3 * (dh + 1)];
        if (v == 0.0 && !(dw == 0 && dh == 0)) continue;
        inner.push_back(layout.NodeOffset(n + dw + dh * width));
        values.push_back(v);
      }
    }
    outer[layout.NodeOffset(n) + 1] = static_cast<int>(inner.size());
  }
  sys.lhs = Eigen::Map<const Eigen::SparseMatrix<double>>(
      dim, dim, static_cast<int>(inner.size()), outer.data(), inner.data(), values.data());
  return sys;
}

}  // namespace occslam
