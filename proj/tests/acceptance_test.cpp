// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails. Pass criterion numbers as arguments to run a
// subset, e.g. `acceptance_test 1 7 8`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "occslam/experiment.hpp"
#include "occslam/linear.hpp"
#include "occslam/objective.hpp"
#include "occslam/simulator.hpp"
#include "test_support.hpp"

namespace {

using namespace occslam;
using Clock = std::chrono::steady_clock;

constexpr int kSeeds = 5;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// ---------------------------------------------------------------------------
// Room runs shared by several criteria.

enum class Variant { kOdometry, kDiscrete, kPerturbed, kHalfRate };

struct RoomRun {
  double init_t = 0.0, init_r = 0.0;  // MAE of the initial guess
  double t = 0.0, r = 0.0;            // MAE after solving
  double auc = 0.0, precision = 0.0;
  double seconds = 0.0;
  SolveReport report;
};

Dataset RoomDataset(int seed) {
  const Scenario sc = MakeScenario("room");
  NoiseSpec noise;
  noise.seed = static_cast<std::uint64_t>(seed);
  return GenerateDataset(sc.world, sc.trajectory, SensorSpec{}, noise);
}

const RoomRun& Room(int seed, Variant variant) {
  static std::map<std::pair<int, Variant>, RoomRun> cache;
  const auto key = std::make_pair(seed, variant);
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  Dataset ds = RoomDataset(seed);
  if (variant == Variant::kHalfRate) ds = Subsample(ds, 0.5);
  SolverConfig config;
  if (variant == Variant::kDiscrete) config.map_model = MapModel::kDiscrete;
  std::vector<Pose2> init = IntegrateOdometry(ds);
  if (variant == Variant::kPerturbed) {
    init = PerturbPoses(init, 0.3, 0.1, 1000 + static_cast<std::uint64_t>(seed));
  }
  const std::vector<Pose2> gt = Reanchor(ds.GroundTruth());
  const PoseErrorReport before = PoseErrors(init, gt);

  const auto start = Clock::now();
  SolveResult result = Solve(ds, init, config);
  RoomRun run;
  run.seconds = Seconds(start);
  const Metrics m = EvaluateAgainstGroundTruth(ds, result.poses, result.map, result.hits, config);
  run.init_t = before.mae_translation;
  run.init_r = before.mae_rotation;
  run.t = m.poses.mae_translation;
  run.r = m.poses.mae_rotation;
  run.auc = m.map->auc;
  run.precision = m.map->known_precision;
  run.report = std::move(result.report);
  std::printf("    room seed %d %-9s init MAE %.4f m %.5f rad -> %.4f m %.5f rad, AUC %.4f, "
              "precision %.4f, %s after %d iterations, %.1f s\n",
              seed,
              variant == Variant::kOdometry    ? "odometry"
              : variant == Variant::kDiscrete  ? "discrete"
              : variant == Variant::kPerturbed ? "perturbed"
                                               : "half-rate",
              run.init_t, run.init_r, run.t, run.r, run.auc, run.precision,
              run.report.stop_reason.c_str(), run.report.iterations, run.seconds);
  std::fflush(stdout);
  return cache.emplace(key, std::move(run)).first->second;
}

// ---------------------------------------------------------------------------
// 1. Jacobians against central differences, hit map frozen.

double RelativeError(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& numeric) {
  const double scale = std::max(analytic.norm(), numeric.norm());
  return scale > 0.0 ? (analytic - numeric).norm() / scale : 0.0;
}

Outcome JacobianCorrectness() {
  std::mt19937_64 rng(20240601);
  const double h = 1e-6;
  double worst_pose = 0.0, worst_map = 0.0, worst_odom = 0.0, worst_smooth = 0.0;
  ObservationOptions options;
  options.gradient_model = GradientModel::kExactBilinear;
  for (int trial = 0; trial < 100; ++trial) {
    testing::ToyScene scene = testing::MakeToyScene(rng);
    const GridGeometry& g = scene.geom;

    for (std::size_t i = 0; i < scene.poses.size(); ++i) {
      const Pose2& pose = scene.poses[i];
      for (const SamplePoint& sp : scene.scans[i].points) {
        const Eigen::Vector2d p0 = WorldToGrid(sp.x_local, pose, g);
        const double n0 = scene.hits.At(p0);
        // Residual with N(P) held at its unperturbed value.
        auto residual = [&](const Pose2& x, const GridMap& m) {
          return sp.z - m.Interpolate(WorldToGrid(sp.x_local, x, g)) / n0;
        };
        Eigen::RowVector3d numeric;
        for (int c = 0; c < 3; ++c) {
          Eigen::Vector3d d = Eigen::Vector3d::Zero();
          d[c] = h;
          numeric[c] = (residual(pose.Plus(d), scene.map) - residual(pose.Plus(-d), scene.map)) /
                       (2 * h);
        }
        const Eigen::RowVector3d analytic = ObservationJacobianPose(
            sp, pose, scene.map, ComputeNodeGradients(scene.map), scene.hits, options);
        worst_pose = std::max(worst_pose, RelativeError(analytic, numeric));

        const MapJacobianRow row = ObservationJacobianMap(sp, pose, scene.hits, options);
        Eigen::VectorXd a(row.size), n(row.size);
        for (int k = 0; k < row.size; ++k) {
          GridMap plus = scene.map, minus = scene.map;
          plus.mutable_values()[row.nodes[k]] += h;
          minus.mutable_values()[row.nodes[k]] -= h;
          n[k] = (residual(pose, plus) - residual(pose, minus)) / (2 * h);
          a[k] = row.values[k];
        }
        worst_map = std::max(worst_map, RelativeError(a, n));
      }
    }

    for (std::size_t i = 1; i < scene.poses.size(); ++i) {
      const Pose2& prev = scene.poses[i - 1];
      const Pose2& next = scene.poses[i];
      OdomIncrement odom = RelativePose(prev, next);
      odom.dt += Eigen::Vector2d(0.05, -0.03);
      odom.dtheta = WrapAngle(odom.dtheta + 0.02);
      // Keep the wrapped angle residual away from its branch cut.
      if (std::abs(odom.dtheta - next.theta() + prev.theta()) > 3.0) continue;
      Eigen::Matrix<double, 3, 6> numeric;
      for (int c = 0; c < 6; ++c) {
        Eigen::Vector3d d = Eigen::Vector3d::Zero();
        d[c % 3] = h;
        const bool on_prev = c < 3;
        const Eigen::Vector3d fp = on_prev ? OdometryResidual(odom, prev.Plus(d), next)
                                           : OdometryResidual(odom, prev, next.Plus(d));
        const Eigen::Vector3d fm = on_prev ? OdometryResidual(odom, prev.Plus(-d), next)
                                           : OdometryResidual(odom, prev, next.Plus(-d));
        numeric.col(c) = (fp - fm) / (2 * h);
      }
      // The residual is O - F^O(X); OdometryJacobian returns dF^O/dX.
      const Eigen::Matrix<double, 3, 6> analytic = -OdometryJacobian(prev, next);
      worst_odom = std::max(worst_odom, RelativeError(analytic, numeric));
    }

    const SmoothingMatrix a = BuildSmoothingMatrix(g);
    const Eigen::MatrixXd dense_a = Eigen::MatrixXd(a);
    Eigen::MatrixXd numeric(a.rows(), a.cols());
    for (int j = 0; j < g.NodeCount(); ++j) {
      Eigen::VectorXd plus = scene.map.values(), minus = scene.map.values();
      plus[j] += h;
      minus[j] -= h;
      numeric.col(j) = (a * plus - a * minus) / (2 * h);
    }
    worst_smooth = std::max(worst_smooth, RelativeError(dense_a, numeric));
  }
  const double worst = std::max({worst_pose, worst_map, worst_odom, worst_smooth});
  std::ostringstream d;
  d << "max relative error J_P " << worst_pose << ", J_M " << worst_map << ", J_O " << worst_odom
    << ", A " << worst_smooth << " (exact bilinear gradient, tolerance 1e-4)";
  return {worst <= 1e-4, d.str()};
}

// ---------------------------------------------------------------------------
// 2. Fixed point at ground truth on noise-free data.

Outcome FixedPoint() {
  const Scenario sc = MakeScenario("room");
  SensorSpec sensor;
  sensor.range_noise_sigma = 0.0;
  NoiseSpec noise{0.0, 0.0, 1};
  const Dataset ds = GenerateDataset(sc.world, sc.trajectory, sensor, noise);
  SolverConfig config;
  config.tau_k = 3;
  const SolveResult result = Solve(ds, ds.GroundTruth(), config);
  const SolveReport& rep = result.report;
  double drift = 0.0;
  const std::vector<Pose2> gt = Reanchor(ds.GroundTruth());
  for (std::size_t i = 0; i < gt.size(); ++i) {
    drift = std::max(drift, (result.poses[i].t() - gt[i].t()).norm());
  }
  const double first = rep.gn_step_sq_norms.empty() ? NAN : rep.gn_step_sq_norms.front();
  const bool pass = rep.converged && rep.iterations <= 3 && first < config.tau_delta &&
                    drift < 1e-6;
  std::ostringstream d;
  d << "||Delta(1)||^2 = " << first << " (need < " << config.tau_delta << "), stop '"
    << rep.stop_reason << "' after " << rep.iterations << " iterations, max pose drift " << drift
    << " m (need < 1e-6)";
  return {pass, d.str()};
}

// ---------------------------------------------------------------------------

// Signed relative change of an error, given the fractional reduction.
std::string Change(double reduction) {
  const long pct = std::lround(-100.0 * reduction);
  return (pct > 0 ? "+" : "") + std::to_string(pct) + "%";
}

Outcome PoseRecovery() {
  int ok = 0;
  double worst_time = 0.0;
  std::ostringstream d;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const RoomRun& run = Room(seed, Variant::kOdometry);
    const double dt = 1.0 - run.t / run.init_t;
    const double dr = 1.0 - run.r / run.init_r;
    worst_time = std::max(worst_time, run.seconds);
    const bool pass = dt >= 0.60 && dr >= 0.50 && run.seconds < 600.0;
    ok += pass;
    d << (seed > 1 ? "; " : "") << "seed " << seed << ": " << Change(dt) << " t, " << Change(dr)
      << " r";
  }
  d << " (need -60% / -50% on every seed); slowest " << worst_time << " s";
  return {ok == kSeeds, d.str()};
}

Outcome MapQuality() {
  int ok = 0;
  std::ostringstream d;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const RoomRun& run = Room(seed, Variant::kOdometry);
    ok += run.auc >= 0.95 && run.precision >= 0.95;
    d << (seed > 1 ? "; " : "") << "seed " << seed << ": AUC " << run.auc << ", precision "
      << run.precision;
  }
  return {ok == kSeeds, d.str()};
}

Outcome Ablation() {
  int beats_odometry = 0, continuous_wins = 0;
  std::ostringstream d;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const RoomRun& cont = Room(seed, Variant::kOdometry);
    const RoomRun& disc = Room(seed, Variant::kDiscrete);
    beats_odometry += disc.t < disc.init_t;
    continuous_wins += cont.t <= disc.t;
    d << (seed > 1 ? "; " : "") << "seed " << seed << ": odometry " << disc.init_t
      << ", discrete " << disc.t << ", continuous " << cont.t;
  }
  d << " | discrete beats odometry " << beats_odometry << "/5, continuous <= discrete "
    << continuous_wins << "/5 (need 5/5 and >= 4/5)";
  return {beats_odometry == kSeeds && continuous_wins >= 4, d.str()};
}

Outcome MonotoneDescent() {
  int histories = 0, violations = 0;
  double worst = 0.0;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    for (Variant v : {Variant::kOdometry, Variant::kDiscrete, Variant::kPerturbed,
                      Variant::kHalfRate}) {
      const SolveReport& rep = Room(seed, v).report;
      ++histories;
      for (std::size_t k = 1; k < rep.cost_history.size(); ++k) {
        if (rep.w_s_history[k] != rep.w_s_history[k - 1]) continue;
        const double prev = rep.cost_history[k - 1];
        const double rise = (rep.cost_history[k] - prev) / std::abs(prev);
        worst = std::max(worst, rise);
        if (rise > 1e-12) ++violations;
      }
    }
  }
  std::ostringstream d;
  d << histories << " cost histories, " << violations
    << " increases within a constant-w_S window, largest relative rise " << worst;
  return {violations == 0, d.str()};
}

Outcome Invariants() {
  bool pass = true;
  std::ostringstream d;
  // Hit-map conservation on a real scenario and on toy scenes.
  {
    const Dataset ds = RoomDataset(1);
    const std::vector<Pose2> poses = IntegrateOdometry(ds);
    const auto scans = SampleDataset(ds, 0.1);
    const GridGeometry geom = ComputeGeometry(scans, poses, 0.1, 1.0);
    const ScatterResult s = ScatterHits(scans, poses, geom);
    const double rel = std::abs(s.hits.Total() - static_cast<double>(s.scattered)) /
                       static_cast<double>(s.scattered);
    pass = pass && rel <= 1e-9 && s.scattered + s.skipped == TotalSamples(scans);
    d << "room hit sum rel err " << rel << " over " << s.scattered << " points";
  }
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> side(1, 40);
  int checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const GridGeometry geom{{0.0, 0.0}, 0.1, side(rng), side(rng)};
    const SmoothingMatrix a = BuildSmoothingMatrix(geom);
    const int rows = 2 * geom.l_w * geom.l_h + geom.l_w + geom.l_h;
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(geom.NodeCount());
    bool rows_ok = a.rows() == rows;
    for (int r = 0; r < a.rows(); ++r) {
      double sum = 0.0;
      int nnz = 0;
      for (SmoothingMatrix::InnerIterator it(a, r); it; ++it) {
        sum += it.value();
        ++nnz;
      }
      rows_ok = rows_ok && sum == 0.0 && nnz == 2;
    }
    rows_ok = rows_ok && (a * ones).cwiseAbs().maxCoeff() == 0.0;
    pass = pass && rows_ok;
    ++checked;
  }
  d << "; smoothing matrix rows/row sums/A*1 checked on " << checked << " random geometries";
  return {pass, d.str()};
}

Outcome CovarianceOracle() {
  // 3 poses (6 variables) and a 13 x 13-node grid: 175 unknowns.
  std::mt19937_64 rng(11);
  testing::ToyScene scene = testing::MakeToyScene(rng, 3, 60, 12);
  std::vector<std::optional<OdomIncrement>> odom(scene.poses.size());
  for (std::size_t i = 1; i < odom.size(); ++i) {
    odom[i] = RelativePose(scene.poses[i - 1], scene.poses[i]);
  }
  const Objective objective(scene.scans, odom, scene.geom, ObservationOptions{});
  const NormalSystem sys =
      objective.Assemble(scene.poses, scene.map, scene.hits, TermWeights{1.0, 1.0, 0.1});
  const Eigen::MatrixXd dense_inv = Eigen::MatrixXd(sys.lhs).inverse();
  const auto cov = ExtractCovariance(sys.lhs, sys.layout);
  if (!cov) return {false, "extract_covariance reported a non-positive-definite matrix"};
  double worst = 0.0;
  for (int i = 1; i <= sys.layout.n_poses; ++i) {
    const int o = sys.layout.PoseOffset(i);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        const double ref = dense_inv(o + r, o + c);
        const double got = cov->pose_marginals[i - 1](r, c);
        worst = std::max(worst, std::abs(got - ref) / std::abs(dense_inv(o + r, o + r)));
      }
    }
  }
  for (int n = 0; n < sys.layout.n_nodes; ++n) {
    const double ref = dense_inv(sys.layout.NodeOffset(n), sys.layout.NodeOffset(n));
    worst = std::max(worst, std::abs(cov->node_variances[n] - ref) / std::abs(ref));
  }
  std::ostringstream d;
  d << sys.layout.Dim() << " variables, max relative deviation from the dense inverse " << worst
    << " (tolerance 1e-9)";
  return {sys.layout.Dim() <= 200 && worst <= 1e-9, d.str()};
}

Outcome Robustness() {
  int ok = 0;
  std::ostringstream d;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const RoomRun& run = Room(seed, Variant::kPerturbed);
    const bool pass = run.t < run.init_t;
    ok += pass;
    d << (seed > 1 ? "; " : "") << "seed " << seed << ": " << run.init_t << " -> " << run.t
      << (pass ? "" : " FAILED");
  }
  d << " | improved on " << ok << "/5 (need >= 4)";
  return {ok >= 4, d.str()};
}

Outcome LowRate() {
  int ok = 0;
  std::ostringstream d;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const RoomRun& run = Room(seed, Variant::kHalfRate);
    const double dt = 1.0 - run.t / run.init_t;
    const double dr = 1.0 - run.r / run.init_r;
    ok += dt >= 0.40 && dr >= 0.50 && run.seconds < 600.0;
    d << (seed > 1 ? "; " : "") << "seed " << seed << ": " << Change(dt) << " t, " << Change(dr)
      << " r";
  }
  d << " (need -40% / -50% on every seed)";
  return {ok == kSeeds, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"jacobian correctness", JacobianCorrectness},
      {"fixed point at ground truth", FixedPoint},
      {"pose recovery (room, 5 seeds)", PoseRecovery},
      {"map quality", MapQuality},
      {"discrete-map ablation", Ablation},
      {"monotone descent", MonotoneDescent},
      {"conservation and structure", Invariants},
      {"covariance oracle", CovarianceOracle},
      {"robustness to perturbed init", Robustness},
      {"half-rate data", LowRate},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    const int number = static_cast<int>(c) + 1;
    if (!selected.empty() && !selected.count(number)) continue;
    const auto start = Clock::now();
    Outcome out;
    try {
      out = criteria[c].second();
    } catch (const std::exception& e) {
      out = {false, std::string("threw: ") + e.what()};
    }
    failures += !out.pass;
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", out.pass ? "PASS" : "FAIL", number,
                criteria[c].first, out.detail.c_str(), Seconds(start));
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
