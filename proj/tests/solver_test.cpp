#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "occslam/evaluation.hpp"
#include "occslam/linear.hpp"
#include "occslam/objective.hpp"
#include "occslam/sampling.hpp"
#include "occslam/simulator.hpp"
#include "occslam/solver.hpp"

namespace occslam {
namespace {

Eigen::SparseMatrix<double> RandomSpd(int n, std::uint64_t seed, double density = 0.2) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::bernoulli_distribution keep(density);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j || keep(rng)) b(i, j) = u(rng);
    }
  }
  Eigen::MatrixXd a = b * b.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
  return a.sparseView();
}

TEST(SolveLinear, Identity) {
  Eigen::SparseMatrix<double> eye(7, 7);
  eye.setIdentity();
  const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(7, -3.0, 3.0);
  const LinearSolution s = SolveLinear(eye, b, 0.0);
  EXPECT_LT((s.x - b).norm(), 1e-14);
  EXPECT_EQ(s.attempts, 1);
  EXPECT_LE(s.relative_residual, kLinearSolveTolerance);
}

TEST(SolveLinear, RandomSpdMatchesDenseSolve) {
  const auto a = RandomSpd(50, 3);
  const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(50, 1.0, 2.0);
  const LinearSolution s = SolveLinear(a, b, 0.0);
  const Eigen::VectorXd dense = Eigen::MatrixXd(a).llt().solve(b);
  EXPECT_LE((s.x - dense).norm(), 1e-9 * dense.norm());
}

TEST(SolveLinear, ZeroMatrixFailsWithoutRegularisation) {
  Eigen::SparseMatrix<double> zero(5, 5);
  EXPECT_THROW(SolveLinear(zero, Eigen::VectorXd::Ones(5), 0.0), LinearSolveError);
  // With Tikhonov the escalation eventually produces (lambda I) x = b.
  const LinearSolution s = SolveLinear(zero, Eigen::VectorXd::Ones(5), 1e-8);
  EXPECT_GT(s.regularization, 0.0);
  EXPECT_LT((s.x * s.regularization - Eigen::VectorXd::Ones(5)).norm(), 1e-9);
}

TEST(Covariance, DiagonalMatrix) {
  const Eigen::VectorXd d = Eigen::VectorXd::LinSpaced(8, 0.5, 4.0);
  const Eigen::SparseMatrix<double> a = Eigen::MatrixXd(d.asDiagonal()).sparseView();
  const auto inv = InverseDiagonal(a);
  ASSERT_TRUE(inv);
  EXPECT_LT((*inv - d.cwiseInverse()).norm(), 1e-14);

  const auto cov = ExtractCovariance(a, StateLayout{2, 2});
  ASSERT_TRUE(cov);
  ASSERT_EQ(cov->pose_marginals.size(), 2u);
  EXPECT_NEAR(cov->pose_marginals[1](2, 2), 1.0 / d[5], 1e-14);
  EXPECT_NEAR(cov->pose_marginals[0](0, 1), 0.0, 1e-14);
  EXPECT_NEAR(cov->node_variances[1], 1.0 / d[7], 1e-14);
}

TEST(Covariance, RandomSpdMatchesDenseInverse) {
  const auto a = RandomSpd(10, 17, 0.4);
  const Eigen::MatrixXd dense = Eigen::MatrixXd(a).inverse();
  const auto inv = InverseDiagonal(a);
  ASSERT_TRUE(inv);
  EXPECT_LE((*inv - dense.diagonal()).norm(), 1e-9 * dense.diagonal().norm());
  const auto cov = ExtractCovariance(a, StateLayout{2, 4});
  ASSERT_TRUE(cov);
  for (int i = 0; i < 2; ++i) {
    EXPECT_LE((cov->pose_marginals[i] - dense.block<3, 3>(3 * i, 3 * i)).norm(), 1e-9 * dense.norm());
  }
}

TEST(Covariance, IndefiniteIsReportedUnavailable) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(4, 4);
  m(2, 2) = -1.0;
  EXPECT_FALSE(InverseDiagonal(m.sparseView()));
  EXPECT_FALSE(ExtractCovariance(m.sparseView(), StateLayout{1, 1}));
}

struct SmallRoom {
  Dataset dataset;
  std::vector<Pose2> truth;
  std::vector<Pose2> odometry;
};

const SmallRoom& Room() {
  static const SmallRoom room = [] {
    const Scenario sc = MakeScenario("room", 16);
    SensorSpec sensor;
    sensor.n_beams = 241;
    NoiseSpec noise;
    noise.seed = 4;
    SmallRoom r;
    r.dataset = GenerateDataset(sc.world, sc.trajectory, sensor, noise);
    r.truth = sc.trajectory;
    r.odometry = IntegrateOdometry(r.dataset);
    return r;
  }();
  return room;
}

SolverConfig FastConfig() {
  SolverConfig c;
  c.resolution_s = 0.2;
  c.tau_k = 12;
  c.tau_s = 4;
  return c;
}

TEST(Solve, ImprovesOnOdometry) {
  const SmallRoom& r = Room();
  const SolveResult res = Solve(r.dataset, r.odometry, FastConfig());
  const double before = PoseErrors(r.odometry, r.truth).mae_translation;
  const double after = PoseErrors(res.poses, r.truth).mae_translation;
  EXPECT_LT(after, before);
  EXPECT_EQ(res.poses.size(), r.truth.size());
}

TEST(Solve, ReportBookkeeping) {
  const SmallRoom& r = Room();
  const SolverConfig c = FastConfig();
  const SolveResult res = Solve(r.dataset, r.odometry, c);
  const SolveReport& rep = res.report;
  ASSERT_GE(rep.iterations, 1);
  EXPECT_LE(rep.iterations, c.tau_k);
  EXPECT_EQ(rep.cost_history.size(), static_cast<std::size_t>(rep.iterations) + 1);
  EXPECT_EQ(rep.w_s_history.size(), rep.cost_history.size());
  EXPECT_EQ(rep.step_sq_norms.size(), static_cast<std::size_t>(rep.iterations));
  EXPECT_EQ(rep.gn_step_sq_norms.size(), static_cast<std::size_t>(rep.iterations));
  EXPECT_EQ(rep.final_cost, rep.cost_history.back());
  EXPECT_FALSE(rep.stop_reason.empty());
  // Annealing: w_s at iteration k is max(w0 / d^floor(k / tau_s), floor).
  for (int k = 1; k <= rep.iterations; ++k) {
    const double expected = std::max(c.w_s_initial / std::pow(c.d_s, k / c.tau_s), c.w_s_floor);
    EXPECT_NEAR(rep.w_s_history[k], expected, 1e-15 * expected) << "k=" << k;
  }
  // Between annealings the accepted cost never rises.
  for (int k = 1; k <= rep.iterations; ++k) {
    if (rep.w_s_history[k] == rep.w_s_history[k - 1]) {
      EXPECT_LE(rep.cost_history[k], rep.cost_history[k - 1] * (1 + 1e-12)) << "k=" << k;
    }
  }
}

TEST(Solve, FirstPoseIsFixedAndRunsAreDeterministic) {
  const SmallRoom& r = Room();
  SolverConfig c = FastConfig();
  c.tau_k = 4;
  const SolveResult a = Solve(r.dataset, r.odometry, c);
  const SolveResult b = Solve(r.dataset, r.odometry, c);
  EXPECT_EQ(a.poses[0], Pose2());
  ASSERT_EQ(a.poses.size(), b.poses.size());
  for (std::size_t i = 0; i < a.poses.size(); ++i) EXPECT_EQ(a.poses[i], b.poses[i]);
  EXPECT_EQ(a.map.values(), b.map.values());
  EXPECT_EQ(a.report.cost_history, b.report.cost_history);
}

TEST(Solve, InitialPosesAreReanchored) {
  const SmallRoom& r = Room();
  std::vector<Pose2> shifted;
  const Pose2 offset(3.0, -2.0, 0.7);
  for (const Pose2& p : r.odometry) shifted.push_back(Pose2(offset.t() + offset.R().transpose() * p.t(), offset.theta() + p.theta()));
  SolverConfig c = FastConfig();
  c.tau_k = 2;
  const SolveResult a = Solve(r.dataset, r.odometry, c);
  const SolveResult b = Solve(r.dataset, shifted, c);
  EXPECT_EQ(b.poses[0], Pose2());
  for (std::size_t i = 0; i < a.poses.size(); ++i) {
    EXPECT_LT((a.poses[i].t() - b.poses[i].t()).norm(), 1e-6);
  }
}

TEST(Solve, CovarianceShrinksWithObservationWeight) {
  const SmallRoom& r = Room();
  SolverConfig c = FastConfig();
  c.tau_k = 3;
  c.compute_covariance = true;
  const SolveResult a = Solve(r.dataset, r.odometry, c);
  c.w_z *= 2.0;
  const SolveResult b = Solve(r.dataset, r.odometry, c);
  ASSERT_TRUE(a.report.covariance);
  ASSERT_TRUE(b.report.covariance);
  ASSERT_EQ(a.report.covariance->pose_marginals.size(), r.truth.size() - 1);
  // Node variances are the cleanest comparison: the node block is mostly
  // driven by w_z, so doubling it roughly halves each variance.
  const Eigen::VectorXd& va = a.report.covariance->node_variances;
  const Eigen::VectorXd& vb = b.report.covariance->node_variances;
  ASSERT_EQ(va.size(), vb.size());
  EXPECT_LT(vb.sum(), va.sum());
  for (const auto& m : a.report.covariance->pose_marginals) EXPECT_GT(m.diagonal().minCoeff(), 0.0);
}

// With refitting, the returned map minimises the cost for the returned
// poses and hit map, so the map part of the gradient vanishes there.
TEST(Solve, RefittedMapIsStationary) {
  const SmallRoom& r = Room();
  SolverConfig c = FastConfig();
  // Tikhonov damping would leave a residual gradient of lambda times the step.
  c.tikhonov = 0.0;
  const SolveResult res = Solve(r.dataset, r.odometry, c);
  std::vector<std::optional<OdomIncrement>> odom(r.dataset.size());
  for (std::size_t i = 1; i < odom.size(); ++i) odom[i] = r.dataset.records[i].odom;
  const Objective obj(SampleDataset(r.dataset, c.resolution_s, c.min_beam_range), odom,
                      res.map.geometry(), {});
  const TermWeights w{c.w_z, c.w_o, res.report.w_s_history.back()};
  const NormalSystem sys = obj.Assemble(res.poses, res.map, res.hits, w);
  const StateLayout layout = obj.Layout();
  const Eigen::VectorXd map_grad = sys.rhs.tail(layout.n_nodes);
  const NormalSystem at_init = obj.Assemble(
      r.odometry, InitializeMap(obj.scans(), r.odometry, res.map.geometry()),
      ScatterHits(obj.scans(), r.odometry, res.map.geometry()).hits, w);
  EXPECT_LT(map_grad.norm(), 1e-8 * at_init.rhs.tail(layout.n_nodes).norm());
  EXPECT_NEAR(sys.cost.total, res.report.final_cost, 1e-9 * res.report.final_cost);
}

TEST(Solve, JointStepWithoutRefitStillDescends) {
  const SmallRoom& r = Room();
  SolverConfig c = FastConfig();
  c.map_refit = false;
  const SolveResult res = Solve(r.dataset, r.odometry, c);
  EXPECT_LT(res.report.final_cost, res.report.cost_history.front());
}

TEST(Solve, RejectsMismatchedInitialPoses) {
  const SmallRoom& r = Room();
  std::vector<Pose2> init(r.odometry.begin(), r.odometry.end() - 1);
  EXPECT_THROW(Solve(r.dataset, init, FastConfig()), std::invalid_argument);
}

}  // namespace
}  // namespace occslam
