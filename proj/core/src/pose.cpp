#include "occslam/pose.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace occslam {

double WrapAngle(double angle) {
  if (!std::isfinite(angle)) {
    throw std::invalid_argument("WrapAngle: non-finite angle");
  }
  constexpr double kPi = std::numbers::pi;
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  if (angle >= -kPi && angle <= kPi) {
    return angle;
  }
  double wrapped = std::fmod(angle + kPi, kTwoPi);
  if (wrapped < 0.0) {
    wrapped += kTwoPi;
  }
  return wrapped - kPi;
}

Eigen::Matrix2d RotationMatrix(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Eigen::Matrix2d r;
  r << c, s, -s, c;
  return r;
}

Eigen::Matrix2d RotationMatrixDerivative(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Eigen::Matrix2d r;
  r << -s, c, -c, -s;
  return r;
}

Pose2::Pose2(double x, double y, double theta) : Pose2(Eigen::Vector2d(x, y), theta) {}

Pose2::Pose2(const Eigen::Vector2d& t, double theta)
    : t_(t), theta_(WrapAngle(theta)), c_(std::cos(theta_)), s_(std::sin(theta_)) {
  if (!t.allFinite()) {
    throw std::invalid_argument("Pose2: non-finite translation");
  }
}

Eigen::Vector2d Pose2::ToWorld(const Eigen::Vector2d& local) const {
  return R().transpose() * local + t_;
}

Pose2 Pose2::Plus(const Eigen::Vector3d& delta) const {
  return Pose2(t_ + delta.head<2>(), theta_ + delta.z());
}

Eigen::Matrix3d OdomIncrement::DefaultSigma() {
  return Eigen::Vector3d(0.04 * 0.04, 0.04 * 0.04, 0.003 * 0.003).asDiagonal();
}

void OdomIncrement::Validate() const {
  if (!dt.allFinite() || !std::isfinite(dtheta) || !sigma.allFinite()) {
    throw std::invalid_argument("odometry: non-finite value");
  }
  if (dtheta < -std::numbers::pi || dtheta > std::numbers::pi) {
    throw std::invalid_argument("odometry: dtheta outside [-pi, pi]");
  }
  if (!sigma.isApprox(sigma.transpose(), 1e-12)) {
    throw std::invalid_argument("odometry: covariance not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(sigma, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() <= 0.0) {
    throw std::invalid_argument("odometry: covariance not positive definite");
  }
}

OdomIncrement RelativePose(const Pose2& prev, const Pose2& next) {
  OdomIncrement odom;
  odom.dt = prev.R() * (next.t() - prev.t());
  odom.dtheta = WrapAngle(next.theta() - prev.theta());
  return odom;
}

Pose2 ApplyIncrement(const Pose2& prev, const OdomIncrement& odom) {
  return Pose2(prev.t() + prev.R().transpose() * odom.dt, prev.theta() + odom.dtheta);
}

OdomIncrement ComposeIncrements(const OdomIncrement& first, const OdomIncrement& second) {
  const Eigen::Matrix2d rt = RotationMatrix(first.dtheta).transpose();
  OdomIncrement out;
  out.dt = first.dt + rt * second.dt;
  out.dtheta = WrapAngle(first.dtheta + second.dtheta);

  Eigen::Matrix3d j_first = Eigen::Matrix3d::Identity();
  j_first.block<2, 1>(0, 2) = RotationMatrixDerivative(first.dtheta).transpose() * second.dt;
  Eigen::Matrix3d j_second = Eigen::Matrix3d::Identity();
  j_second.block<2, 2>(0, 0) = rt;
  out.sigma = j_first * first.sigma * j_first.transpose() +
              j_second * second.sigma * j_second.transpose();
  out.sigma = 0.5 * (out.sigma + out.sigma.transpose()).eval();
  return out;
}

std::vector<Pose2> Reanchor(const std::vector<Pose2>& poses) {
  std::vector<Pose2> out;
  if (poses.empty()) {
    return out;
  }
  out.reserve(poses.size());
  const Pose2 anchor = poses.front();
  for (const Pose2& p : poses) {
    const OdomIncrement rel = RelativePose(anchor, p);
    out.emplace_back(rel.dt, rel.dtheta);
  }
  return out;
}

}  // namespace occslam
