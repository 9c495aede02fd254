#pragma once

#include <vector>

#include <Eigen/Core>

namespace occslam {

/// Wraps an angle to [-pi, pi]. Throws std::invalid_argument on NaN/inf.
double WrapAngle(double angle);

/// Rotation matrix with the world-to-body convention used throughout:
///   R(theta) = [[cos, sin], [-sin, cos]]
/// so that a body-frame point x maps to world as R^T x + t.
Eigen::Matrix2d RotationMatrix(double theta);

/// dR/dtheta for RotationMatrix.
Eigen::Matrix2d RotationMatrixDerivative(double theta);

/// Planar robot pose. Immutable; theta is always kept in [-pi, pi].
class Pose2 {
 public:
  Pose2() = default;
  Pose2(double x, double y, double theta);
  Pose2(const Eigen::Vector2d& t, double theta);

  const Eigen::Vector2d& t() const { return t_; }
  double x() const { return t_.x(); }
  double y() const { return t_.y(); }
  double theta() const { return theta_; }
  Eigen::Matrix2d R() const { return (Eigen::Matrix2d() << c_, s_, -s_, c_).finished(); }
  /// dR/dtheta.
  Eigen::Matrix2d dR() const { return (Eigen::Matrix2d() << -s_, c_, -c_, -s_).finished(); }
  Eigen::Vector3d Vector() const { return {t_.x(), t_.y(), theta_}; }

  /// Maps a point from this pose's body frame to the world frame.
  Eigen::Vector2d ToWorld(const Eigen::Vector2d& local) const;

  /// Additive update on (x, y, theta) followed by angle wrapping.
  Pose2 Plus(const Eigen::Vector3d& delta) const;

  bool operator==(const Pose2& other) const = default;

 private:
  Eigen::Vector2d t_ = Eigen::Vector2d::Zero();
  double theta_ = 0.0;
  double c_ = 1.0;  // cos(theta_), sin(theta_)
  double s_ = 0.0;
};

/// Relative motion expressed in the frame of the earlier pose, plus its
/// covariance (row-major 3x3 over dx, dy, dtheta).
struct OdomIncrement {
  Eigen::Vector2d dt = Eigen::Vector2d::Zero();
  double dtheta = 0.0;
  Eigen::Matrix3d sigma = DefaultSigma();

  /// diag(0.04^2, 0.04^2, 0.003^2), the simulated odometry noise level.
  static Eigen::Matrix3d DefaultSigma();

  /// Throws std::invalid_argument if sigma is not symmetric positive definite
  /// or dtheta lies outside [-pi, pi].
  void Validate() const;
};

/// Noiseless odometry between two poses: (R(theta_prev)(t_next - t_prev),
/// wrap(theta_next - theta_prev)). sigma is left at the default.
OdomIncrement RelativePose(const Pose2& prev, const Pose2& next);

/// Dead-reckoning step: the pose reached from `prev` after `odom`.
Pose2 ApplyIncrement(const Pose2& prev, const OdomIncrement& odom);

/// Composes two consecutive increments into one, propagating covariance to
/// first order.
OdomIncrement ComposeIncrements(const OdomIncrement& first, const OdomIncrement& second);

/// Expresses every pose relative to poses[0], so that the first pose becomes
/// the origin.
std::vector<Pose2> Reanchor(const std::vector<Pose2>& poses);

}  // namespace occslam
