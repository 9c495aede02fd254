#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "occslam/objective.hpp"

namespace occslam {

class LinearSolveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LinearSolution {
  Eigen::VectorXd x;
  double regularization = 0.0;  // Tikhonov term that was finally used
  int attempts = 0;
  double relative_residual = 0.0;
};

inline constexpr double kLinearSolveTolerance = 1e-10;

/// Solves (A + lambda I) x = b for symmetric A by a fill-reducing (AMD)
/// sparse LDL^T factorization with iterative refinement. When the
/// factorization is not positive definite or the relative residual stays
/// above kLinearSolveTolerance, lambda is multiplied by 10 and the solve
/// retried, at most `max_retries` times. Throws LinearSolveError when every
/// attempt fails; with lambda = 0 the retries cannot help.
LinearSolution SolveLinear(const Eigen::SparseMatrix<double>& a, const Eigen::VectorXd& b,
                           double tikhonov = 1e-8, int max_retries = 5);

/// Marginal covariances read off (J^T W J)^-1.
struct CovarianceSummary {
  std::vector<Eigen::Matrix3d> pose_marginals;  // one per variable pose (1..n)
  Eigen::VectorXd node_variances;
};

/// Selected inversion (Takahashi recurrences) on the sparse LDL^T factor, so
/// the dense inverse is never formed. Returns nothing when the matrix is not
/// positive definite.
std::optional<CovarianceSummary> ExtractCovariance(const Eigen::SparseMatrix<double>& normal,
                                                   const StateLayout& layout);

/// Diagonal of A^-1 by the same selected inversion; empty when A is not
/// positive definite.
std::optional<Eigen::VectorXd> InverseDiagonal(const Eigen::SparseMatrix<double>& a);

}  // namespace occslam
