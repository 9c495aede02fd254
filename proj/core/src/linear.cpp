#include "occslam/linear.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>

namespace occslam {

namespace {

using Ldlt = Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower,
                                   Eigen::AMDOrdering<int>>;

Eigen::SparseMatrix<double> Regularized(const Eigen::SparseMatrix<double>& a, double lambda) {
  Eigen::SparseMatrix<double> m = a;
  if (lambda > 0.0) {
    Eigen::SparseMatrix<double> id(a.rows(), a.cols());
    id.setIdentity();
    m += lambda * id;
  }
  return m;
}

bool PositiveDefinite(const Ldlt& ldlt) {
  if (ldlt.info() != Eigen::Success) return false;
  const Eigen::VectorXd& d = ldlt.vectorD();
  return d.allFinite() && (d.size() == 0 || d.minCoeff() > 0.0);
}

// Inverse entries of P A P^T = L D L^T on the pattern of L.
class SelectedInverse {
 public:
  explicit SelectedInverse(const Ldlt& ldlt)
      : l_(ldlt.matrixL().nestedExpression()),
        perm_(ldlt.permutationP().indices()),
        diag_(l_.cols()),
        off_(l_.nonZeros()) {
    const Eigen::VectorXd& d = ldlt.vectorD();
    const int n = static_cast<int>(l_.cols());
    const int* lp = l_.outerIndexPtr();
    const int* li = l_.innerIndexPtr();
    const double* lx = l_.valuePtr();
    for (int j = n - 1; j >= 0; --j) {
      const int begin = lp[j], end = lp[j] + ColumnSize(j);
      for (int a = begin; a < end; ++a) {
        const int i = li[a];
        double s = 0.0;
        for (int b = begin; b < end; ++b) {
          const int k = li[b];
          s += Lookup(i, k) * lx[b];
        }
        off_[a] = -s;
      }
      double s = 0.0;
      for (int a = begin; a < end; ++a) s += lx[a] * off_[a];
      diag_[j] = 1.0 / d[j] - s;
    }
  }

  /// (A^-1)(r, c) in original numbering; empty when outside the pattern of L.
  std::optional<double> At(int r, int c) const {
    const int i = perm_[r], k = perm_[c];
    if (i == k) return diag_[i];
    const int* pos = Find(i, k);
    if (pos == nullptr) return std::nullopt;
    return off_[pos - l_.innerIndexPtr()];
  }
  double Diagonal(int r) const { return diag_[perm_[r]]; }

 private:
  int ColumnSize(int j) const {
    return l_.isCompressed() ? l_.outerIndexPtr()[j + 1] - l_.outerIndexPtr()[j]
                             : l_.innerNonZeroPtr()[j];
  }

  const int* Find(int i, int k) const {
    const int col = std::min(i, k), row = std::max(i, k);
    const int* li = l_.innerIndexPtr();
    const int begin = l_.outerIndexPtr()[col];
    const int end = begin + ColumnSize(col);
    const int* it = std::lower_bound(li + begin, li + end, row);
    return it == li + end || *it != row ? nullptr : it;
  }

  // The recurrence only reads entries inside the filled pattern, since the
  // rows of each column of L form a clique in it.
  double Lookup(int i, int k) const {
    if (i == k) return diag_[i];
    const int* pos = Find(i, k);
    if (pos == nullptr) {
      throw std::logic_error("selected inverse entry outside the factor pattern");
    }
    return off_[pos - l_.innerIndexPtr()];
  }

  const Eigen::SparseMatrix<double>& l_;
  Eigen::VectorXi perm_;
  Eigen::VectorXd diag_;
  Eigen::VectorXd off_;
};


}  // namespace

LinearSolution SolveLinear(const Eigen::SparseMatrix<double>& a, const Eigen::VectorXd& b,
                           double tikhonov, int max_retries) {
  if (a.rows() != a.cols() || a.rows() != b.size()) {
    throw std::invalid_argument("SolveLinear: dimension mismatch");
  }
  LinearSolution out;
  double lambda = std::max(tikhonov, 0.0);
  const double b_norm = b.norm();
  for (int attempt = 0; attempt <= max_retries; ++attempt) {
    out.attempts = attempt + 1;
    const Eigen::SparseMatrix<double> m = Regularized(a, lambda);
    const auto factor = std::make_unique<Ldlt>(m);
    if (PositiveDefinite(*factor)) {
      Eigen::VectorXd x = factor->solve(b);
      double rel = 0.0;
      for (int refine = 0; refine <= 3; ++refine) {
        const Eigen::VectorXd r = b - m * x;
        rel = b_norm > 0.0 ? r.norm() / b_norm : r.norm();
        if (!std::isfinite(rel) || rel <= kLinearSolveTolerance || refine == 3) break;
        x += factor->solve(r);
      }
      if (x.allFinite() && rel <= kLinearSolveTolerance) {
        out.x = std::move(x);
        out.regularization = lambda;
        out.relative_residual = rel;
        return out;
      }
    }
    lambda *= 10.0;
  }
  throw LinearSolveError("normal matrix is not positive definite after " +
                         std::to_string(max_retries) + " regularization increases");
}

std::optional<Eigen::VectorXd> InverseDiagonal(const Eigen::SparseMatrix<double>& a) {
  Ldlt ldlt(a);
  if (!PositiveDefinite(ldlt)) return std::nullopt;
  const SelectedInverse inv(ldlt);
  Eigen::VectorXd d(a.rows());
  for (int i = 0; i < a.rows(); ++i) d[i] = inv.Diagonal(i);
  return d;
}

std::optional<CovarianceSummary> ExtractCovariance(const Eigen::SparseMatrix<double>& normal,
                                                   const StateLayout& layout) {
  if (normal.rows() != layout.Dim()) {
    throw std::invalid_argument("ExtractCovariance: layout does not match matrix");
  }
  Ldlt ldlt(normal);
  if (!PositiveDefinite(ldlt)) return std::nullopt;
  const SelectedInverse inv(ldlt);
  CovarianceSummary out;
  out.pose_marginals.reserve(layout.n_poses);
  for (int i = 1; i <= layout.n_poses; ++i) {
    const int o = layout.PoseOffset(i);
    Eigen::Matrix3d block;
    for (int c = 0; c < 3; ++c) {
      for (int r = 0; r < 3; ++r) {
        const std::optional<double> v = inv.At(o + r, o + c);
        if (v) {
          block(r, c) = *v;
          continue;
        }
        // Pose block not fully coupled in the matrix: take the whole
        // column of the inverse from one solve.
        Eigen::VectorXd e = Eigen::VectorXd::Zero(normal.rows());
        e[o + c] = 1.0;
        block.col(c) = ldlt.solve(e).segment<3>(o);
        break;
      }
    }
    out.pose_marginals.push_back(0.5 * (block + block.transpose()));
  }
  out.node_variances.resize(layout.n_nodes);
  for (int n = 0; n < layout.n_nodes; ++n) {
    out.node_variances[n] = std::max(0.0, inv.Diagonal(layout.NodeOffset(n)));
  }
  return out;
}

}  // namespace occslam
