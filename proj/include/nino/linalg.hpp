#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <variant>

#include "nino/errors.hpp"

namespace nino {

using SpMat = Eigen::SparseMatrix<double>;

/// Drift matrices come either from a sparse grid discretization or from a
/// dense calibrated fit; solvers dispatch on the active alternative.
using DriftMatrix = std::variant<SpMat, Eigen::MatrixXd>;

/// Tall-thin factor Z of a symmetric PSD matrix P = Z Z^T.
struct LowRankFactor {
  Eigen::MatrixXd z;

  LowRankFactor() = default;
  explicit LowRankFactor(Eigen::MatrixXd z_) : z(std::move(z_)) {}

  int dim() const { return static_cast<int>(z.rows()); }
  int rank() const { return static_cast<int>(z.cols()); }
  double trace() const { return z.squaredNorm(); }
  /// Dense reconstruction Z Z^T; intended for tests and small systems.
  Eigen::MatrixXd product() const { return z * z.transpose(); }
};

/// y = e^{tA} b for a block of columns b, to relative accuracy ~tol.
///
/// Shifted, scaled truncated-Taylor action: A is shifted by its mean diagonal,
/// the interval is split into ceil(|t|*||A-mu I||_1 / theta) segments, and each
/// segment sums the series until two consecutive terms fall below the running
/// tolerance. Throws NumericalError if a segment fails to converge.
Eigen::MatrixXd exp_action(const SpMat& a, const Eigen::MatrixXd& b, double t,
                           double tol = 1e-12);
Eigen::MatrixXd exp_action(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double t,
                           double tol = 1e-12);
Eigen::MatrixXd exp_action(const DriftMatrix& a, const Eigen::MatrixXd& b, double t,
                           double tol = 1e-12);

/// Principal matrix logarithm of a real nonsingular matrix with no eigenvalue
/// on the closed negative real axis. Throws NumericalError (naming the
/// offending eigenvalue) when the branch-cut condition fails.
Eigen::MatrixXd principal_log(const Eigen::MatrixXd& m);

/// Solve the algebraic Lyapunov equation A Q + Q A^T + C = 0 for symmetric C.
/// Uniquely solvable iff A and -A share no eigenvalue (equivalently, no pair
/// of eigenvalues of A sums to zero); violations throw NumericalError. Dense
/// Kronecker solve for n <= 50, complex-Schur back-substitution above. The
/// result is symmetrized; the relative residual
/// ||A Q + Q A^T + C|| / (||A|| ||Q|| + ||C||) must come out <= 1e-9.
Eigen::MatrixXd solve_ale(const Eigen::MatrixXd& a, const Eigen::MatrixXd& c);

/// Factor a symmetric matrix Q ~= Z Z^T by eigendecomposition, dropping
/// eigenvalues below tol*||Q||_2. Eigenvalues below -100*tol*||Q||_2 raise
/// NumericalError (matrix is genuinely indefinite at this tolerance).
LowRankFactor psd_factor(const Eigen::MatrixXd& q, double tol = 1e-12);

/// Rank-truncate a factor: returns Z' with minimal rank such that
/// ||Z'Z'^T - Z Z^T||_F <= tol * ||Z Z^T||_F, via QR + SVD of the R factor.
LowRankFactor compress_columns(const LowRankFactor& z, double tol,
                               int max_rank = 200);

}  // namespace nino
