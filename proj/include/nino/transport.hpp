#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <memory>
#include <variant>

#include "nino/grid.hpp"

namespace nino {

using SpMat = Eigen::SparseMatrix<double>;

enum class BoundaryRule {
  zero_inflow_dirichlet,  // anomaly 0 enters from outside the basin (default)
  periodic_in_longitude   // longitude wraps; latitude stays zero-inflow
};

/// First-order upwind discretization of the advection generator on the grid.
///
/// The returned matrix A drives dX/dt = A X: with zonal velocity u > 0 a row
/// carries +u/dx at its west neighbour and -u/dx on the diagonal (upwind from
/// the west), and symmetrically for the other signs/directions. At most 5
/// nonzeros per row (diagonal + one neighbour per direction). Inflow
/// boundaries contribute no off-diagonal under the zero-inflow rule.
SpMat assemble_transport_operator(const VelocityField& vel,
                                  BoundaryRule bc = BoundaryRule::zero_inflow_dirichlet);

/// Largest Gershgorin bound on Re(lambda) over all rows; O(nnz).
double gershgorin_max_real_bound(const SpMat& a);

/// One Crank-Nicolson step: solve (I - h/2 A) x' = (I + h/2 A) x.
/// Factorizes once per call; use CrankNicolsonStepper for repeated stepping.
Eigen::VectorXd crank_nicolson_step(const SpMat& a, const Eigen::VectorXd& x, double h);
Eigen::VectorXd crank_nicolson_step(const Eigen::MatrixXd& a, const Eigen::VectorXd& x, double h);

/// Holds the (I -+ h/2 A) pair with the implicit factor pre-factorized.
/// Works for sparse (SparseLU) or dense (PartialPivLU) drift matrices.
class CrankNicolsonStepper {
 public:
  CrankNicolsonStepper(const SpMat& a, double h);
  CrankNicolsonStepper(const Eigen::MatrixXd& a, double h);
  ~CrankNicolsonStepper();
  CrankNicolsonStepper(CrankNicolsonStepper&&) noexcept;
  CrankNicolsonStepper& operator=(CrankNicolsonStepper&&) noexcept;

  double step_size() const { return h_; }
  int dim() const { return n_; }

  /// Advance one step. Throws NumericalError if the solve's relative
  /// residual exceeds 1e-10 (message carries a rough condition estimate).
  Eigen::VectorXd step(const Eigen::VectorXd& x) const;
  /// Column-wise step on a block of states.
  Eigen::MatrixXd step(const Eigen::MatrixXd& x) const;
  /// Solve (I - h/2 A) y = rhs only (for inhomogeneous stepping).
  Eigen::MatrixXd solve_implicit(const Eigen::MatrixXd& rhs) const;
  /// Apply (I + h/2 A) only.
  Eigen::MatrixXd apply_explicit(const Eigen::MatrixXd& x) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  double h_ = 0.0;
  int n_ = 0;
};

}  // namespace nino
