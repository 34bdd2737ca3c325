#pragma once

#include <Eigen/Dense>
#include <string>

#include "nino/linalg.hpp"

namespace nino {

enum class ModelKind { additive, multiplicative, mixed };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

/// Drift + noise operators of one linear model, either assembled from a grid
/// discretization (sparse drift) or fitted from data (dense drift, possibly
/// in a reduced EOF basis recorded in `basis`).
struct OperatorSet {
  ModelKind kind = ModelKind::additive;
  DriftMatrix a;
  Eigen::MatrixXd s;   // additive noise factor (n x r), kind == additive
  Eigen::MatrixXd s1;  // multiplicative noise operator (n x n), multiplicative/mixed
  Eigen::MatrixXd s2;  // additive noise factor of the mixed kind (n x r)
  double lag_tau_days = 0.0;  // calibration lag; 0 for assembled operators
  Eigen::MatrixXd basis;      // EOF lift (N x k); empty means identity

  int dim() const;
  bool has_basis() const { return basis.size() > 0; }
  /// Lift a reduced-space vector back to grid space (identity without basis).
  Eigen::VectorXd lift(const Eigen::VectorXd& x) const;
  /// Project a grid-space vector into the reduced space.
  Eigen::VectorXd reduce(const Eigen::VectorXd& x) const;
  /// Shape/kind consistency; throws DataError on violation.
  void validate() const;
};

}  // namespace nino
