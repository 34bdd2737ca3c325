#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "nino/linalg.hpp"
#include "nino/model.hpp"

namespace nino {

/// Quadrature nodes/weights on [0,1]; weights sum to 1.
struct QuadratureRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
  int order = 0;

  void validate() const;
};

/// Gauss-Legendre rule with `points` nodes mapped to [0,1] (order 2*points).
QuadratureRule gauss_legendre(int points);

/// One instance of the covariance (or second-moment) flow
///   dP/dt = A P + P A^T [+ S S^T] [+ S1 P S1^T] [+ S2 S2^T]
/// with P(0) = P0 P0^T kept in factored form throughout.
struct DLEProblem {
  DriftMatrix a;
  ModelKind kind = ModelKind::additive;
  Eigen::MatrixXd s;   // additive factor (kind == additive)
  Eigen::MatrixXd s1;  // multiplicative operator (multiplicative/mixed)
  Eigen::MatrixXd s2;  // additive factor of the mixed kind
  LowRankFactor p0;

  static DLEProblem from_operators(const OperatorSet& ops, LowRankFactor p0);
  void validate() const;
};

struct DLEOptions {
  QuadratureRule quad = gauss_legendre(4);
  double compress_tol = 1e-10;
  int max_rank = 200;
  double exp_tol = 1e-12;
  int checkpoint_stride = 1;  // keep every k-th step in the solution (final always kept)
};

/// Exact-solution quadrature step for the additive flow: the homogeneous part
/// propagates the factor through e^{hA}; the forcing integral
/// int_0^h e^{sA} S S^T e^{sA^T} ds is replaced by its quadrature and enters
/// as columns sqrt(h w_k) e^{tau_k h A} S. Compressed before returning.
LowRankFactor dle_additive_step(const DriftMatrix& a, const Eigen::MatrixXd& s,
                                const LowRankFactor& z, double h,
                                const DLEOptions& opts = DLEOptions());

/// Strang step T1(h/2) T2(h) T1(h/2) for the generalized flow. T1 is the exact
/// homogeneous propagation (plus, in the two-noise model, the S2 quadrature
/// columns over the half step, so the additive part stays second order); T2
/// expands the multiplicative term to second order in factored form:
/// Z <- [Z | sqrt(h) S1 Z | (h/sqrt(2)) S1^2 Z]. Compressed after each substep.
LowRankFactor dle_strang_step(const DriftMatrix& a, const Eigen::MatrixXd& s1,
                              const std::optional<Eigen::MatrixXd>& s2,
                              const LowRankFactor& z, double h,
                              const DLEOptions& opts = DLEOptions());

/// Deterministic mean trajectory under Crank-Nicolson; column i is the state
/// after i steps (column 0 = x0).
Eigen::MatrixXd propagate_mean(const DriftMatrix& a, const Eigen::VectorXd& x0, double h,
                               int n_steps);

struct DLECheckpoint {
  double t = 0.0;
  Eigen::VectorXd mean;
  LowRankFactor cov;
};

struct DLESolution {
  std::vector<DLECheckpoint> checkpoints;  // ascending t; includes t=0 and the final time

  const DLECheckpoint& final() const { return checkpoints.back(); }
};

/// Advance mean (CN) and covariance factor jointly over n_steps of size h,
/// dispatching the factor update on the model kind.
DLESolution solve_dle(const DLEProblem& problem, const Eigen::VectorXd& x0, double h,
                      int n_steps, const DLEOptions& opts = DLEOptions());

}  // namespace nino
