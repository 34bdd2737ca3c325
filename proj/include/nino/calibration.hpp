#pragma once

#include <Eigen/Dense>
#include <utility>

#include "nino/grid.hpp"
#include "nino/linalg.hpp"
#include "nino/model.hpp"

namespace nino {

/// Gridded anomaly time series with uniform spacing; snapshot column t holds
/// the field at time t0_days + t * dt_days.
struct AnomalySeries {
  Grid grid;
  double t0_days = 0.0;
  double dt_days = 1.0;
  Eigen::MatrixXd snapshots;  // n x nt

  AnomalySeries() = default;
  AnomalySeries(const Grid& g, double t0, double dt, Eigen::MatrixXd snaps);
  int steps() const { return static_cast<int>(snapshots.cols()); }
  double time(int t) const { return t0_days + t * dt_days; }
};

/// Time-averaged covariance pair over the shared valid window:
/// C0 = avg x_t x_t^T and Ctau = avg x_{t+tau} x_t^T, t = 0..nt-tau-1.
/// C0 is symmetrized; anomalies are assumed centered.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> lag_covariances(const Eigen::MatrixXd& snapshots,
                                                            int tau_steps);

/// Leading k eigenvectors of a sample covariance (descending eigenvalue,
/// deterministic sign), for the optional EOF projection.
Eigen::MatrixXd eof_basis(const Eigen::MatrixXd& c0, int k);

/// Drift from the lag pair: A = principal_log(Ctau (C0 + ridge I)^{-1}) / tau.
/// ridge < 0 selects the default 1e-10 * trace(C0)/n. Branch-cut failures are
/// rethrown with guidance (raise the ridge or project onto fewer EOF modes).
Eigen::MatrixXd estimate_drift(const Eigen::MatrixXd& c0, const Eigen::MatrixXd& ctau,
                               double tau_days, double ridge = -1.0);

/// Fluctuation-dissipation: factor the stationary forcing -(A C0 + C0 A^T).
/// Warns on stderr when A is not Hurwitz (the stationary balance then has no
/// basis); a strongly indefinite forcing is rethrown advising EOF projection.
LowRankFactor estimate_additive_noise(const Eigen::MatrixXd& a, const Eigen::MatrixXd& c0,
                                      double psd_tol = 1e-8);

struct MultiplicativeFit {
  double sigma = 0.0;   // S1 = sigma * I
  LowRankFactor s2;     // additive remainder factor (rank 0 when theta = 1)
  bool fell_back_to_additive = false;
};

/// Scalar-sigma surrogate: bisect the (monotone) derivative of
/// ||A C0 + C0 A^T + sigma^2 C0||_F^2 over sigma^2 >= 0 to find the minimizing
/// sigma for a theta share of the stationary forcing; the remaining 1-theta
/// share is factored as additive noise. If no sigma > 0 reduces the residual
/// the fit falls back to purely additive noise (flag set).
MultiplicativeFit estimate_multiplicative_noise(const Eigen::MatrixXd& a,
                                                const Eigen::MatrixXd& c0, double theta = 1.0,
                                                double psd_tol = 1e-8);

struct CalibrationOptions {
  int tau_steps = 1;
  double ridge = -1.0;      // default 1e-10 * trace(C0)/n
  int eof_modes = -1;       // default min(n, 50); 0 disables the projection
  double theta_mixed = 0.5; // forcing share assigned to the multiplicative part
  double psd_tol = 1e-8;
};

/// Full pipeline: lag covariances, optional EOF projection, drift, noise.
/// The returned operators live in the (possibly reduced) basis recorded in
/// OperatorSet::basis.
OperatorSet calibrate(const AnomalySeries& series, ModelKind kind,
                      const CalibrationOptions& opts = CalibrationOptions());

}  // namespace nino
