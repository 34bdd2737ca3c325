#include "nino/calibration.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <iostream>
#include <sstream>

namespace nino {

AnomalySeries::AnomalySeries(const Grid& g, double t0, double dt, Eigen::MatrixXd snaps)
    : grid(g), t0_days(t0), dt_days(dt), snapshots(std::move(snaps)) {
  if (snapshots.rows() != grid.size())
    throw DataError("AnomalySeries: snapshot size does not match grid");
  if (snapshots.cols() < 3) throw DataError("AnomalySeries: need at least 3 snapshots");
  if (!(dt_days > 0.0)) throw DataError("AnomalySeries: spacing must be positive");
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> lag_covariances(const Eigen::MatrixXd& snapshots,
                                                            int tau_steps) {
  const int nt = static_cast<int>(snapshots.cols());
  const int n = static_cast<int>(snapshots.rows());
  if (tau_steps < 1) throw DataError("lag_covariances: lag must be >= 1 step");
  if (nt <= tau_steps)
    throw DataError("lag_covariances: series too short for the requested lag");

  const int m = nt - tau_steps;
  Eigen::MatrixXd c0 = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd ctau = Eigen::MatrixXd::Zero(n, n);
  for (int t = 0; t < m; ++t) {
    c0.selfadjointView<Eigen::Lower>().rankUpdate(snapshots.col(t), 1.0);
    ctau += snapshots.col(t + tau_steps) * snapshots.col(t).transpose();
  }
  c0 = Eigen::MatrixXd(c0.selfadjointView<Eigen::Lower>()) / m;
  ctau /= m;
  return {c0, ctau};
}

Eigen::MatrixXd eof_basis(const Eigen::MatrixXd& c0, int k) {
  if (c0.rows() != c0.cols()) throw DataError("eof_basis: covariance must be square");
  const int n = static_cast<int>(c0.rows());
  if (k < 1 || k > n) throw DataError("eof_basis: mode count out of range");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (c0 + c0.transpose()));
  if (es.info() != Eigen::Success) throw NumericalError("eof_basis: eigendecomposition failed");
  Eigen::MatrixXd v(n, k);
  for (int c = 0; c < k; ++c) {
    Eigen::VectorXd col = es.eigenvectors().col(n - 1 - c);  // descending
    int arg = 0;
    col.cwiseAbs().maxCoeff(&arg);
    if (col[arg] < 0.0) col = -col;
    v.col(c) = col;
  }
  return v;
}

Eigen::MatrixXd estimate_drift(const Eigen::MatrixXd& c0, const Eigen::MatrixXd& ctau,
                               double tau_days, double ridge) {
  if (c0.rows() != c0.cols() || ctau.rows() != ctau.cols() || c0.rows() != ctau.rows())
    throw DataError("estimate_drift: covariance shapes mismatch");
  if (!(tau_days > 0.0)) throw DataError("estimate_drift: lag must be positive");
  const int n = static_cast<int>(c0.rows());
  if (ridge < 0.0) ridge = 1e-10 * c0.trace() / n;

  Eigen::MatrixXd reg = c0;
  reg.diagonal().array() += ridge;
  // G = Ctau * reg^{-1}, via the symmetric solve reg G^T = Ctau^T
  Eigen::MatrixXd g = reg.ldlt().solve(ctau.transpose()).transpose();

  try {
    return principal_log(g) / tau_days;
  } catch (const NumericalError& e) {
    std::ostringstream msg;
    msg << e.what()
        << "; the lag propagator has no principal logarithm - raise the ridge or project "
           "onto fewer EOF modes";
    throw NumericalError(msg.str());
  }
}

LowRankFactor estimate_additive_noise(const Eigen::MatrixXd& a, const Eigen::MatrixXd& c0,
                                      double psd_tol) {
  if (a.rows() != a.cols() || a.rows() != c0.rows() || c0.rows() != c0.cols())
    throw DataError("estimate_additive_noise: shape mismatch");
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
  const double max_re = es.eigenvalues().real().maxCoeff();
  if (!(max_re < 0.0))
    std::cerr << "estimate_additive_noise: warning: drift is not Hurwitz (max Re eigenvalue = "
              << max_re << "); the stationary balance behind the estimate does not hold\n";
  const Eigen::MatrixXd forcing = -(a * c0 + c0 * a.transpose());
  try {
    return psd_factor(forcing, psd_tol);
  } catch (const NumericalError& e) {
    std::ostringstream msg;
    msg << e.what()
        << "; the implied stationary forcing is strongly indefinite - project the series onto "
           "fewer EOF modes before estimating the noise";
    throw NumericalError(msg.str());
  }
}

MultiplicativeFit estimate_multiplicative_noise(const Eigen::MatrixXd& a,
                                                const Eigen::MatrixXd& c0, double theta,
                                                double psd_tol) {
  if (a.rows() != a.cols() || a.rows() != c0.rows() || c0.rows() != c0.cols())
    throw DataError("estimate_multiplicative_noise: shape mismatch");
  if (theta < 0.0 || theta > 1.0)
    throw DataError("estimate_multiplicative_noise: theta must lie in [0, 1]");

  const int n = static_cast<int>(a.rows());
  const Eigen::MatrixXd forcing = -(a * c0 + c0 * a.transpose());  // stationary forcing
  const double c0norm2 = c0.squaredNorm();
  if (c0norm2 == 0.0) throw DataError("estimate_multiplicative_noise: C0 is zero");

  MultiplicativeFit fit;
  // residual^2 of theta*forcing - sigma^2 C0 is quadratic in t = sigma^2;
  // its derivative g(t) = 2 t ||C0||^2 - 2 theta <forcing, C0> is monotone
  const double inner = theta * (forcing.array() * c0.array()).sum();
  auto deriv = [&](double t) { return 2.0 * (t * c0norm2 - inner); };

  if (deriv(0.0) >= 0.0) {
    // no positive sigma reduces the residual: purely additive fallback
    fit.fell_back_to_additive = true;
    fit.sigma = 0.0;
    fit.s2 = psd_factor(forcing, psd_tol);
    return fit;
  }
  double lo = 0.0;
  double hi = 1.0;
  while (deriv(hi) < 0.0) hi *= 2.0;
  for (int it = 0; it < 200 && (hi - lo) > 1e-16 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (deriv(mid) < 0.0 ? lo : hi) = mid;
  }
  fit.sigma = std::sqrt(0.5 * (lo + hi));

  if (theta < 1.0) {
    fit.s2 = psd_factor(Eigen::MatrixXd((1.0 - theta) * forcing), psd_tol);
  } else {
    fit.s2 = LowRankFactor(Eigen::MatrixXd::Zero(n, 0));
  }
  return fit;
}

OperatorSet calibrate(const AnomalySeries& series, ModelKind kind,
                      const CalibrationOptions& opts) {
  auto [c0, ctau] = lag_covariances(series.snapshots, opts.tau_steps);
  const int n = static_cast<int>(c0.rows());

  int k = opts.eof_modes;
  if (k < 0) k = std::min(n, 50);
  Eigen::MatrixXd basis;
  if (k > 0 && k <= n) {
    basis = eof_basis(c0, k);
    c0 = basis.transpose() * c0 * basis;
    ctau = basis.transpose() * ctau * basis;
  }

  const double tau_days = opts.tau_steps * series.dt_days;
  Eigen::MatrixXd a = estimate_drift(c0, ctau, tau_days, opts.ridge);

  OperatorSet ops;
  ops.kind = kind;
  ops.a = a;
  ops.lag_tau_days = tau_days;
  ops.basis = basis;
  const int dim = static_cast<int>(a.rows());

  switch (kind) {
    case ModelKind::additive:
      ops.s = estimate_additive_noise(a, c0, opts.psd_tol).z;
      break;
    case ModelKind::multiplicative: {
      MultiplicativeFit fit = estimate_multiplicative_noise(a, c0, 1.0, opts.psd_tol);
      if (fit.fell_back_to_additive) {
        ops.kind = ModelKind::additive;
        ops.s = fit.s2.z;
      } else {
        ops.s1 = fit.sigma * Eigen::MatrixXd::Identity(dim, dim);
      }
      break;
    }
    case ModelKind::mixed: {
      MultiplicativeFit fit =
          estimate_multiplicative_noise(a, c0, opts.theta_mixed, opts.psd_tol);
      if (fit.fell_back_to_additive) {
        ops.kind = ModelKind::additive;
        ops.s = estimate_additive_noise(a, c0, opts.psd_tol).z;
      } else {
        ops.s1 = fit.sigma * Eigen::MatrixXd::Identity(dim, dim);
        ops.s2 = fit.s2.z;
      }
      break;
    }
  }
  ops.validate();
  return ops;
}

}  // namespace nino
