#include "nino/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>
#include <unsupported/Eigen/MatrixFunctions>

namespace nino {

namespace {

double shifted_one_norm(const Eigen::MatrixXd& a, double mu) {
  double best = 0.0;
  for (int c = 0; c < a.cols(); ++c) {
    double s = 0.0;
    for (int r = 0; r < a.rows(); ++r)
      s += std::abs(r == c ? a(r, c) - mu : a(r, c));
    best = std::max(best, s);
  }
  return best;
}

double shifted_one_norm(const SpMat& a, double mu) {
  double best = 0.0;
  for (int c = 0; c < a.outerSize(); ++c) {
    double s = std::abs(mu);  // in case the diagonal entry is structurally absent
    for (SpMat::InnerIterator it(a, c); it; ++it) {
      if (it.row() == c)
        s += std::abs(it.value() - mu) - std::abs(mu);
      else
        s += std::abs(it.value());
    }
    best = std::max(best, s);
  }
  return best;
}

double trace_of(const Eigen::MatrixXd& a) { return a.trace(); }

double trace_of(const SpMat& a) {
  double t = 0.0;
  for (int c = 0; c < a.outerSize(); ++c)
    for (SpMat::InnerIterator it(a, c); it; ++it)
      if (it.row() == c) t += it.value();
  return t;
}

template <class Mat>
Eigen::MatrixXd exp_action_impl(const Mat& a, const Eigen::MatrixXd& b, double t, double tol) {
  if (a.rows() != a.cols()) throw DataError("exp_action: A must be square");
  if (b.rows() != a.rows()) throw DataError("exp_action: block row count must match A");
  if (b.cols() == 0 || t == 0.0) return b;
  tol = std::max(tol, 1e-15);

  const int n = static_cast<int>(a.rows());
  const double mu = trace_of(a) / n;  // diagonal shift keeps segment norms small
  const double eta = std::abs(t) * shifted_one_norm(a, mu);
  const int segments = std::max(1, static_cast<int>(std::ceil(eta)));
  const double dt = t / segments;
  const double seg_scale = std::exp(mu * dt);
  constexpr int kMaxTerms = 160;

  Eigen::MatrixXd x = b;
  for (int seg = 0; seg < segments; ++seg) {
    Eigen::MatrixXd f = x;
    Eigen::MatrixXd term = x;
    double prev = std::numeric_limits<double>::infinity();
    bool converged = false;
    for (int k = 1; k <= kMaxTerms; ++k) {
      term = (dt / k) * (a * term).eval() - (mu * dt / k) * term;
      f += term;
      const double c = term.norm();
      if (c + prev <= tol * f.norm()) {
        converged = true;
        break;
      }
      prev = c;
    }
    if (!converged)
      throw NumericalError("exp_action: Taylor series failed to converge within 160 terms");
    x = seg_scale * f;
  }
  return x;
}

}  // namespace

Eigen::MatrixXd exp_action(const SpMat& a, const Eigen::MatrixXd& b, double t, double tol) {
  return exp_action_impl(a, b, t, tol);
}

Eigen::MatrixXd exp_action(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double t,
                           double tol) {
  return exp_action_impl(a, b, t, tol);
}

Eigen::MatrixXd exp_action(const DriftMatrix& a, const Eigen::MatrixXd& b, double t,
                           double tol) {
  return std::visit([&](const auto& m) { return exp_action_impl(m, b, t, tol); }, a);
}

Eigen::MatrixXd principal_log(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw DataError("principal_log: matrix must be square");
  const double scale = std::max(m.norm(), 1e-300);

  Eigen::EigenSolver<Eigen::MatrixXd> es(m, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    throw NumericalError("principal_log: eigenvalue computation failed");
  for (int i = 0; i < m.rows(); ++i) {
    const std::complex<double> ev = es.eigenvalues()[i];
    if (std::abs(ev) < 1e-14 * scale) {
      std::ostringstream msg;
      msg << "principal_log: matrix is singular (eigenvalue " << ev << ")";
      throw NumericalError(msg.str());
    }
    if (ev.real() < 0.0 && std::abs(ev.imag()) <= 1e-14 * std::abs(ev)) {
      std::ostringstream msg;
      msg << "principal_log: eigenvalue " << ev
          << " lies on the negative real axis (no principal branch)";
      throw NumericalError(msg.str());
    }
  }
  return m.log();
}

namespace {

Eigen::MatrixXd solve_ale_kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& c) {
  const int n = static_cast<int>(a.rows());
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n * n, n * n);
  // vec is column-major: vec(AQ) = (I (x) A) vec Q, vec(QA^T) = (A (x) I) vec Q
  for (int j = 0; j < n; ++j) k.block(j * n, j * n, n, n) += a;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      if (a(j, i) != 0.0) k.block(j * n, i * n, n, n).diagonal().array() += a(j, i);
  Eigen::VectorXd rhs(n * n);
  for (int j = 0; j < n; ++j) rhs.segment(j * n, n) = -c.col(j);
  Eigen::VectorXd q = k.partialPivLu().solve(rhs);
  Eigen::MatrixXd out(n, n);
  for (int j = 0; j < n; ++j) out.col(j) = q.segment(j * n, n);
  return out;
}

Eigen::MatrixXd solve_ale_schur(const Eigen::MatrixXd& a, const Eigen::MatrixXd& c) {
  using CMat = Eigen::MatrixXcd;
  const int n = static_cast<int>(a.rows());
  Eigen::ComplexSchur<Eigen::MatrixXd> schur(a);
  if (schur.info() != Eigen::Success)
    throw NumericalError("solve_ale: Schur decomposition failed");
  const CMat& t = schur.matrixT();
  const CMat& u = schur.matrixU();

  CMat ct = u.adjoint() * c.cast<std::complex<double>>() * u;
  CMat qt = CMat::Zero(n, n);
  // T Q + Q T^H = -Ct, columns back-substituted from the last one
  for (int k = n - 1; k >= 0; --k) {
    Eigen::VectorXcd rhs = -ct.col(k);
    for (int j = k + 1; j < n; ++j) rhs -= qt.col(j) * std::conj(t(k, j));
    CMat lhs = t;
    lhs.diagonal().array() += std::conj(t(k, k));
    qt.col(k) = lhs.triangularView<Eigen::Upper>().solve(rhs);
  }
  return (u * qt * u.adjoint()).real();
}

}  // namespace

Eigen::MatrixXd solve_ale(const Eigen::MatrixXd& a, const Eigen::MatrixXd& c) {
  if (a.rows() != a.cols() || c.rows() != c.cols() || a.rows() != c.rows())
    throw DataError("solve_ale: A and C must be square and of equal size");
  const int n = static_cast<int>(a.rows());
  if ((c - c.transpose()).norm() > 1e-8 * std::max(1.0, c.norm()))
    throw DataError("solve_ale: C must be symmetric");

  // Unique solvability: A and -A must share no eigenvalue, i.e. no pair of
  // eigenvalues of A may sum to zero (which also excludes singular A).
  Eigen::VectorXcd lam;
  if (n <= 50) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
    lam = es.eigenvalues();
  } else {
    Eigen::ComplexSchur<Eigen::MatrixXd> schur(a, false);
    lam = schur.matrixT().diagonal();
  }
  const double spectral_scale = std::max(1.0, lam.cwiseAbs().maxCoeff());
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      if (std::abs(lam[i] + lam[j]) <= 1e-12 * spectral_scale) {
        std::ostringstream msg;
        msg << "solve_ale: not uniquely solvable - eigenvalues " << lam[i] << " and " << lam[j]
            << " of A sum to zero (A and -A share an eigenvalue)";
        throw NumericalError(msg.str());
      }

  Eigen::MatrixXd csym = 0.5 * (c + c.transpose());
  Eigen::MatrixXd q = (n <= 50) ? solve_ale_kron(a, csym) : solve_ale_schur(a, csym);
  q = 0.5 * (q + q.transpose()).eval();

  const double resid = (a * q + q * a.transpose() + csym).norm();
  const double scale = a.norm() * q.norm() + csym.norm();
  if (!(resid <= 1e-9 * std::max(scale, 1e-300))) {
    std::ostringstream msg;
    msg << "solve_ale: residual " << resid << " exceeds 1e-9 * " << scale;
    throw NumericalError(msg.str());
  }
  return q;
}

LowRankFactor psd_factor(const Eigen::MatrixXd& q, double tol) {
  if (q.rows() != q.cols()) throw DataError("psd_factor: matrix must be square");
  const int n = static_cast<int>(q.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (q + q.transpose()));
  if (es.info() != Eigen::Success)
    throw NumericalError("psd_factor: eigendecomposition failed");
  const Eigen::VectorXd& ev = es.eigenvalues();  // ascending
  const double norm2 = std::max(std::abs(ev[0]), std::abs(ev[n - 1]));
  if (norm2 == 0.0) return LowRankFactor(Eigen::MatrixXd::Zero(n, 0));

  if (ev[0] < -100.0 * tol * norm2) {
    std::ostringstream msg;
    msg << "psd_factor: matrix is indefinite (eigenvalue " << ev[0] << " < "
        << -100.0 * tol * norm2 << ")";
    throw NumericalError(msg.str());
  }

  int kept = 0;
  for (int i = 0; i < n; ++i)
    if (ev[i] > tol * norm2) ++kept;
  Eigen::MatrixXd z(n, kept);
  // descending eigenvalue order for a deterministic column layout
  for (int c = 0; c < kept; ++c) {
    const int src = n - 1 - c;
    z.col(c) = es.eigenvectors().col(src) * std::sqrt(ev[src]);
  }
  return LowRankFactor(std::move(z));
}

LowRankFactor compress_columns(const LowRankFactor& z, double tol, int max_rank) {
  const int n = z.dim();
  const int r = z.rank();
  if (r == 0) return z;
  if (max_rank < 1) throw DataError("compress_columns: max_rank must be >= 1");

  const int m = std::min(n, r);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(z.z);
  Eigen::MatrixXd thin_q = qr.householderQ() * Eigen::MatrixXd::Identity(n, m);
  Eigen::MatrixXd rfac = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(rfac, Eigen::ComputeThinU);
  const Eigen::VectorXd& sv = svd.singularValues();
  const int p = static_cast<int>(sv.size());

  // ||Z'Z'^T - ZZ^T||_F^2 = sum of dropped sigma^4; pick the smallest rank
  // meeting tol relative to ||ZZ^T||_F = sqrt(sum sigma^4)
  double total4 = 0.0;
  for (int i = 0; i < p; ++i) total4 += sv[i] * sv[i] * sv[i] * sv[i];
  if (total4 == 0.0) return LowRankFactor(Eigen::MatrixXd::Zero(n, 0));

  const double budget = tol * tol * total4;
  int keep = p;
  double dropped = 0.0;
  while (keep > 0) {
    const double s4 = std::pow(sv[keep - 1], 4);
    if (dropped + s4 > budget) break;
    dropped += s4;
    --keep;
  }
  keep = std::min(keep, max_rank);  // hard cap wins over the error bound

  Eigen::MatrixXd out = thin_q * svd.matrixU().leftCols(keep) * sv.head(keep).asDiagonal();
  return LowRankFactor(std::move(out));
}

}  // namespace nino
