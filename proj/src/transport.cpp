#include "nino/transport.hpp"

#include <Eigen/LU>
#include <Eigen/SparseLU>
#include <cmath>
#include <memory>
#include <sstream>
#include <vector>

namespace nino {

SpMat assemble_transport_operator(const VelocityField& vel, BoundaryRule bc) {
  const Grid& g = vel.grid;
  if (!vel.u_east.allFinite() || !vel.v_north.allFinite())
    throw DataError("assemble_transport_operator: velocity field has non-finite entries");
  const double dx = g.dx();
  const double dy = g.dy();
  const bool periodic_lon = (bc == BoundaryRule::periodic_in_longitude);

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(g.size()) * 3);

  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const int row = g.index(i, j);
      const double u = vel.u_east[row];
      const double v = vel.v_north[row];

      if (u != 0.0) {
        // upwind neighbour sits where the flow comes from
        int in = (u > 0.0) ? i - 1 : i + 1;
        if (periodic_lon) in = (in + g.nx) % g.nx;
        trip.emplace_back(row, row, -std::abs(u) / dx);
        if (in >= 0 && in < g.nx)
          trip.emplace_back(row, g.index(in, j), std::abs(u) / dx);
        // otherwise: inflow from outside the basin carries anomaly 0
      }
      if (v != 0.0 && g.ny > 1) {
        const int jn = (v > 0.0) ? j - 1 : j + 1;
        trip.emplace_back(row, row, -std::abs(v) / dy);
        if (jn >= 0 && jn < g.ny)
          trip.emplace_back(row, g.index(i, jn), std::abs(v) / dy);
      }
    }
  }

  SpMat a(g.size(), g.size());
  a.setFromTriplets(trip.begin(), trip.end());
  a.makeCompressed();
  return a;
}

double gershgorin_max_real_bound(const SpMat& a) {
  // discs are centred on the diagonal; off-diagonal magnitudes bound the radius
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(a.rows());
  Eigen::VectorXd radius = Eigen::VectorXd::Zero(a.rows());
  for (int k = 0; k < a.outerSize(); ++k) {
    for (SpMat::InnerIterator it(a, k); it; ++it) {
      if (it.row() == it.col())
        diag[it.row()] += it.value();
      else
        radius[it.row()] += std::abs(it.value());
    }
  }
  return (diag + radius).maxCoeff();
}

namespace {

struct CnCondEstimate {
  double residual;
  double cond;
};

template <class Solver, class Mat>
CnCondEstimate cn_residual(const Solver& solver, const Mat& lhs, const Eigen::MatrixXd& rhs,
                           const Eigen::MatrixXd& sol) {
  const double rn = (lhs * sol - rhs).norm();
  const double scale = rhs.norm();
  // rough 1-norm condition estimate from one extra solve on the ones vector
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(lhs.rows());
  Eigen::VectorXd y = solver.solve(ones);
  double anorm = 0.0;
  for (int c = 0; c < lhs.cols(); ++c) {
    double s = 0.0;
    if constexpr (std::is_same_v<Mat, SpMat>) {
      for (SpMat::InnerIterator it(lhs, c); it; ++it) s += std::abs(it.value());
    } else {
      s = lhs.col(c).cwiseAbs().sum();
    }
    anorm = std::max(anorm, s);
  }
  return {scale > 0 ? rn / scale : rn, anorm * y.cwiseAbs().maxCoeff()};
}

}  // namespace

struct CrankNicolsonStepper::Impl {
  // exactly one of the two solvers is active, matching the drift's storage
  std::unique_ptr<Eigen::SparseLU<SpMat>> sparse_lu;
  std::unique_ptr<Eigen::PartialPivLU<Eigen::MatrixXd>> dense_lu;
  SpMat sparse_lhs, sparse_rhs;
  Eigen::MatrixXd dense_lhs, dense_rhs;
  bool sparse = false;
};

CrankNicolsonStepper::CrankNicolsonStepper(const SpMat& a, double h)
    : impl_(std::make_unique<Impl>()), h_(h), n_(static_cast<int>(a.rows())) {
  if (a.rows() != a.cols()) throw DataError("CrankNicolsonStepper: drift must be square");
  if (!(h > 0.0)) throw DataError("CrankNicolsonStepper: step size must be positive");
  SpMat id(n_, n_);
  id.setIdentity();
  impl_->sparse = true;
  impl_->sparse_lhs = id - (h / 2.0) * a;
  impl_->sparse_rhs = id + (h / 2.0) * a;
  impl_->sparse_lhs.makeCompressed();
  impl_->sparse_lu = std::make_unique<Eigen::SparseLU<SpMat>>();
  impl_->sparse_lu->compute(impl_->sparse_lhs);
  if (impl_->sparse_lu->info() != Eigen::Success)
    throw NumericalError("CrankNicolsonStepper: sparse LU factorization failed (singular system?)");
}

CrankNicolsonStepper::CrankNicolsonStepper(const Eigen::MatrixXd& a, double h)
    : impl_(std::make_unique<Impl>()), h_(h), n_(static_cast<int>(a.rows())) {
  if (a.rows() != a.cols()) throw DataError("CrankNicolsonStepper: drift must be square");
  if (!(h > 0.0)) throw DataError("CrankNicolsonStepper: step size must be positive");
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n_, n_);
  impl_->sparse = false;
  impl_->dense_lhs = id - (h / 2.0) * a;
  impl_->dense_rhs = id + (h / 2.0) * a;
  impl_->dense_lu = std::make_unique<Eigen::PartialPivLU<Eigen::MatrixXd>>(impl_->dense_lhs);
}

CrankNicolsonStepper::~CrankNicolsonStepper() = default;
CrankNicolsonStepper::CrankNicolsonStepper(CrankNicolsonStepper&&) noexcept = default;
CrankNicolsonStepper& CrankNicolsonStepper::operator=(CrankNicolsonStepper&&) noexcept = default;

Eigen::MatrixXd CrankNicolsonStepper::solve_implicit(const Eigen::MatrixXd& rhs) const {
  Eigen::MatrixXd sol;
  CnCondEstimate est{};
  if (impl_->sparse) {
    sol = impl_->sparse_lu->solve(rhs);
    est = cn_residual(*impl_->sparse_lu, impl_->sparse_lhs, rhs, sol);
  } else {
    sol = impl_->dense_lu->solve(rhs);
    est = cn_residual(*impl_->dense_lu, impl_->dense_lhs, rhs, sol);
  }
  if (!(est.residual <= 1e-10)) {
    std::ostringstream msg;
    msg << "CrankNicolsonStepper: implicit solve residual " << est.residual
        << " exceeds 1e-10; system is singular or ill-conditioned (rough condition estimate "
        << est.cond << ")";
    throw NumericalError(msg.str());
  }
  return sol;
}

Eigen::MatrixXd CrankNicolsonStepper::apply_explicit(const Eigen::MatrixXd& x) const {
  return impl_->sparse ? Eigen::MatrixXd(impl_->sparse_rhs * x)
                       : Eigen::MatrixXd(impl_->dense_rhs * x);
}

Eigen::MatrixXd CrankNicolsonStepper::step(const Eigen::MatrixXd& x) const {
  return solve_implicit(apply_explicit(x));
}

Eigen::VectorXd CrankNicolsonStepper::step(const Eigen::VectorXd& x) const {
  if (x.size() != n_) throw DataError("CrankNicolsonStepper: state size mismatch");
  return step(Eigen::MatrixXd(x)).col(0);
}

Eigen::VectorXd crank_nicolson_step(const SpMat& a, const Eigen::VectorXd& x, double h) {
  return CrankNicolsonStepper(a, h).step(x);
}

Eigen::VectorXd crank_nicolson_step(const Eigen::MatrixXd& a, const Eigen::VectorXd& x,
                                    double h) {
  return CrankNicolsonStepper(a, h).step(x);
}

}  // namespace nino
