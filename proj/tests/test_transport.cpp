#include <doctest.h>

#include <cmath>

#include "nino/transport.hpp"
#include "support/oracles.hpp"

using namespace nino;

namespace {

VelocityField constant_velocity(const Grid& g, double u, double v) {
  return VelocityField(g, Eigen::VectorXd::Constant(g.size(), u),
                       Eigen::VectorXd::Constant(g.size(), v));
}

}  // namespace

TEST_CASE("zero velocity assembles the zero operator") {
  Grid g(4, 3, 0.0, 3.0, 0.0, 2.0);
  SpMat a = assemble_transport_operator(constant_velocity(g, 0.0, 0.0));
  CHECK(a.nonZeros() == 0);
}

TEST_CASE("upwind stencil for constant eastward flow, zero-inflow") {
  // 3x3 grid, dx = dy = 1, u = (1, 0): interior rows carry +1 at the west
  // neighbour and -1 on the diagonal (upwind from the west)
  Grid g(3, 3, 0.0, 2.0, 0.0, 2.0);
  Eigen::MatrixXd a = assemble_transport_operator(constant_velocity(g, 1.0, 0.0));
  const int mid = g.index(1, 1);  // k = 4
  CHECK(a(mid, g.index(0, 1)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(a(mid, mid) == doctest::Approx(-1.0).epsilon(1e-15));
  // nothing else in that row
  CHECK(a.row(mid).cwiseAbs().sum() == doctest::Approx(2.0).epsilon(1e-15));
  // the west column is an inflow boundary: diagonal only, no upwind neighbour
  const int west = g.index(0, 1);
  CHECK(a(west, west) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(a.row(west).cwiseAbs().sum() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("upwind stencil flips for westward flow") {
  Grid g(3, 1, 0.0, 2.0, 0.0, 0.0);
  Eigen::MatrixXd a = assemble_transport_operator(constant_velocity(g, -2.0, 0.0));
  // u < 0: upwind neighbour is the east one, coefficient |u|/dx = 2
  CHECK(a(1, 2) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(a(1, 1) == doctest::Approx(-2.0).epsilon(1e-15));
}

TEST_CASE("periodic-in-longitude rows sum to zero and conserve constants") {
  Grid g(6, 4, 0.0, 5.0, 0.0, 3.0);
  SpMat a = assemble_transport_operator(constant_velocity(g, 1.3, 0.0),
                                        BoundaryRule::periodic_in_longitude);
  const Eigen::VectorXd row_sums = a * Eigen::VectorXd::Ones(g.size());
  CHECK(row_sums.cwiseAbs().maxCoeff() <= 1e-14);  // A * 1 = 0
}

TEST_CASE("at most five nonzeros per row") {
  Grid g(8, 8, 0.0, 7.0, 0.0, 7.0);
  const Eigen::VectorXd u = oracle::randn(g.size(), 1, 11).col(0);
  const Eigen::VectorXd v = oracle::randn(g.size(), 1, 12).col(0);
  SpMat a = assemble_transport_operator(VelocityField(g, u, v));
  Eigen::VectorXi per_row = Eigen::VectorXi::Zero(g.size());
  for (int k = 0; k < a.outerSize(); ++k)
    for (SpMat::InnerIterator it(a, k); it; ++it) per_row[it.row()]++;
  CHECK(per_row.maxCoeff() <= 5);
}

TEST_CASE("non-finite velocity is rejected") {
  Grid g(3, 1, 0.0, 2.0, 0.0, 0.0);
  Eigen::VectorXd u = Eigen::VectorXd::Ones(3);
  u[1] = std::nan("");
  CHECK_THROWS_AS(assemble_transport_operator(VelocityField(g, u, Eigen::VectorXd::Zero(3))),
                  DataError);
}

TEST_CASE("Crank-Nicolson: A = 0 is the identity step") {
  SpMat a(3, 3);
  const Eigen::VectorXd x = oracle::randn(3, 1, 21).col(0);
  CHECK(crank_nicolson_step(a, x, 0.7) == x);
}

TEST_CASE("Crank-Nicolson scalar ratio (1 + ha/2) / (1 - ha/2)") {
  Eigen::MatrixXd a(1, 1);
  a << -1.0;
  Eigen::VectorXd x(1);
  x << 1.0;
  const Eigen::VectorXd y = crank_nicolson_step(a, x, 0.1);
  CHECK(y[0] == doctest::Approx(0.95 / 1.05).epsilon(1e-15));
}

TEST_CASE("Crank-Nicolson matches the dense-inverse oracle on a random stable drift") {
  const int n = 5;
  Eigen::MatrixXd a = oracle::randn(n, n, 31);
  a -= (1.0 + n) * Eigen::MatrixXd::Identity(n, n);  // diagonally dominant, stable
  const Eigen::VectorXd x = oracle::randn(n, 1, 32).col(0);
  const double h = 0.2;

  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  const Eigen::VectorXd want =
      (id - (h / 2.0) * a).inverse() * ((id + (h / 2.0) * a) * x);

  const Eigen::VectorXd dense = crank_nicolson_step(a, x, h);
  CHECK((dense - want).norm() <= 1e-9 * want.norm());

  const Eigen::VectorXd sparse = crank_nicolson_step(SpMat(a.sparseView()), x, h);
  CHECK((sparse - want).norm() <= 1e-9 * want.norm());
}

TEST_CASE("Crank-Nicolson step is time-reversible for skew-symmetric drifts") {
  // CN(-h, A) = CN(h, -A) algebraically; reverse by stepping with -A
  const int n = 6;
  Eigen::MatrixXd m = oracle::randn(n, n, 41);
  Eigen::MatrixXd a = m - m.transpose();  // skew-symmetric
  const Eigen::VectorXd x = oracle::randn(n, 1, 42).col(0);
  const double h = 0.3;
  const Eigen::VectorXd there = crank_nicolson_step(a, x, h);
  const Eigen::VectorXd back = crank_nicolson_step(Eigen::MatrixXd(-a), there, h);
  CHECK((back - x).norm() <= 1e-10 * x.norm());
  // and the step preserves the Euclidean norm (Cayley transform of skew A)
  CHECK(there.norm() == doctest::Approx(x.norm()).epsilon(1e-12));
}

TEST_CASE("CN advection step is L-infinity stable below the CFL-like bound") {
  // constant eastward flow, zero-inflow: the step operator has nonnegative
  // entries and row sums < 1 whenever h |u| / dx <= 2
  Grid g(8, 4, 0.0, 7.0, 0.0, 3.0);
  SpMat a = assemble_transport_operator(constant_velocity(g, 1.0, 0.0));
  const double h = 0.9;  // courant number 0.9
  CrankNicolsonStepper cn(a, h);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(g.size(), g.size());
  const Eigen::MatrixXd step_op = cn.step(eye);
  double max_row_sum = 0.0;
  for (int r = 0; r < step_op.rows(); ++r)
    max_row_sum = std::max(max_row_sum, step_op.row(r).cwiseAbs().sum());
  CHECK(max_row_sum <= 1.0 + 1e-12);
}

TEST_CASE("stepper variants agree and report dimensions") {
  Grid g(4, 2, 0.0, 3.0, 0.0, 1.0);
  SpMat a = assemble_transport_operator(constant_velocity(g, 0.5, -0.25));
  CrankNicolsonStepper cn(a, 0.4);
  CHECK(cn.dim() == 8);
  CHECK(cn.step_size() == 0.4);
  const Eigen::VectorXd x = oracle::randn(8, 1, 51).col(0);
  // step == solve_implicit(apply_explicit(.))
  const Eigen::MatrixXd via_parts = cn.solve_implicit(cn.apply_explicit(x));
  CHECK(cn.step(x) == via_parts.col(0));
  const Eigen::VectorXd wrong = Eigen::VectorXd::Zero(7);
  CHECK_THROWS_AS(cn.step(wrong), DataError);
}

TEST_CASE("Gershgorin bound on the maximum real eigenvalue part") {
  Eigen::MatrixXd d(2, 2);
  d << -2.0, 1.0, 0.5, -3.0;
  CHECK(gershgorin_max_real_bound(SpMat(d.sparseView())) ==
        doctest::Approx(-1.0).epsilon(1e-15));

  // transport minus damping: bound <= -gamma (upwind rows sum to <= 0)
  Grid g(6, 3, 0.0, 5.0, 0.0, 2.0);
  SpMat t = assemble_transport_operator(constant_velocity(g, 0.8, 0.3));
  SpMat id(g.size(), g.size());
  id.setIdentity();
  SpMat drift = t - 0.1 * id;
  CHECK(gershgorin_max_real_bound(drift) <= -0.1 + 1e-14);
}
