#include <doctest.h>

#include <cmath>
#include <vector>

#include "nino/chaos.hpp"
#include "nino/dle.hpp"
#include "support/oracles.hpp"

using namespace nino;

// --------------------------------------------------------------- KL eigenpairs

TEST_CASE("zero-amplitude kernel yields all-zero KL eigenvalues") {
  Grid g(6, 4, 0.0, 10.0, 0.0, 6.0);
  KLBasis kl = kl_eigenpairs(g, KernelSpec{0.0, 2.0}, 5);
  CHECK(kl.lambda.size() == 5);
  CHECK(kl.lambda.cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(kl_eigenpairs(g, KernelSpec{1.0, 0.0}, 3), DataError);
  CHECK_THROWS_AS(kl_eigenpairs(g, KernelSpec{-1.0, 1.0}, 3), DataError);
}

TEST_CASE("KL eigenvalues are nonnegative and nonincreasing") {
  Grid g(8, 5, 0.0, 21.0, -6.0, 6.0);
  KLBasis kl = kl_eigenpairs(g, KernelSpec{1.5, 4.0}, 8);
  for (int k = 0; k < 8; ++k) {
    CHECK(kl.lambda[k] >= 0.0);
    if (k > 0) CHECK(kl.lambda[k] <= kl.lambda[k - 1] + 1e-14);
  }
}

TEST_CASE("KL eigenfields are orthonormal in the weighted inner product") {
  Grid g(7, 4, 0.0, 18.0, 0.0, 9.0);
  KLBasis kl = kl_eigenpairs(g, KernelSpec{1.0, 5.0}, 6);
  const Eigen::MatrixXd gram =
      kl.phi.transpose() * kl.weights.asDiagonal() * kl.phi;
  CHECK((gram - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("coarse-grid KL eigenvalues match a fine Nystrom oracle in 1-D") {
  // 1-D exponential kernel on [0, L]: compare the leading eigenvalues of the
  // library's 40-point grid against an inline 400-point Nystrom solve
  const double L = 30.0, len = 6.0, q = 2.0;
  Grid g(40, 1, 0.0, L, 0.0, 0.0);
  KLBasis kl = kl_eigenpairs(g, KernelSpec{q, len}, 3);

  const int m = 400;
  Eigen::VectorXd x(m), w(m);
  const double dx = L / (m - 1);
  for (int i = 0; i < m; ++i) {
    x[i] = i * dx;
    w[i] = (i == 0 || i == m - 1) ? dx / 2.0 : dx;
  }
  Eigen::MatrixXd kmat(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) kmat(i, j) = q * std::exp(-std::abs(x[i] - x[j]) / len);
  Eigen::VectorXd sw = w.cwiseSqrt();
  Eigen::MatrixXd sym = sw.asDiagonal() * kmat * sw.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  Eigen::VectorXd fine = es.eigenvalues().tail(3).reverse();

  for (int k = 0; k < 3; ++k)
    CHECK(kl.lambda[k] == doctest::Approx(fine[k]).epsilon(0.01));
}

TEST_CASE("kl_noise_factor scales eigenfields by root eigenvalues") {
  Grid g(6, 3, 0.0, 10.0, 0.0, 4.0);
  KLBasis kl = kl_eigenpairs(g, KernelSpec{1.0, 3.0}, 4);
  Eigen::MatrixXd f = kl_noise_factor(kl, 2);
  REQUIRE(f.cols() == 2);
  CHECK((f.col(0) - std::sqrt(kl.lambda[0]) * kl.phi.col(0)).norm() <= 1e-14);
  CHECK((f.col(1) - std::sqrt(kl.lambda[1]) * kl.phi.col(1)).norm() <= 1e-14);
  CHECK_THROWS_AS(kl_noise_factor(kl, 9), DataError);
}

// ----------------------------------------------------------------- chaos basis

TEST_CASE("chaos basis size is the binomial count") {
  CHECK(build_chaos_basis(3, 2).size() == 10);  // C(3+2, 2)
  CHECK(build_chaos_basis(2, 3).size() == 10);
  CHECK(build_chaos_basis(5, 1).size() == 6);
}

TEST_CASE("single-variable degree-1 basis is {1, He1} with unit norms") {
  ChaosBasis b = build_chaos_basis(1, 1);
  REQUIRE(b.size() == 2);
  CHECK(b.indices[0] == std::vector<int>{0});
  CHECK(b.indices[1] == std::vector<int>{1});
  CHECK(b.norms[0] == 1.0);
  CHECK(b.norms[1] == 1.0);
}

TEST_CASE("graded lexicographic order for two variables, degree two") {
  ChaosBasis b = build_chaos_basis(2, 2);
  const std::vector<std::vector<int>> want = {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
  REQUIRE(b.size() == 6);
  for (int i = 0; i < 6; ++i) CHECK(b.indices[i] == want[i]);
  // norms are products of factorials
  CHECK(b.norms[3] == 2.0);  // <He2, He2> = 2!
  CHECK(b.norms[4] == 1.0);
  // find() inverts the ordering; out-of-truncation returns -1
  CHECK(b.find({1, 1}) == 4);
  CHECK(b.find({3, 0}) == -1);
}

TEST_CASE("oversized basis request is rejected") {
  CHECK_THROWS_AS(build_chaos_basis(200, 10), DataError);
}

// -------------------------------------------------------------- triple products

TEST_CASE("Hermite triple product closed cases") {
  CHECK(hermite_triple(1, 1, 2) == 2.0);
  CHECK(hermite_triple(0, 0, 0) == 1.0);
  CHECK(hermite_triple(1, 1, 0) == 1.0);   // <He1 He1> = 1
  CHECK(hermite_triple(2, 2, 2) == 8.0);   // 2!2!2!/(1!1!1!) = 8
  CHECK(hermite_triple(1, 2, 3) == 6.0);
  CHECK(hermite_triple(0, 1, 2) == 0.0);   // triangle violated
  CHECK(hermite_triple(1, 1, 1) == 0.0);   // odd total degree
}

TEST_CASE("Hermite triples match Gauss-Hermite quadrature") {
  auto [nodes, weights] = oracle::gauss_hermite(25);
  for (int i = 0; i <= 6; ++i)
    for (int j = 0; j <= 6; ++j)
      for (int k = 0; k <= 6; ++k) {
        double quad = 0.0, mag = 0.0;  // mag bounds the cancellation roundoff
        for (int q = 0; q < nodes.size(); ++q) {
          const double term = weights[q] * oracle::hermite(i, nodes[q]) *
                              oracle::hermite(j, nodes[q]) * oracle::hermite(k, nodes[q]);
          quad += term;
          mag += std::abs(term);
        }
        CHECK(std::abs(hermite_triple(i, j, k) - quad) <= 1e-12 * std::max(1.0, mag));
      }
}

TEST_CASE("multivariate triples factor over variables") {
  ChaosBasis b = build_chaos_basis(2, 2);
  // <H_{(1,0)} H_{(0,1)} H_{(1,1)}> = <He1 He0 He1> * <He0 He1 He1> = 1
  CHECK(chaos_triple(b, 1, 2, 4) == 1.0);
  // <H_0 H_i H_j> = delta_ij <H_i, H_i>
  for (int i = 0; i < b.size(); ++i)
    for (int j = 0; j < b.size(); ++j)
      CHECK(chaos_triple(b, 0, i, j) == (i == j ? b.norms[i] : 0.0));
}

TEST_CASE("hermite_eval matches the recurrence oracle") {
  for (int n = 0; n <= 8; ++n)
    for (double x : {-2.3, -0.5, 0.0, 0.7, 1.9})
      CHECK(hermite_eval(n, x) == doctest::Approx(oracle::hermite(n, x)).epsilon(1e-12));
}

TEST_CASE("time-window profile is the normalized indicator") {
  ChaosVariableSpec v{0, 2.0, 4.0};
  CHECK(v.profile(2.0) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(v.profile(3.9) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(v.profile(4.0) == 0.0);
  CHECK(v.profile(1.9) == 0.0);
}

// ------------------------------------------------------------ Galerkin assembly

TEST_CASE("degree-0 truncation gives a single unforced block") {
  Eigen::MatrixXd a = -Eigen::MatrixXd::Identity(3, 3);
  Eigen::MatrixXd cols = oracle::randn(3, 2, 301);
  GalerkinSpec spec;
  spec.kind = ModelKind::additive;
  spec.degree = 0;
  spec.time_windows = 2;
  spec.horizon = 1.0;
  ChaosSystem sys = assemble_galerkin_system(DriftMatrix(a), cols, Eigen::MatrixXd(), spec);
  CHECK(sys.basis.size() == 1);
  CHECK(sys.forcings.empty());
  CHECK(sys.couplings.empty());
}

TEST_CASE("additive assembly forces exactly the degree-1 blocks") {
  Eigen::MatrixXd a = -Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd cols = oracle::randn(2, 3, 302);  // three channels
  GalerkinSpec spec;
  spec.kind = ModelKind::additive;
  spec.degree = 2;
  spec.time_windows = 2;
  spec.horizon = 4.0;
  ChaosSystem sys = assemble_galerkin_system(DriftMatrix(a), cols, Eigen::MatrixXd(), spec);

  REQUIRE(sys.variables.size() == 6);  // 3 channels x 2 windows
  // variable v = channel * windows + window; window splits [0, horizon]
  CHECK(sys.variables[1].channel == 0);
  CHECK(sys.variables[1].t0 == doctest::Approx(2.0));
  CHECK(sys.variables[1].t1 == doctest::Approx(4.0));
  CHECK(sys.variables[4].channel == 2);

  REQUIRE(sys.forcings.size() == 6);  // one per variable, into its degree-1 block
  for (const auto& f : sys.forcings) {
    std::vector<int> alpha(6, 0);
    alpha[f.variable] = 1;
    CHECK(f.block == sys.basis.find(alpha));
    CHECK((f.field - cols.col(sys.variables[f.variable].channel)).norm() == 0.0);
  }
  CHECK(sys.couplings.empty());
  CHECK(sys.kind == ModelKind::additive);
}

TEST_CASE("multiplicative assembly applies the Wong-Zakai drift correction") {
  Eigen::MatrixXd a(1, 1), s1(1, 1);
  a << -1.0;
  s1 << 0.5;
  GalerkinSpec spec;
  spec.kind = ModelKind::multiplicative;
  spec.degree = 2;
  spec.time_windows = 1;
  spec.horizon = 1.0;
  ChaosSystem sys =
      assemble_galerkin_system(DriftMatrix(a), Eigen::MatrixXd::Zero(1, 1), s1, spec);
  // a_eff = a - s1^2 / 2 = -1.125
  const Eigen::MatrixXd a_eff = std::get<Eigen::MatrixXd>(sys.a_eff);
  CHECK(a_eff(0, 0) == doctest::Approx(-1.125).epsilon(1e-14));
  CHECK_FALSE(sys.couplings.empty());

  GalerkinSpec bad = spec;
  bad.kind = ModelKind::mixed;
  CHECK_THROWS_AS(assemble_galerkin_system(DriftMatrix(a), Eigen::MatrixXd::Zero(1, 1), s1, bad),
                  DataError);
}

// -------------------------------------------------------------- additive solves

TEST_CASE("scalar additive chaos variance tracks 1 - e^{-2t}") {
  // dx = -x dt + sqrt(2) dW from x0 = 0 has Var(t) = 1 - e^{-2t}
  Eigen::MatrixXd a(1, 1);
  a << -1.0;
  Eigen::MatrixXd cols(1, 1);
  cols << std::sqrt(2.0);
  GalerkinSpec spec;
  spec.kind = ModelKind::additive;
  spec.degree = 1;
  spec.time_windows = 100;
  spec.horizon = 5.0;
  ChaosSystem sys = assemble_galerkin_system(DriftMatrix(a), cols, Eigen::MatrixXd(), spec);

  const double h = 0.0125;  // 4 steps per window, windows aligned with the grid
  const int steps = 400;
  ChaosSolution sol = solve_chaos(sys, Eigen::VectorXd::Zero(1), h, steps);
  ChaosMoments m = chaos_statistics(sol.final_coeffs(), sol.basis);
  CHECK(std::abs(m.mean[0]) <= 1e-12);
  CHECK(m.variance[0] == doctest::Approx(1.0 - std::exp(-10.0)).epsilon(2e-3));
}

TEST_CASE("zero noise reduces mode zero to the CN mean") {
  const Eigen::MatrixXd a = -0.5 * Eigen::MatrixXd::Identity(3, 3);
  Eigen::MatrixXd cols = Eigen::MatrixXd::Zero(3, 1);
  GalerkinSpec spec;
  spec.kind = ModelKind::additive;
  spec.degree = 2;
  spec.time_windows = 2;
  spec.horizon = 1.0;
  ChaosSystem sys = assemble_galerkin_system(DriftMatrix(a), cols, Eigen::MatrixXd(), spec);
  Eigen::VectorXd x0(3);
  x0 << 1.0, -1.0, 2.0;
  ChaosSolution sol = solve_chaos(sys, x0, 0.125, 8);

  Eigen::MatrixXd mean = propagate_mean(DriftMatrix(a), x0, 0.125, 8);
  CHECK((sol.final_coeffs().col(0) - mean.col(8)).norm() <= 1e-12);
  for (int k = 1; k < sol.basis.size(); ++k)
    CHECK(sol.final_coeffs().col(k).norm() == 0.0);
}

TEST_CASE("additive chaos matches the covariance flow on a small grid model") {
  // 3x3 grid, damping drift, rank-2 noise; degree-1 chaos with fine windows
  // must agree with the factored covariance solver on the final variance field
  const int n = 9;
  Eigen::MatrixXd a = -Eigen::MatrixXd::Identity(n, n);
  for (int i = 0; i + 1 < n; ++i) a(i, i + 1) = 0.2;
  Eigen::MatrixXd cols = 0.6 * oracle::randn(n, 2, 303);

  GalerkinSpec spec;
  spec.kind = ModelKind::additive;
  spec.degree = 1;
  spec.time_windows = 40;
  spec.horizon = 2.0;
  ChaosSystem sys = assemble_galerkin_system(DriftMatrix(a), cols, Eigen::MatrixXd(), spec);
  const double h = 0.0125;  // 4 steps per window
  ChaosSolution sol = solve_chaos(sys, Eigen::VectorXd::Zero(n), h, 160);
  ChaosMoments cm = chaos_statistics(sol.final_coeffs(), sol.basis);

  OperatorSet ops;
  ops.kind = ModelKind::additive;
  ops.a = a;
  ops.s = cols;
  DLEProblem prob = DLEProblem::from_operators(ops, LowRankFactor(Eigen::MatrixXd::Zero(n, 0)));
  DLESolution dle = solve_dle(prob, Eigen::VectorXd::Zero(n), h, 160);
  const Eigen::VectorXd var_dle = dle.final().cov.product().diagonal();

  CHECK((cm.variance - var_dle).norm() <= 0.05 * var_dle.norm());
}

// --------------------------------------------------------- multiplicative solves

TEST_CASE("scalar multiplicative chaos approaches the exact second moment") {
  // Ito dx = a x dt + s1 x dW: E[x^2](T) = x0^2 e^{(2a + s1^2) T}
  Eigen::MatrixXd a(1, 1), s1(1, 1);
  a << -1.0;
  s1 << 0.4;
  const double T = 1.0;

  auto second_moment = [&](int degree) {
    GalerkinSpec spec;
    spec.kind = ModelKind::multiplicative;
    spec.degree = degree;
    spec.time_windows = 1;
    spec.horizon = T;
    ChaosSystem sys =
        assemble_galerkin_system(DriftMatrix(a), Eigen::MatrixXd::Zero(1, 1), s1, spec);
    Eigen::VectorXd x0(1);
    x0 << 1.0;
    ChaosSolution sol = solve_chaos(sys, x0, T / 800, 800);
    ChaosMoments m = chaos_statistics(sol.final_coeffs(), sol.basis);
    return m.mean[0] * m.mean[0] + m.variance[0];
  };

  const double exact = std::exp((-2.0 + 0.16) * T);
  double prev_err = -1.0;
  for (int degree : {1, 2, 3}) {
    const double err = std::abs(second_moment(degree) - exact) / exact;
    if (degree > 1) CHECK(err < prev_err);
    prev_err = err;
  }
  CHECK(prev_err <= 5e-3);  // K = 3 already captures the lognormal tightly here
}

// ------------------------------------------------- statistics and realizations

TEST_CASE("chaos_statistics weights squares by the basis norms") {
  ChaosBasis b = build_chaos_basis(1, 2);  // norms {1, 1, 2}
  Eigen::MatrixXd coeffs(2, 3);
  coeffs << 1.0, 2.0, 3.0,
            4.0, -1.0, 0.5;
  ChaosMoments m = chaos_statistics(coeffs, b);
  CHECK(m.mean[0] == 1.0);
  CHECK(m.mean[1] == 4.0);
  CHECK(m.variance[0] == doctest::Approx(4.0 + 2.0 * 9.0));
  CHECK(m.variance[1] == doctest::Approx(1.0 + 2.0 * 0.25));
}

TEST_CASE("chaos_realization evaluates the polynomial at given variables") {
  ChaosBasis b = build_chaos_basis(2, 2);
  Eigen::MatrixXd coeffs = oracle::randn(3, 6, 304);
  Eigen::VectorXd eta(2);
  eta << 0.3, -1.2;
  Eigen::VectorXd got = chaos_realization(coeffs, b, eta);
  Eigen::VectorXd want = Eigen::VectorXd::Zero(3);
  for (int k = 0; k < 6; ++k) {
    double poly = 1.0;
    for (int v = 0; v < 2; ++v) poly *= oracle::hermite(b.indices[k][v], eta[v]);
    want += coeffs.col(k) * poly;
  }
  CHECK((got - want).norm() <= 1e-12 * want.norm());
}

TEST_CASE("sampled realizations reproduce the chaos moments") {
  ChaosBasis b = build_chaos_basis(2, 2);
  Eigen::MatrixXd coeffs = oracle::randn(2, 6, 305);
  const int draws = 100000;
  std::mt19937_64 rng(306);
  std::normal_distribution<double> normal;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(2), sum2 = Eigen::VectorXd::Zero(2);
  for (int d = 0; d < draws; ++d) {
    Eigen::VectorXd eta(2);
    eta << normal(rng), normal(rng);
    Eigen::VectorXd x = chaos_realization(coeffs, b, eta);
    sum += x;
    sum2 += x.cwiseProduct(x);
  }
  Eigen::VectorXd mean = sum / draws;
  Eigen::VectorXd var = sum2 / draws - mean.cwiseProduct(mean);
  ChaosMoments m = chaos_statistics(coeffs, b);
  for (int i = 0; i < 2; ++i) {
    // MC error across 1e5 draws; generous 4-sigma style bounds
    CHECK(std::abs(mean[i] - m.mean[i]) <= 0.05 * std::max(1.0, std::abs(m.mean[i])));
    CHECK(std::abs(var[i] - m.variance[i]) <= 0.08 * std::max(1.0, m.variance[i]));
  }
}

TEST_CASE("chaos L2 norm and degree-1 distance basics") {
  ChaosBasis b = build_chaos_basis(1, 1);
  Eigen::MatrixXd coeffs(1, 2);
  coeffs << 3.0, 4.0;
  CHECK(chaos_l2_norm(coeffs, b) == doctest::Approx(5.0));

  // identical degree-1 solutions are at distance zero
  Eigen::MatrixXd a(1, 1);
  a << -1.0;
  Eigen::MatrixXd cols(1, 1);
  cols << 1.0;
  GalerkinSpec spec;
  spec.kind = ModelKind::additive;
  spec.degree = 1;
  spec.time_windows = 2;
  spec.horizon = 1.0;
  ChaosSystem sys = assemble_galerkin_system(DriftMatrix(a), cols, Eigen::MatrixXd(), spec);
  ChaosSolution s1 = solve_chaos(sys, Eigen::VectorXd::Zero(1), 0.125, 8);
  ChaosSolution s2 = solve_chaos(sys, Eigen::VectorXd::Zero(1), 0.125, 8);
  CHECK(chaos_l2_distance_degree1(s1, s2) == 0.0);
}
