#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "nino/scenario.hpp"
#include "support/oracles.hpp"

using namespace nino;

namespace {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// exception message helper: run f, return the DataError text (empty if none)
template <typename F>
std::string data_error_of(F&& f) {
  try {
    f();
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

AnomalySeries sample_series() {
  Grid g(3, 2, 150.0, 170.0, -5.0, 5.0);
  Eigen::MatrixXd snaps(6, 3);
  snaps.col(0) << 0.1, -0.2, 0.3, 1e300, -1e-300, 0.0;
  snaps.col(1) << 0.1 + 0.2, 3.141592653589793, -12345.6789, 1.0 / 3.0, 2.0, -7.5;
  snaps.col(2) = oracle::randn(6, 1, 601).col(0);
  return AnomalySeries(g, 2.5, 0.5, snaps);
}

}  // namespace

// ------------------------------------------------------------- grid series IO

TEST_CASE("grid series round-trips bitwise through text") {
  AnomalySeries s = sample_series();
  std::ostringstream out;
  write_grid_series(s, out);
  std::istringstream in(out.str());
  AnomalySeries back = read_grid_series(in, "mem");
  CHECK(back.grid.same_layout(s.grid));
  CHECK(back.t0_days == s.t0_days);
  CHECK(back.dt_days == s.dt_days);
  CHECK(back.snapshots == s.snapshots);  // 17 significant digits: exact
}

TEST_CASE("grid series reader skips comments and blank lines") {
  std::string text =
      "# a comment\n"
      "ssta-grid 1\n"
      "\n"
      "2 1\n"
      "0 10 0 0\n"
      "3 1 0\n"
      "# snapshot 0\n"
      "1 2\n"
      "\n"
      "3 4\n"
      "5 6\n";
  std::istringstream in(text);
  AnomalySeries s = read_grid_series(in, "mem");
  CHECK(s.steps() == 3);
  CHECK(s.snapshots(0, 0) == 1.0);
  CHECK(s.snapshots(1, 2) == 6.0);
}

TEST_CASE("grid series reader error messages carry line numbers") {
  auto msg_of = [](const std::string& text) {
    return data_error_of([&] {
      std::istringstream in(text);
      read_grid_series(in, "f.ssta");
    });
  };

  CHECK(msg_of("ocvel 1\n") == "f.ssta:1: not a ssta-grid file (header `ocvel 1`)");
  CHECK(msg_of("ssta-grid 2\n") == "f.ssta:1: unsupported ssta-grid version `2` (expected 1)");
  CHECK(msg_of("") == "f.ssta: empty file, expected `ssta-grid 1` header");

  const std::string head = "ssta-grid 1\n2 1\n0 10 0 0\n3 1 0\n";
  CHECK(msg_of(head + "1 2\n3 4\n") ==
        "f.ssta: truncated file: expected 3 value rows, found 2");
  CHECK(msg_of(head + "1 2\n3 4\n5 6 7\n") == "f.ssta:7: expected 2 values, found 3");
  CHECK(msg_of(head + "1 2\n3 nan\n5 6\n") == "f.ssta:6: non-finite value 'nan'");
  CHECK(msg_of(head + "1 2\n3 x4\n5 6\n") == "f.ssta:6: malformed number 'x4'");
  CHECK(msg_of(head + "1 2\n3 4\n5 6\n7 8\n") ==
        "f.ssta:8: trailing content after 3 snapshots");
  CHECK(msg_of("ssta-grid 1\n2 1\n0 10 0 0\n0 1 0\n") ==
        "f.ssta:4: need at least one time slice, got nt = 0");
  // grid validation happens once the whole header is read (line 4)
  CHECK(msg_of("ssta-grid 1\n1 1\n0 10 0 0\n3 1 0\n") ==
        "f.ssta:4: Grid: need nx >= 2 and ny >= 1");
}

// ---------------------------------------------------------------- velocity IO

TEST_CASE("velocity field round-trips bitwise") {
  Grid g(3, 2, 0.0, 20.0, -10.0, 10.0);
  VelocityField vel(g, oracle::randn(6, 1, 602).col(0), oracle::randn(6, 1, 603).col(0));
  std::ostringstream out;
  write_velocity_field(vel, out);
  std::istringstream in(out.str());
  VelocityField back = read_velocity_field(in, "mem");
  CHECK(back.grid.same_layout(g));
  CHECK(back.u_east == vel.u_east);
  CHECK(back.v_north == vel.v_north);
}

TEST_CASE("steady velocity reader rejects multiple time slices") {
  std::string text = "ocvel 1\n2 1\n0 10 0 0\n2 0 0\n1 1\n1 1\n1 1\n1 1\n";
  std::istringstream in(text);
  const std::string msg = data_error_of([&] { read_velocity_field(in, "v.ocvel"); });
  CHECK(msg == "v.ocvel:4: steady velocity reader supports a single time slice, got nt = 2");
}

// ------------------------------------------------------------ operator set IO

TEST_CASE("operator sets round-trip for every kind, densifying sparse drifts") {
  SUBCASE("additive with sparse drift and basis") {
    Eigen::MatrixXd ad(3, 3);
    ad << -1.0, 0.5, 0.0, 0.0, -2.0, 0.25, 0.0, 0.0, -0.5;
    OperatorSet ops;
    ops.kind = ModelKind::additive;
    ops.a = SpMat(ad.sparseView());
    ops.s = oracle::randn(3, 2, 604);
    ops.basis = oracle::randn(5, 3, 605);
    ops.lag_tau_days = 2.5;

    std::ostringstream out;
    write_operator_set(ops, out);
    std::istringstream in(out.str());
    OperatorSet back = read_operator_set(in, "mem");
    CHECK(back.kind == ModelKind::additive);
    CHECK(back.lag_tau_days == 2.5);
    REQUIRE(std::holds_alternative<Eigen::MatrixXd>(back.a));  // read back dense
    CHECK(std::get<Eigen::MatrixXd>(back.a) == ad);
    CHECK(back.s == ops.s);
    CHECK(back.basis == ops.basis);
  }

  SUBCASE("mixed with s1 and s2") {
    OperatorSet ops;
    ops.kind = ModelKind::mixed;
    ops.a = Eigen::MatrixXd(-Eigen::MatrixXd::Identity(2, 2));
    ops.s1 = 0.3 * Eigen::MatrixXd::Identity(2, 2);
    ops.s2 = oracle::randn(2, 1, 606);
    std::ostringstream out;
    write_operator_set(ops, out);
    std::istringstream in(out.str());
    OperatorSet back = read_operator_set(in, "mem");
    CHECK(back.kind == ModelKind::mixed);
    CHECK(back.s1 == ops.s1);
    CHECK(back.s2 == ops.s2);
    back.validate();
  }
}

TEST_CASE("operator set reader error messages") {
  auto msg_of = [](const std::string& text) {
    return data_error_of([&] {
      std::istringstream in(text);
      read_operator_set(in, "m.ops");
    });
  };

  const std::string head = "nino-ops 1\nkind additive\ntau_days 0\n";
  CHECK(msg_of("nino-ops 2\n") == "m.ops:1: unsupported nino-ops version `2` (expected 1)");
  CHECK(msg_of(head + "matrix q 1 1\n1\nend\n") == "m.ops:4: unknown matrix block 'q'");
  CHECK(msg_of(head + "matrix a 1 1\n1\nmatrix a 1 1\n1\nend\n") ==
        "m.ops:6: duplicate matrix block 'a'");
  CHECK(msg_of(head + "matrix a 1 1\n1\n") == "m.ops: unexpected end of file, expected `end`");
  CHECK(msg_of(head + "matrix s 1 1\n1\nend\n") == "m.ops: missing required matrix block 'a'");
  CHECK(msg_of(head + "matrix a 1 1\n1\nend\nleftover\n") ==
        "m.ops:7: trailing content after `end`");
  CHECK(msg_of("nino-ops 1\nkind banana\ntau_days 0\nend\n") ==
        "m.ops:2: unknown model kind 'banana' (expected additive|multiplicative|mixed)");
}

// ----------------------------------------------------------------- CSV output

TEST_CASE("error report CSV golden output") {
  ErrorReport rep;
  rep.time_days = {0.0, 0.5};
  rep.err_mean = {0.25, -0.5};
  rep.rel_l2 = {0.0, 0.125};
  rep.n_realizations = 2;
  std::ostringstream out;
  write_error_report_csv(rep, out);
  CHECK(out.str() ==
        "time_days,err_mean_degC,rel_l2\n"
        "0,0.25,0\n"
        "0.5,-0.5,0.125\n");
}

TEST_CASE("comparison CSV interleaves labelled reports") {
  ErrorReport a;
  a.time_days = {0.0};
  a.err_mean = {1.0};
  a.rel_l2 = {0.5};
  ErrorReport b;
  b.time_days = {0.0};
  b.err_mean = {-1.0};
  b.rel_l2 = {0.25};
  std::ostringstream out;
  write_comparison_csv({{"mean-cov", a}, {"galerkin", b}}, out);
  CHECK(out.str() ==
        "method,time_days,err_mean_degC,rel_l2\n"
        "mean-cov,0,1,0.5\n"
        "galerkin,0,-1,0.25\n");
}

// ---------------------------------------------------------------- field dumps

TEST_CASE("field text dump is north row first") {
  Grid g(2, 2, 0.0, 1.0, 0.0, 1.0);
  Eigen::VectorXd v(4);
  v << 0.0, 1.0, 2.0, 3.0;  // k = j*nx + i
  std::ostringstream out;
  write_field_text(Field(g, v), out);
  CHECK(out.str() == "2 3\n0 1\n");
}

TEST_CASE("PGM dump has exact header and big-endian samples") {
  Grid g(2, 2, 0.0, 1.0, 0.0, 1.0);
  Eigen::VectorXd v(4);
  v << 0.0, 1.0, 2.0, 3.0;
  std::ostringstream out;
  write_field_pgm(Field(g, v), out);

  const std::string want_header = "P5\n# linear scaling: value_degC = 0 + gray * " +
                                  g17(3.0 / 65535.0) + " (gray in 0..65535)\n2 2\n65535\n";
  // north row first: values {2, 3} then {0, 1}; gray = round(v * 65535 / 3)
  const unsigned char want_pixels[8] = {0xAA, 0xAA, 0xFF, 0xFF, 0x00, 0x00, 0x55, 0x55};
  const std::string got = out.str();
  REQUIRE(got.size() == want_header.size() + 8);
  CHECK(got.substr(0, want_header.size()) == want_header);
  for (int i = 0; i < 8; ++i)
    CHECK(static_cast<unsigned char>(got[want_header.size() + i]) == want_pixels[i]);
}

// -------------------------------------------------------------- configuration

TEST_CASE("scenario config parses minimal input with defaults") {
  std::string text =
      "# synthetic basin\n"
      "nx = 8\n"
      "ny = 4\n"
      "n_steps = 10\n";
  std::istringstream in(text);
  ScenarioConfig cfg = parse_scenario_config(in, "c.cfg");
  CHECK(cfg.grid.nx == 8);
  CHECK(cfg.grid.ny == 4);
  CHECK(cfg.grid.lon_min == 160.0);
  CHECK(cfg.grid.lon_max == 270.0);
  CHECK(cfg.velocity_name == "double-gyre");
  CHECK(cfg.gamma_per_day == 0.1);
  CHECK(cfg.kl_modes == 8);
  CHECK(cfg.dt_days == 1.0);
  CHECK(cfg.n_steps == 10);
  CHECK(cfg.substeps == 1);
  CHECK(cfg.seed == 0);
}

TEST_CASE("scenario config error cases") {
  auto msg_of = [](const std::string& text) {
    return data_error_of([&] {
      std::istringstream in(text);
      parse_scenario_config(in, "c.cfg");
    });
  };
  CHECK(msg_of("ny = 4\nn_steps = 10\n") == "c.cfg: missing required config key 'nx'");
  CHECK(msg_of("nx = 8\nny = 4\nn_steps = 10\nbogus = 1\n") ==
        "c.cfg:4: unknown config key 'bogus'");
  CHECK(msg_of("nx = 8\nnx = 9\nny = 4\nn_steps = 10\n") == "c.cfg:2: duplicate key 'nx'");
  CHECK(msg_of("nx 8\n") == "c.cfg:1: expected `key = value`, found `nx 8`");
  CHECK(msg_of("nx = 8\nny = 4\nn_steps = 10\nsubsteps = 0\n") ==
        "c.cfg: ScenarioConfig: substeps must be >= 1");
  CHECK(msg_of("nx = 8\nny = 4\nn_steps = 10\nkl_modes = 33\n") ==
        "c.cfg: ScenarioConfig: kl_modes exceeds the grid size");
  CHECK(msg_of("nx = 8\nny = 4\nn_steps = 10\ngamma_per_day = -1\n") ==
        "c.cfg: ScenarioConfig: gamma_per_day must be > 0 for a stable drift");
}

// ----------------------------------------------------------- velocity factory

TEST_CASE("double-gyre flow is tangent to the basin boundary") {
  Grid g(9, 5, 160.0, 260.0, -18.0, 18.0);
  VelocityField vel = make_velocity(g, "double-gyre", 0.2);
  for (int j = 0; j < g.ny; ++j) {
    CHECK(vel.u_east[g.index(0, j)] == 0.0);
    CHECK(std::abs(vel.u_east[g.index(g.nx - 1, j)]) <= 1e-15);
  }
  for (int i = 0; i < g.nx; ++i) {
    CHECK(vel.v_north[g.index(i, 0)] == 0.0);
    CHECK(std::abs(vel.v_north[g.index(i, g.ny - 1)]) <= 1e-15);
  }
  // interior flow is nonzero
  CHECK(vel.u_east.cwiseAbs().maxCoeff() > 0.0);

  VelocityField still = make_velocity(g, "zero", 0.2);
  CHECK(still.u_east.cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(make_velocity(g, "triple-gyre", 0.2), DataError);
}

// ------------------------------------------------------------------ generator

TEST_CASE("quiescent noise-free scenario decays exponentially") {
  ScenarioConfig cfg;
  cfg.grid = Grid(6, 3, 160.0, 220.0, -10.0, 10.0);
  cfg.velocity_name = "zero";
  cfg.gamma_per_day = 1.0;
  cfg.kernel = KernelSpec{0.0, 10.0};  // no stochastic forcing
  cfg.kl_modes = 1;
  cfg.dt_days = 1.0;
  cfg.substeps = 2;
  cfg.n_steps = 60;
  cfg.init_amplitude = 1.0;
  Scenario sc = generate_synthetic_scenario(cfg);

  REQUIRE(sc.series.steps() == 61);
  const double initial = sc.series.snapshots.col(0).norm();
  CHECK(initial > 0.0);
  for (int t = 1; t <= 60; ++t)
    CHECK(sc.series.snapshots.col(t).norm() < sc.series.snapshots.col(t - 1).norm());
  CHECK(sc.series.snapshots.col(60).norm() <= 1e-10 * initial);

  // ground truth carries the damping drift and a zero noise factor
  CHECK(sc.truth.kind == ModelKind::additive);
  CHECK(sc.truth.s.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("scenario generation is seed-deterministic") {
  ScenarioConfig cfg;
  cfg.grid = Grid(5, 3, 160.0, 200.0, -8.0, 8.0);
  cfg.velocity_name = "double-gyre";
  cfg.kernel = KernelSpec{0.3, 12.0};
  cfg.kl_modes = 3;
  cfg.n_steps = 20;
  cfg.seed = 42;
  Scenario a = generate_synthetic_scenario(cfg);
  Scenario b = generate_synthetic_scenario(cfg);
  CHECK(a.series.snapshots == b.series.snapshots);  // bitwise
  cfg.seed = 43;
  Scenario c = generate_synthetic_scenario(cfg);
  CHECK(a.series.snapshots != c.series.snapshots);
}

TEST_CASE("long quiescent runs reach the fluctuation-dissipation covariance") {
  // zero flow, diagonal damping: stationary covariance is S S^T / (2 gamma)
  ScenarioConfig cfg;
  cfg.grid = Grid(8, 4, 160.0, 230.0, -12.0, 12.0);
  cfg.velocity_name = "zero";
  cfg.gamma_per_day = 0.25;
  cfg.kernel = KernelSpec{0.5, 15.0};
  cfg.kl_modes = 4;
  cfg.dt_days = 1.0;
  cfg.substeps = 2;
  cfg.n_steps = 60000;
  cfg.init_amplitude = 0.0;
  cfg.seed = 7;
  Scenario sc = generate_synthetic_scenario(cfg);

  // discard the (short) transient, then estimate the stationary covariance
  const int burn = 2000;
  auto [c0, ctau] =
      lag_covariances(sc.series.snapshots.rightCols(sc.series.steps() - burn), 1);
  (void)ctau;
  const Eigen::MatrixXd a_true = Eigen::MatrixXd(std::get<SpMat>(sc.truth.a));
  const Eigen::MatrixXd want =
      oracle::solve_ale_kron(a_true, Eigen::MatrixXd(sc.truth.s * sc.truth.s.transpose()));
  CHECK(oracle::rel_fro(c0, want) <= 0.15);
}
