// Python bindings: the main operations (scenario generation, transport
// assembly, KL noise factors, calibration, mean/covariance flow, path
// ensembles, Galerkin moments, series I/O) on dense NumPy-friendly types.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>
#include <string>

#include "nino/calibration.hpp"
#include "nino/chaos.hpp"
#include "nino/dle.hpp"
#include "nino/errors.hpp"
#include "nino/grid.hpp"
#include "nino/model.hpp"
#include "nino/path_sim.hpp"
#include "nino/sampling.hpp"
#include "nino/scenario.hpp"
#include "nino/transport.hpp"

namespace py = pybind11;
using namespace nino;

namespace {

OperatorSet make_ops(const std::string& kind, const Eigen::MatrixXd& a, const Eigen::MatrixXd& s,
                     const Eigen::MatrixXd& s1, const Eigen::MatrixXd& s2, double tau) {
  OperatorSet ops;
  ops.kind = model_kind_from_string(kind);
  ops.a = a;
  ops.s = s;
  ops.s1 = s1;
  ops.s2 = s2;
  ops.lag_tau_days = tau;
  ops.validate();
  return ops;
}

py::dict ops_to_dict(const OperatorSet& ops) {
  py::dict d;
  d["kind"] = to_string(ops.kind);
  d["a"] = std::visit([](const auto& m) { return Eigen::MatrixXd(m); }, ops.a);
  d["s"] = ops.s;
  d["s1"] = ops.s1;
  d["s2"] = ops.s2;
  d["basis"] = ops.basis;
  d["lag_tau_days"] = ops.lag_tau_days;
  return d;
}

}  // namespace

PYBIND11_MODULE(nino, m) {
  m.doc() =
      "Linear stochastic anomaly models: mean/covariance flow, Monte Carlo path "
      "ensembles, stochastic Galerkin moments, calibration, synthetic scenarios.";

  py::register_exception<DataError>(m, "DataError");
  py::register_exception<NumericalError>(m, "NumericalError");

  py::class_<Grid>(m, "Grid")
      .def(py::init<int, int, double, double, double, double>(), py::arg("nx"), py::arg("ny"),
           py::arg("lon_min"), py::arg("lon_max"), py::arg("lat_min"), py::arg("lat_max"))
      .def_readonly("nx", &Grid::nx)
      .def_readonly("ny", &Grid::ny)
      .def_readonly("lon_min", &Grid::lon_min)
      .def_readonly("lon_max", &Grid::lon_max)
      .def_readonly("lat_min", &Grid::lat_min)
      .def_readonly("lat_max", &Grid::lat_max)
      .def("size", &Grid::size);

  m.def(
      "double_gyre_velocity",
      [](const Grid& g, double u0_ms) {
        const VelocityField v = make_velocity(g, "double-gyre", u0_ms);
        return py::make_tuple(v.u_east, v.v_north);
      },
      py::arg("grid"), py::arg("u0_ms"),
      "Steady double-gyre velocity (u, v) in deg/day on the grid nodes.");

  m.def(
      "transport_operator",
      [](const Grid& g, const Eigen::VectorXd& u, const Eigen::VectorXd& v,
         bool periodic) -> Eigen::MatrixXd {
        const VelocityField vel(g, u, v);
        return Eigen::MatrixXd(assemble_transport_operator(
            vel, periodic ? BoundaryRule::periodic_in_longitude
                          : BoundaryRule::zero_inflow_dirichlet));
      },
      py::arg("grid"), py::arg("u"), py::arg("v"), py::arg("periodic") = false,
      "Dense upwind advection generator for velocities given in deg/day.");

  m.def(
      "kl_noise_factor",
      [](const Grid& g, double q, double length, int modes) {
        return kl_noise_factor(kl_eigenpairs(g, KernelSpec{q, length}, modes), modes);
      },
      py::arg("grid"), py::arg("q"), py::arg("length"), py::arg("modes"),
      "Leading KL modes of the exponential kernel as noise-factor columns.");

  m.def(
      "solve_mean_cov",
      [](const Eigen::MatrixXd& a, const std::string& kind, const Eigen::MatrixXd& s,
         const Eigen::MatrixXd& s1, const Eigen::MatrixXd& s2, const Eigen::VectorXd& x0,
         double h, int steps, double compress_tol, int max_rank) {
        const OperatorSet ops = make_ops(kind, a, s, s1, s2, 0.0);
        DLEProblem prob = DLEProblem::from_operators(
            ops, LowRankFactor{Eigen::MatrixXd::Zero(ops.dim(), 0)});
        DLEOptions opts;
        opts.compress_tol = compress_tol;
        opts.max_rank = max_rank;
        const DLESolution sol = solve_dle(prob, x0, h, steps, opts);
        const int k = static_cast<int>(sol.checkpoints.size());
        Eigen::VectorXd times(k);
        Eigen::MatrixXd mean(ops.dim(), k), std(ops.dim(), k);
        for (int i = 0; i < k; ++i) {
          times[i] = sol.checkpoints[i].t;
          mean.col(i) = sol.checkpoints[i].mean;
          std.col(i) = sol.checkpoints[i].cov.z.rowwise().norm();
        }
        py::dict d;
        d["times"] = times;
        d["mean"] = mean;
        d["std"] = std;
        d["cov_final"] = Eigen::MatrixXd(sol.final().cov.z * sol.final().cov.z.transpose());
        return d;
      },
      py::arg("a"), py::arg("kind"), py::arg("s") = Eigen::MatrixXd(),
      py::arg("s1") = Eigen::MatrixXd(), py::arg("s2") = Eigen::MatrixXd(), py::arg("x0"),
      py::arg("h"), py::arg("steps"), py::arg("compress_tol") = 1e-10, py::arg("max_rank") = 200,
      "Deterministic mean plus low-rank covariance flow; returns per-step stats.");

  m.def(
      "run_ensemble",
      [](const Eigen::MatrixXd& a, const std::string& kind, const Eigen::MatrixXd& s,
         const Eigen::MatrixXd& s1, const Eigen::MatrixXd& s2, const Eigen::VectorXd& x0,
         double h, int steps, int paths, const std::string& method, uint64_t seed, int threads) {
        const OperatorSet ops = make_ops(kind, a, s, s1, s2, 0.0);
        EnsembleOptions eo;
        eo.method = method == "euler" ? PathMethod::euler_maruyama : PathMethod::taylor15;
        eo.seed = seed;
        eo.n_paths = paths;
        eo.h = h;
        eo.n_steps = steps;
        eo.threads = threads;
        const PathEnsemble ens = run_ensemble(ops, x0, eo);
        py::dict d;
        d["mean"] = ens.mean;
        d["variance"] = ens.variance;
        d["cov_final"] = ens.cov_final;
        d["moment2_final"] = ens.moment2_final;
        return d;
      },
      py::arg("a"), py::arg("kind"), py::arg("s") = Eigen::MatrixXd(),
      py::arg("s1") = Eigen::MatrixXd(), py::arg("s2") = Eigen::MatrixXd(), py::arg("x0"),
      py::arg("h"), py::arg("steps"), py::arg("paths"), py::arg("method") = "taylor15",
      py::arg("seed") = 0, py::arg("threads") = 1,
      "Seeded Monte Carlo ensemble (strong Taylor 1.5 or Euler-Maruyama).");

  m.def(
      "galerkin_moments",
      [](const Eigen::MatrixXd& a, const std::string& kind, const Eigen::MatrixXd& noise_cols,
         const Eigen::MatrixXd& s1, const Eigen::VectorXd& x0, double h, int steps, int degree,
         int windows) {
        GalerkinSpec gs;
        gs.kind = model_kind_from_string(kind);
        gs.degree = degree;
        gs.time_windows = windows;
        gs.horizon = h * steps;
        const ChaosSystem sys = assemble_galerkin_system(DriftMatrix(a), noise_cols, s1, gs);
        const ChaosSolution cs = solve_chaos(sys, x0, h, steps, 1);
        const int k = static_cast<int>(cs.coeffs.size());
        Eigen::VectorXd times(k);
        Eigen::MatrixXd mean(a.rows(), k), variance(a.rows(), k);
        for (int i = 0; i < k; ++i) {
          times[i] = cs.times[i];
          const ChaosMoments mo = chaos_statistics(cs.coeffs[i], cs.basis);
          mean.col(i) = mo.mean;
          variance.col(i) = mo.variance;
        }
        py::dict d;
        d["times"] = times;
        d["mean"] = mean;
        d["variance"] = variance;
        d["blocks"] = cs.basis.size();
        return d;
      },
      py::arg("a"), py::arg("kind"), py::arg("noise_cols") = Eigen::MatrixXd(),
      py::arg("s1") = Eigen::MatrixXd(), py::arg("x0"), py::arg("h"), py::arg("steps"),
      py::arg("degree") = 1, py::arg("windows") = 8,
      "Stochastic Galerkin moments of the chaos-projected system.");

  m.def(
      "calibrate",
      [](const Eigen::MatrixXd& snapshots, double dt_days, const std::string& kind,
         const Grid& grid, int tau_steps, int eof_modes, double ridge, double theta) {
        const AnomalySeries series(grid, 0.0, dt_days, snapshots);
        CalibrationOptions co;
        co.tau_steps = tau_steps;
        co.eof_modes = eof_modes;
        co.ridge = ridge;
        co.theta_mixed = theta;
        return ops_to_dict(calibrate(series, model_kind_from_string(kind), co));
      },
      py::arg("snapshots"), py::arg("dt_days"), py::arg("kind"), py::arg("grid"),
      py::arg("tau_steps") = 1, py::arg("eof_modes") = -1, py::arg("ridge") = -1.0,
      py::arg("theta") = 0.5,
      "Drift + noise calibration from a gridded series (n x nt snapshot matrix).");

  m.def(
      "generate_scenario",
      [](const std::string& config_path) {
        const Scenario sc = generate_synthetic_scenario(parse_scenario_config(config_path));
        py::dict d;
        d["snapshots"] = sc.series.snapshots;
        d["t0_days"] = sc.series.t0_days;
        d["dt_days"] = sc.series.dt_days;
        d["grid"] = sc.series.grid;
        d["truth"] = ops_to_dict(sc.truth);
        return d;
      },
      py::arg("config_path"), "Synthetic twin scenario from a key=value config file.");

  m.def(
      "read_grid_series",
      [](const std::string& path) {
        const AnomalySeries s = read_grid_series(path);
        py::dict d;
        d["snapshots"] = s.snapshots;
        d["t0_days"] = s.t0_days;
        d["dt_days"] = s.dt_days;
        d["grid"] = s.grid;
        return d;
      },
      py::arg("path"), "Read an ssta-grid series file.");

  m.def(
      "write_grid_series",
      [](const std::string& path, const Grid& grid, const Eigen::MatrixXd& snapshots,
         double t0_days, double dt_days) {
        write_grid_series(AnomalySeries(grid, t0_days, dt_days, snapshots), path);
      },
      py::arg("path"), py::arg("grid"), py::arg("snapshots"), py::arg("t0_days") = 0.0,
      py::arg("dt_days") = 1.0, "Write an ssta-grid series file.");
}
