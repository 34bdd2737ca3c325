#include "nino/chaos.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "nino/transport.hpp"

namespace nino {

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

Eigen::VectorXd trapezoid_weights(const Grid& g) {
  // per-direction trapezoid factors; degenerate directions weigh 1
  Eigen::VectorXd wx = Eigen::VectorXd::Ones(g.nx);
  Eigen::VectorXd wy = Eigen::VectorXd::Ones(g.ny);
  if (g.nx > 1) {
    wx *= g.dx();
    wx[0] *= 0.5;
    wx[g.nx - 1] *= 0.5;
  }
  if (g.ny > 1) {
    wy *= g.dy();
    wy[0] *= 0.5;
    wy[g.ny - 1] *= 0.5;
  }
  Eigen::VectorXd w(g.size());
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) w[g.index(i, j)] = wx[i] * wy[j];
  return w;
}

}  // namespace

KLBasis kl_eigenpairs(const Grid& g, const KernelSpec& kernel, int count) {
  const int n = g.size();
  if (count < 1 || count > n) throw DataError("kl_eigenpairs: count must be in [1, n]");
  if (!(kernel.q >= 0.0) || !(kernel.length > 0.0))
    throw DataError("kl_eigenpairs: kernel amplitude must be >= 0 and length > 0");

  Eigen::VectorXd w = trapezoid_weights(g);
  Eigen::VectorXd sqw = w.cwiseSqrt();

  Eigen::MatrixXd b(n, n);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const int row = g.index(i, j);
      for (int jj = 0; jj < g.ny; ++jj)
        for (int ii = 0; ii < g.nx; ++ii) {
          const int col = g.index(ii, jj);
          if (col > row) continue;
          const double dlon = g.lon(i) - g.lon(ii);
          const double dlat = g.lat(j) - g.lat(jj);
          const double dist = std::sqrt(dlon * dlon + dlat * dlat);
          const double v = kernel.q * std::exp(-dist / kernel.length) * sqw[row] * sqw[col];
          b(row, col) = v;
          b(col, row) = v;
        }
    }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b);
  if (es.info() != Eigen::Success)
    throw NumericalError("kl_eigenpairs: eigendecomposition failed");
  const Eigen::VectorXd& ev = es.eigenvalues();  // ascending
  const double top = ev[n - 1];
  if (ev[0] < -1e-8 * top) {
    std::ostringstream msg;
    msg << "kl_eigenpairs: kernel discretization produced eigenvalue " << ev[0]
        << " below -1e-8 * lambda_1 = " << -1e-8 * top;
    throw NumericalError(msg.str());
  }

  KLBasis kl;
  kl.weights = w;
  kl.lambda.resize(count);
  kl.phi.resize(n, count);
  for (int k = 0; k < count; ++k) {
    const int src = n - 1 - k;  // descending
    kl.lambda[k] = std::max(ev[src], 0.0);
    Eigen::VectorXd phi = es.eigenvectors().col(src).cwiseQuotient(sqw);
    // deterministic sign: largest-magnitude entry positive
    int arg = 0;
    phi.cwiseAbs().maxCoeff(&arg);
    if (phi[arg] < 0.0) phi = -phi;
    kl.phi.col(k) = phi;
  }
  return kl;
}

Eigen::MatrixXd kl_noise_factor(const KLBasis& kl, int modes) {
  if (modes < 1 || modes > kl.lambda.size())
    throw DataError("kl_noise_factor: mode count out of range");
  Eigen::MatrixXd s(kl.phi.rows(), modes);
  for (int k = 0; k < modes; ++k) s.col(k) = std::sqrt(kl.lambda[k]) * kl.phi.col(k);
  return s;
}

int ChaosBasis::find(const std::vector<int>& alpha) const {
  for (int i = 0; i < size(); ++i)
    if (indices[i] == alpha) return i;
  return -1;
}

ChaosBasis build_chaos_basis(int n_vars, int max_degree) {
  if (n_vars < 1) throw DataError("build_chaos_basis: need at least one variable");
  if (max_degree < 0) throw DataError("build_chaos_basis: negative degree");

  // M+1 = C(n_vars + K, K), guarded against combinatorial blowup
  double m = 1.0;
  for (int i = 1; i <= max_degree; ++i) m = m * (n_vars + i) / i;
  if (m > 1e6) {
    std::ostringstream msg;
    msg << "build_chaos_basis: basis size " << m << " exceeds the 1e6 guard";
    throw DataError(msg.str());
  }

  ChaosBasis basis;
  basis.n_vars = n_vars;
  basis.max_degree = max_degree;

  std::vector<int> cur(n_vars, 0);
  auto emit_degree = [&](auto&& self, int remaining, int pos) -> void {
    if (pos == n_vars - 1) {
      cur[pos] = remaining;
      basis.indices.push_back(cur);
      return;
    }
    for (int v = remaining; v >= 0; --v) {
      cur[pos] = v;
      self(self, remaining - v, pos + 1);
    }
  };
  for (int d = 0; d <= max_degree; ++d) emit_degree(emit_degree, d, 0);

  basis.norms.resize(basis.size());
  for (int i = 0; i < basis.size(); ++i) {
    double norm = 1.0;
    for (int a : basis.indices[i]) norm *= factorial(a);
    basis.norms[i] = norm;
  }
  return basis;
}

double hermite_triple(int i, int j, int k) {
  if (i < 0 || j < 0 || k < 0) throw DataError("hermite_triple: negative degree");
  const int total = i + j + k;
  if (total % 2 != 0) return 0.0;
  const int s = total / 2;
  if (s < i || s < j || s < k) return 0.0;  // triangle condition
  return factorial(i) * factorial(j) * factorial(k) /
         (factorial(s - i) * factorial(s - j) * factorial(s - k));
}

double chaos_triple(const ChaosBasis& basis, int a, int b, int c) {
  if (a < 0 || b < 0 || c < 0 || a >= basis.size() || b >= basis.size() || c >= basis.size())
    throw DataError("chaos_triple: basis position out of range");
  double prod = 1.0;
  for (int d = 0; d < basis.n_vars; ++d) {
    prod *= hermite_triple(basis.indices[a][d], basis.indices[b][d], basis.indices[c][d]);
    if (prod == 0.0) return 0.0;
  }
  return prod;
}

double hermite_eval(int n, double x) {
  if (n == 0) return 1.0;
  if (n == 1) return x;
  double hm = 1.0, h = x;
  for (int k = 2; k <= n; ++k) {
    const double next = x * h - (k - 1) * hm;
    hm = h;
    h = next;
  }
  return h;
}

double ChaosVariableSpec::profile(double t) const {
  if (t < t0 || t >= t1) return 0.0;
  return 1.0 / std::sqrt(t1 - t0);
}

ChaosSystem assemble_galerkin_system(const DriftMatrix& a, const Eigen::MatrixXd& noise_columns,
                                     const Eigen::MatrixXd& s1, const GalerkinSpec& spec) {
  const int n = std::visit([](const auto& m) { return static_cast<int>(m.rows()); }, a);
  if (spec.kind == ModelKind::mixed)
    throw DataError("assemble_galerkin_system: mixed models are not supported");
  if (spec.degree < 0) throw DataError("assemble_galerkin_system: negative degree");
  if (spec.time_windows < 1) throw DataError("assemble_galerkin_system: need >= 1 time window");
  if (!(spec.horizon > 0.0)) throw DataError("assemble_galerkin_system: horizon must be positive");

  ChaosSystem sys;
  sys.kind = spec.kind;
  sys.n = n;
  sys.horizon = spec.horizon;

  int channels = 0;
  if (spec.kind == ModelKind::additive) {
    if (noise_columns.rows() != n || noise_columns.cols() < 1)
      throw DataError("assemble_galerkin_system: additive kind needs noise columns matching A");
    channels = static_cast<int>(noise_columns.cols());
    sys.a_eff = a;
  } else {
    if (s1.rows() != n || s1.cols() != n)
      throw DataError("assemble_galerkin_system: multiplicative kind needs square S1");
    channels = 1;
    sys.s1 = s1;
    // Wong-Zakai: the smooth-noise Galerkin limit is Stratonovich, so shift
    // the drift to keep the Ito model
    Eigen::MatrixXd ad = std::visit(
        [](const auto& m) { return Eigen::MatrixXd(m); }, a);
    sys.a_eff = Eigen::MatrixXd(ad - 0.5 * s1 * s1);
  }

  const int w = spec.time_windows;
  const double dt = spec.horizon / w;
  for (int c = 0; c < channels; ++c)
    for (int m = 0; m < w; ++m)
      sys.variables.push_back({c, m * dt, (m + 1) * dt});

  const int n_vars = channels * w;
  sys.basis = build_chaos_basis(n_vars, spec.degree);

  if (spec.kind == ModelKind::additive) {
    for (int v = 0; v < n_vars; ++v) {
      std::vector<int> e(n_vars, 0);
      e[v] = 1;
      const int block = sys.basis.find(e);
      if (block >= 0)
        sys.forcings.push_back({block, v, noise_columns.col(sys.variables[v].channel)});
    }
  } else {
    // couplings <xi_v H_j H_i>/<H_i H_i>: alpha_i and alpha_j equal except
    // for a +-1 difference at coordinate v
    for (int i = 0; i < sys.basis.size(); ++i) {
      for (int v = 0; v < n_vars; ++v) {
        for (int delta : {-1, +1}) {
          std::vector<int> aj = sys.basis.indices[i];
          aj[v] += delta;
          if (aj[v] < 0) continue;
          const int j = sys.basis.find(aj);
          if (j < 0) continue;
          const int hi = sys.basis.indices[i][v];
          const int hj = aj[v];
          double triple = hermite_triple(1, hj, hi);
          for (int d = 0; d < n_vars; ++d)
            if (d != v) triple *= factorial(sys.basis.indices[i][d]);
          sys.couplings.push_back({i, j, v, triple / sys.basis.norms[i]});
        }
      }
    }
  }
  return sys;
}

namespace {

ChaosSolution solve_chaos_additive(const ChaosSystem& sys, const Eigen::VectorXd& x0, double h,
                                   int n_steps, int stride) {
  const int m1 = sys.basis.size();
  CrankNicolsonStepper cn = std::visit(
      [&](const auto& m) { return CrankNicolsonStepper(m, h); }, sys.a_eff);

  std::vector<std::vector<const ChaosSystem::Forcing*>> by_block(m1);
  for (const auto& f : sys.forcings) by_block[f.block].push_back(&f);

  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(sys.n, m1);
  x.col(0) = x0;
  std::vector<bool> active(m1, false);
  active[0] = x0.norm() > 0.0;

  ChaosSolution sol;
  sol.basis = sys.basis;
  sol.variables = sys.variables;
  sol.times.push_back(0.0);
  sol.coeffs.push_back(x);

  for (int step = 1; step <= n_steps; ++step) {
    const double tmid = (step - 0.5) * h;
    for (int b = 0; b < m1; ++b) {
      Eigen::VectorXd force = Eigen::VectorXd::Zero(sys.n);
      bool forced = false;
      for (const auto* f : by_block[b]) {
        const double p = sys.variables[f->variable].profile(tmid);
        if (p != 0.0) {
          force += p * f->field;
          forced = true;
        }
      }
      if (!active[b] && !forced) continue;  // identically zero block
      Eigen::MatrixXd rhs = cn.apply_explicit(x.col(b));
      if (forced) rhs += h * force;
      x.col(b) = cn.solve_implicit(rhs);
      active[b] = true;
    }
    if (step % stride == 0 || step == n_steps) {
      sol.times.push_back(step * h);
      sol.coeffs.push_back(x);
    }
  }
  return sol;
}

ChaosSolution solve_chaos_multiplicative(const ChaosSystem& sys, const Eigen::VectorXd& x0,
                                         double h, int n_steps, int stride) {
  const int m1 = sys.basis.size();
  const int big = m1 * sys.n;
  if (big > 4000)
    throw DataError("solve_chaos: coupled multiplicative system too large (> 4000 unknowns)");

  const Eigen::MatrixXd a_eff = std::visit(
      [](const auto& m) { return Eigen::MatrixXd(m); }, sys.a_eff);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(big);
  x.head(sys.n) = x0;

  ChaosSolution sol;
  sol.basis = sys.basis;
  sol.variables = sys.variables;
  auto record = [&](double t) {
    Eigen::MatrixXd c(sys.n, m1);
    for (int b = 0; b < m1; ++b) c.col(b) = x.segment(b * sys.n, sys.n);
    sol.times.push_back(t);
    sol.coeffs.push_back(std::move(c));
  };
  record(0.0);

  Eigen::VectorXd cached_profiles;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
  Eigen::MatrixXd rhs_mat;

  for (int step = 1; step <= n_steps; ++step) {
    const double tmid = (step - 0.5) * h;
    Eigen::VectorXd profiles(sys.variables.size());
    for (size_t v = 0; v < sys.variables.size(); ++v)
      profiles[static_cast<int>(v)] = sys.variables[v].profile(tmid);

    if (cached_profiles.size() == 0 || profiles != cached_profiles) {
      Eigen::MatrixXd l = Eigen::MatrixXd::Zero(big, big);
      for (int b = 0; b < m1; ++b) l.block(b * sys.n, b * sys.n, sys.n, sys.n) = a_eff;
      for (const auto& cpl : sys.couplings) {
        const double p = profiles[cpl.variable];
        if (p == 0.0) continue;
        l.block(cpl.i * sys.n, cpl.j * sys.n, sys.n, sys.n) += (cpl.coeff * p) * sys.s1;
      }
      Eigen::MatrixXd id = Eigen::MatrixXd::Identity(big, big);
      lu.compute(id - (h / 2.0) * l);
      rhs_mat = id + (h / 2.0) * l;
      cached_profiles = profiles;
    }
    x = lu.solve(rhs_mat * x);
    if (step % stride == 0 || step == n_steps) record(step * h);
  }
  return sol;
}

}  // namespace

ChaosSolution solve_chaos(const ChaosSystem& sys, const Eigen::VectorXd& x0, double h,
                          int n_steps, int checkpoint_stride) {
  if (!(h > 0.0)) throw DataError("solve_chaos: step size must be positive");
  if (n_steps < 1) throw DataError("solve_chaos: need at least one step");
  if (x0.size() != sys.n) throw DataError("solve_chaos: initial state size mismatch");
  const int stride = std::max(1, checkpoint_stride);
  return sys.kind == ModelKind::additive
             ? solve_chaos_additive(sys, x0, h, n_steps, stride)
             : solve_chaos_multiplicative(sys, x0, h, n_steps, stride);
}

ChaosMoments chaos_statistics(const Eigen::MatrixXd& coeffs, const ChaosBasis& basis) {
  if (coeffs.cols() != basis.size())
    throw DataError("chaos_statistics: coefficient block count does not match basis");
  ChaosMoments m;
  m.mean = coeffs.col(0);
  m.variance = Eigen::VectorXd::Zero(coeffs.rows());
  for (int k = 1; k < basis.size(); ++k)
    m.variance += basis.norms[k] * coeffs.col(k).cwiseAbs2();
  return m;
}

Eigen::VectorXd chaos_realization(const Eigen::MatrixXd& coeffs, const ChaosBasis& basis,
                                  const Eigen::VectorXd& eta) {
  if (eta.size() != basis.n_vars) throw DataError("chaos_realization: eta size mismatch");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(coeffs.rows());
  for (int k = 0; k < basis.size(); ++k) {
    double hk = 1.0;
    for (int d = 0; d < basis.n_vars; ++d) {
      const int deg = basis.indices[k][d];
      if (deg > 0) hk *= hermite_eval(deg, eta[d]);
    }
    out += hk * coeffs.col(k);
  }
  return out;
}

double chaos_l2_norm(const Eigen::MatrixXd& coeffs, const ChaosBasis& basis) {
  double sq = 0.0;
  for (int k = 0; k < basis.size(); ++k)
    sq += basis.norms[k] * coeffs.col(k).squaredNorm();
  return std::sqrt(sq);
}

double chaos_l2_distance_degree1(const ChaosSolution& a, const ChaosSolution& b) {
  if (a.basis.max_degree > 1 || b.basis.max_degree > 1)
    throw DataError("chaos_l2_distance_degree1: only degree <= 1 solutions supported");
  const Eigen::MatrixXd& ca = a.final_coeffs();
  const Eigen::MatrixXd& cb = b.final_coeffs();

  double sq = (ca.col(0) - cb.col(0)).squaredNorm();
  std::vector<bool> used_b(b.variables.size(), false);
  for (size_t va = 0; va < a.variables.size(); ++va) {
    const int blk_a = 1 + static_cast<int>(va);  // degree-1 blocks follow the mean block
    Eigen::VectorXd col = ca.col(blk_a);
    bool matched = false;
    for (size_t vb = 0; vb < b.variables.size(); ++vb) {
      if (!used_b[vb] && a.variables[va] == b.variables[vb]) {
        col -= cb.col(1 + static_cast<int>(vb));
        used_b[vb] = true;
        matched = true;
        break;
      }
    }
    (void)matched;
    sq += col.squaredNorm();
  }
  for (size_t vb = 0; vb < b.variables.size(); ++vb)
    if (!used_b[vb]) sq += cb.col(1 + static_cast<int>(vb)).squaredNorm();
  return std::sqrt(sq);
}

}  // namespace nino
