#include "nino/dle.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "nino/transport.hpp"

namespace nino {

void QuadratureRule::validate() const {
  if (nodes.size() == 0 || nodes.size() != weights.size())
    throw DataError("QuadratureRule: nodes and weights must be nonempty and equally long");
  double wsum = 0.0;
  for (int i = 0; i < nodes.size(); ++i) {
    if (nodes[i] < 0.0 || nodes[i] > 1.0)
      throw DataError("QuadratureRule: nodes must lie in [0,1]");
    if (i > 0 && nodes[i] <= nodes[i - 1])
      throw DataError("QuadratureRule: nodes must be strictly ascending");
    if (weights[i] <= 0.0) throw DataError("QuadratureRule: weights must be positive");
    wsum += weights[i];
  }
  if (std::abs(wsum - 1.0) > 1e-12)
    throw DataError("QuadratureRule: weights must sum to 1");
}

QuadratureRule gauss_legendre(int points) {
  if (points < 1 || points > 64)
    throw DataError("gauss_legendre: point count must be in [1, 64]");
  const int s = points;
  Eigen::VectorXd x(s), w(s);
  for (int i = 0; i < s; ++i) {
    // Newton from the Chebyshev-angle guess; converges in a handful of steps
    double t = std::cos(std::numbers::pi * (i + 0.75) / (s + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= s; ++k) {
        const double pk = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      const double ps = (s == 1) ? t : p1;
      dp = s * (t * p1 - p0) / (t * t - 1.0);
      const double dt = ps / dp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    x[i] = t;
    w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
  }

  QuadratureRule rule;
  rule.nodes.resize(s);
  rule.weights.resize(s);
  // roots come out descending in t; store ascending on [0,1]
  for (int i = 0; i < s; ++i) {
    rule.nodes[i] = 0.5 * (1.0 + x[s - 1 - i]);
    rule.weights[i] = 0.5 * w[s - 1 - i];
  }
  rule.order = 2 * s;
  rule.validate();
  return rule;
}

DLEProblem DLEProblem::from_operators(const OperatorSet& ops, LowRankFactor p0) {
  DLEProblem p;
  p.a = ops.a;
  p.kind = ops.kind;
  p.s = ops.s;
  p.s1 = ops.s1;
  p.s2 = ops.s2;
  p.p0 = std::move(p0);
  p.validate();
  return p;
}

void DLEProblem::validate() const {
  const int n = std::visit([](const auto& m) { return static_cast<int>(m.rows()); }, a);
  const int nc = std::visit([](const auto& m) { return static_cast<int>(m.cols()); }, a);
  if (n != nc) throw DataError("DLEProblem: drift must be square");
  if (p0.z.size() > 0 && p0.dim() != n)
    throw DataError("DLEProblem: initial factor dimension mismatch");
  if (kind == ModelKind::additive && (s.size() == 0 || s.rows() != n))
    throw DataError("DLEProblem: additive kind needs S with matching rows");
  if ((kind == ModelKind::multiplicative || kind == ModelKind::mixed) &&
      (s1.rows() != n || s1.cols() != n))
    throw DataError("DLEProblem: multiplicative kind needs square S1");
  if (kind == ModelKind::mixed && (s2.size() == 0 || s2.rows() != n))
    throw DataError("DLEProblem: mixed kind needs S2 with matching rows");
}

namespace {

int drift_dim(const DriftMatrix& a) {
  return std::visit([](const auto& m) { return static_cast<int>(m.rows()); }, a);
}

/// Quadrature columns for int_0^h e^{sA} S S^T e^{sA^T} ds:
/// node k contributes sqrt(h w_k) e^{tau_k h A} S, nodes in ascending order.
Eigen::MatrixXd additive_quad_columns(const DriftMatrix& a, const Eigen::MatrixXd& s,
                                      double h, const QuadratureRule& quad, double exp_tol) {
  const int n = static_cast<int>(s.rows());
  const int r = static_cast<int>(s.cols());
  const int q = static_cast<int>(quad.nodes.size());
  Eigen::MatrixXd cols(n, q * r);
  for (int k = 0; k < q; ++k) {
    const double scale = std::sqrt(h * quad.weights[k]);
    cols.middleCols(k * r, r) = scale * exp_action(a, s, quad.nodes[k] * h, exp_tol);
  }
  return cols;
}

LowRankFactor additive_substep(const DriftMatrix& a, const Eigen::MatrixXd& s,
                               const LowRankFactor& z, double h, const DLEOptions& opts) {
  const int n = drift_dim(a);
  Eigen::MatrixXd zh = exp_action(a, z.z, h, opts.exp_tol);
  Eigen::MatrixXd cols = additive_quad_columns(a, s, h, opts.quad, opts.exp_tol);
  Eigen::MatrixXd joined(n, zh.cols() + cols.cols());
  joined << zh, cols;
  return compress_columns(LowRankFactor(std::move(joined)), opts.compress_tol, opts.max_rank);
}

}  // namespace

LowRankFactor dle_additive_step(const DriftMatrix& a, const Eigen::MatrixXd& s,
                                const LowRankFactor& z, double h, const DLEOptions& opts) {
  if (!(h > 0.0)) throw DataError("dle_additive_step: step size must be positive");
  opts.quad.validate();
  const int n = drift_dim(a);
  if (s.rows() != n) throw DataError("dle_additive_step: S row count must match A");
  if (z.z.size() > 0 && z.dim() != n)
    throw DataError("dle_additive_step: factor dimension mismatch");
  return additive_substep(a, s, z, h, opts);
}

LowRankFactor dle_strang_step(const DriftMatrix& a, const Eigen::MatrixXd& s1,
                              const std::optional<Eigen::MatrixXd>& s2,
                              const LowRankFactor& z, double h, const DLEOptions& opts) {
  if (!(h > 0.0)) throw DataError("dle_strang_step: step size must be positive");
  opts.quad.validate();
  const int n = drift_dim(a);
  if (s1.rows() != n || s1.cols() != n)
    throw DataError("dle_strang_step: S1 must be square and match A");
  if (s2 && s2->rows() != n) throw DataError("dle_strang_step: S2 row count must match A");
  if (z.z.size() > 0 && z.dim() != n)
    throw DataError("dle_strang_step: factor dimension mismatch");

  auto half_flow = [&](const LowRankFactor& f) {
    if (s2) return additive_substep(a, *s2, f, h / 2.0, opts);
    Eigen::MatrixXd zh = exp_action(a, f.z, h / 2.0, opts.exp_tol);
    return compress_columns(LowRankFactor(std::move(zh)), opts.compress_tol, opts.max_rank);
  };

  LowRankFactor cur = half_flow(z);

  // T2(h): second-order expansion of dP/dt = S1 P S1^T in factored form
  Eigen::MatrixXd s1z = s1 * cur.z;
  Eigen::MatrixXd s1s1z = s1 * s1z;
  Eigen::MatrixXd joined(n, 3 * cur.rank());
  joined << cur.z, std::sqrt(h) * s1z, (h / std::numbers::sqrt2) * s1s1z;
  cur = compress_columns(LowRankFactor(std::move(joined)), opts.compress_tol, opts.max_rank);

  return half_flow(cur);
}

Eigen::MatrixXd propagate_mean(const DriftMatrix& a, const Eigen::VectorXd& x0, double h,
                               int n_steps) {
  if (n_steps < 0) throw DataError("propagate_mean: negative step count");
  if (x0.size() != drift_dim(a)) throw DataError("propagate_mean: state size mismatch");
  CrankNicolsonStepper cn = std::visit(
      [&](const auto& m) { return CrankNicolsonStepper(m, h); }, a);
  Eigen::MatrixXd traj(x0.size(), n_steps + 1);
  traj.col(0) = x0;
  for (int i = 0; i < n_steps; ++i) traj.col(i + 1) = cn.step(Eigen::VectorXd(traj.col(i)));
  return traj;
}

DLESolution solve_dle(const DLEProblem& problem, const Eigen::VectorXd& x0, double h,
                      int n_steps, const DLEOptions& opts) {
  problem.validate();
  opts.quad.validate();
  if (!(h > 0.0)) throw DataError("solve_dle: step size must be positive");
  if (n_steps < 1) throw DataError("solve_dle: need at least one step");
  const int n = drift_dim(problem.a);
  if (x0.size() != n) throw DataError("solve_dle: initial mean size mismatch");
  const int stride = std::max(1, opts.checkpoint_stride);

  CrankNicolsonStepper cn = std::visit(
      [&](const auto& m) { return CrankNicolsonStepper(m, h); }, problem.a);

  // the additive quadrature columns are step-invariant; build them once
  Eigen::MatrixXd cached_cols;
  if (problem.kind == ModelKind::additive)
    cached_cols = additive_quad_columns(problem.a, problem.s, h, opts.quad, opts.exp_tol);
  else if (problem.kind == ModelKind::mixed)
    cached_cols = additive_quad_columns(problem.a, problem.s2, h / 2.0, opts.quad, opts.exp_tol);

  auto half_flow_cached = [&](const LowRankFactor& f) {
    Eigen::MatrixXd zh = exp_action(problem.a, f.z, h / 2.0, opts.exp_tol);
    Eigen::MatrixXd joined(n, zh.cols() + cached_cols.cols());
    joined << zh, cached_cols;
    return compress_columns(LowRankFactor(std::move(joined)), opts.compress_tol, opts.max_rank);
  };

  DLESolution sol;
  Eigen::VectorXd mean = x0;
  LowRankFactor cov = problem.p0;
  sol.checkpoints.push_back({0.0, mean, cov});

  for (int i = 1; i <= n_steps; ++i) {
    mean = cn.step(mean);
    switch (problem.kind) {
      case ModelKind::additive: {
        Eigen::MatrixXd zh = exp_action(problem.a, cov.z, h, opts.exp_tol);
        Eigen::MatrixXd joined(n, zh.cols() + cached_cols.cols());
        joined << zh, cached_cols;
        cov = compress_columns(LowRankFactor(std::move(joined)), opts.compress_tol,
                               opts.max_rank);
        break;
      }
      case ModelKind::multiplicative:
        cov = dle_strang_step(problem.a, problem.s1, std::nullopt, cov, h, opts);
        break;
      case ModelKind::mixed: {
        LowRankFactor cur = half_flow_cached(cov);
        Eigen::MatrixXd s1z = problem.s1 * cur.z;
        Eigen::MatrixXd s1s1z = problem.s1 * s1z;
        Eigen::MatrixXd joined(n, 3 * cur.rank());
        joined << cur.z, std::sqrt(h) * s1z, (h / std::numbers::sqrt2) * s1s1z;
        cur = compress_columns(LowRankFactor(std::move(joined)), opts.compress_tol,
                               opts.max_rank);
        cov = half_flow_cached(cur);
        break;
      }
    }
    if (i % stride == 0 || i == n_steps) sol.checkpoints.push_back({i * h, mean, cov});
  }
  return sol;
}

}  // namespace nino
