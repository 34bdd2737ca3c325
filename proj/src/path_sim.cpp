#include "nino/path_sim.hpp"

#include <atomic>
#include <cmath>
#include <thread>

namespace nino {

int noise_channels(const OperatorSet& ops) {
  switch (ops.kind) {
    case ModelKind::additive: return static_cast<int>(ops.s.cols());
    case ModelKind::multiplicative: return 1;
    case ModelKind::mixed: return 1 + static_cast<int>(ops.s2.cols());
  }
  return 0;
}

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

PathNoise::PathNoise(uint64_t seed, uint64_t path_index, int channels, double h)
    : rng_(splitmix64(splitmix64(seed) ^ splitmix64(path_index + 0x1234567897531ULL))),
      channels_(channels),
      h_(h) {
  if (channels < 0) throw DataError("PathNoise: negative channel count");
  if (!(h > 0.0)) throw DataError("PathNoise: step size must be positive");
}

NoiseIncrements PathNoise::next() {
  NoiseIncrements inc;
  inc.dw.resize(channels_);
  inc.dz.resize(channels_);
  const double sh = std::sqrt(h_);
  const double sh3 = h_ * sh;
  for (int c = 0; c < channels_; ++c) {
    const double g1 = normal_(rng_);
    const double g2 = normal_(rng_);
    // exact joint law: Var(dw)=h, Var(dz)=h^3/3, Cov=h^2/2
    inc.dw[c] = sh * g1;
    inc.dz[c] = 0.5 * sh3 * (g1 + g2 / std::sqrt(3.0));
  }
  return inc;
}

namespace {

Eigen::VectorXd apply_drift(const DriftMatrix& a, const Eigen::VectorXd& x) {
  return std::visit([&](const auto& m) { return Eigen::VectorXd(m * x); }, a);
}

void check_step_inputs(const OperatorSet& ops, const Eigen::VectorXd& x, double h,
                       const NoiseIncrements& noise, const char* who) {
  if (!(h > 0.0)) throw DataError(std::string(who) + ": step size must be positive");
  if (x.size() != ops.dim()) throw DataError(std::string(who) + ": state size mismatch");
  const int ch = noise_channels(ops);
  if (noise.dw.size() != ch || noise.dz.size() != ch)
    throw DataError(std::string(who) + ": increment channel count mismatch");
}

}  // namespace

Eigen::VectorXd euler_maruyama_step(const OperatorSet& ops, const Eigen::VectorXd& x, double h,
                                    const NoiseIncrements& noise) {
  check_step_inputs(ops, x, h, noise, "euler_maruyama_step");
  Eigen::VectorXd out = x + h * apply_drift(ops.a, x);
  switch (ops.kind) {
    case ModelKind::additive:
      out += ops.s * noise.dw;
      break;
    case ModelKind::multiplicative:
      out += (ops.s1 * x) * noise.dw[0];
      break;
    case ModelKind::mixed:
      out += (ops.s1 * x) * noise.dw[0] + ops.s2 * noise.dw.tail(noise.dw.size() - 1);
      break;
  }
  return out;
}

Eigen::VectorXd taylor15_step(const OperatorSet& ops, const Eigen::VectorXd& x, double h,
                              const NoiseIncrements& noise) {
  check_step_inputs(ops, x, h, noise, "taylor15_step");
  const Eigen::VectorXd ax = apply_drift(ops.a, x);
  Eigen::VectorXd out = x + h * ax + (h * h / 2.0) * apply_drift(ops.a, ax);

  auto add_additive = [&](const Eigen::MatrixXd& s, int first_channel) {
    const auto dw = noise.dw.segment(first_channel, s.cols());
    const auto dz = noise.dz.segment(first_channel, s.cols());
    const Eigen::VectorXd sdz = s * dz;
    out += s * dw + apply_drift(ops.a, sdz);
  };
  auto add_multiplicative = [&]() {
    const double dw = noise.dw[0];
    const double dz = noise.dz[0];
    const Eigen::VectorXd s1x = ops.s1 * x;
    const Eigen::VectorXd s1ax = ops.s1 * ax;
    const Eigen::VectorXd s1s1x = ops.s1 * s1x;
    const Eigen::VectorXd s1s1s1x = ops.s1 * s1s1x;
    out += s1x * dw + apply_drift(ops.a, s1x) * dz + s1ax * (h * dw - dz) +
           s1s1x * ((dw * dw - h) / 2.0) +
           s1s1s1x * (((dw * dw) / 3.0 - h) * dw / 2.0);
  };

  switch (ops.kind) {
    case ModelKind::additive:
      add_additive(ops.s, 0);
      break;
    case ModelKind::multiplicative:
      add_multiplicative();
      break;
    case ModelKind::mixed:
      add_multiplicative();
      add_additive(ops.s2, 1);
      break;
  }
  return out;
}

namespace {

struct BlockStats {
  Eigen::MatrixXd sum;       // n x (steps+1)
  Eigen::MatrixXd sum_sq;    // n x (steps+1)
  Eigen::MatrixXd sum_outer; // n x n at final step
  std::vector<Eigen::MatrixXd> trajectories;
};

constexpr int kPathBlock = 64;

}  // namespace

PathEnsemble run_ensemble(const OperatorSet& ops, const Eigen::VectorXd& x0,
                          const EnsembleOptions& opts) {
  ops.validate();
  if (opts.n_paths < 1) throw DataError("run_ensemble: need at least one path");
  if (opts.n_steps < 1) throw DataError("run_ensemble: need at least one step");
  if (!(opts.h > 0.0)) throw DataError("run_ensemble: step size must be positive");
  if (x0.size() != ops.dim()) throw DataError("run_ensemble: initial state size mismatch");

  const int n = ops.dim();
  const int cols = opts.n_steps + 1;
  const int channels = noise_channels(ops);
  const int n_blocks = (opts.n_paths + kPathBlock - 1) / kPathBlock;

  std::vector<BlockStats> blocks(n_blocks);
  std::atomic<int> next_block{0};

  auto worker = [&]() {
    for (;;) {
      const int b = next_block.fetch_add(1);
      if (b >= n_blocks) return;
      const int first = b * kPathBlock;
      const int last = std::min(opts.n_paths, first + kPathBlock);

      BlockStats st;
      st.sum = Eigen::MatrixXd::Zero(n, cols);
      st.sum_sq = Eigen::MatrixXd::Zero(n, cols);
      st.sum_outer = Eigen::MatrixXd::Zero(n, n);
      if (opts.store_trajectories) st.trajectories.reserve(last - first);

      for (int p = first; p < last; ++p) {
        PathNoise noise(opts.seed, static_cast<uint64_t>(p), channels, opts.h);
        Eigen::MatrixXd traj;
        if (opts.store_trajectories) traj.resize(n, cols);
        Eigen::VectorXd x = x0;
        if (opts.store_trajectories) traj.col(0) = x;
        st.sum.col(0) += x;
        st.sum_sq.col(0) += x.cwiseAbs2();
        for (int sstep = 1; sstep <= opts.n_steps; ++sstep) {
          const NoiseIncrements inc = noise.next();
          x = (opts.method == PathMethod::taylor15) ? taylor15_step(ops, x, opts.h, inc)
                                                    : euler_maruyama_step(ops, x, opts.h, inc);
          st.sum.col(sstep) += x;
          st.sum_sq.col(sstep) += x.cwiseAbs2();
          if (opts.store_trajectories) traj.col(sstep) = x;
        }
        st.sum_outer.selfadjointView<Eigen::Lower>().rankUpdate(x, 1.0);
        if (opts.store_trajectories) st.trajectories.push_back(std::move(traj));
      }
      blocks[b] = std::move(st);
    }
  };

  const int n_threads = std::max(1, std::min(opts.threads, n_blocks));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // fixed merge order: ascending block index
  PathEnsemble out;
  out.n_paths = opts.n_paths;
  out.h = opts.h;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, cols);
  Eigen::MatrixXd sum_sq = Eigen::MatrixXd::Zero(n, cols);
  Eigen::MatrixXd sum_outer = Eigen::MatrixXd::Zero(n, n);
  for (auto& b : blocks) {
    sum += b.sum;
    sum_sq += b.sum_sq;
    sum_outer += b.sum_outer;
    for (auto& t : b.trajectories) out.trajectories.push_back(std::move(t));
  }
  sum_outer = sum_outer.selfadjointView<Eigen::Lower>();

  const double m = static_cast<double>(opts.n_paths);
  out.mean = sum / m;
  out.moment2_final = sum_outer / m;
  if (opts.n_paths > 1) {
    out.variance = (sum_sq - sum.cwiseAbs2() / m) / (m - 1.0);
    out.cov_final =
        (sum_outer - (sum.col(cols - 1) * sum.col(cols - 1).transpose()) / m) / (m - 1.0);
  } else {
    out.variance = Eigen::MatrixXd::Zero(n, cols);
    out.cov_final = Eigen::MatrixXd::Zero(n, n);
  }
  return out;
}

}  // namespace nino
