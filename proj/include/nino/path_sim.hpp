#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

#include "nino/model.hpp"

namespace nino {

/// Brownian increments over one step for all channels of a model:
/// dw ~ N(0, h) and the time integral dz = int_t^{t+h} (W(s)-W(t)) ds with
/// Var(dz) = h^3/3 and Cov(dw, dz) = h^2/2 (jointly Gaussian per channel).
struct NoiseIncrements {
  Eigen::VectorXd dw;
  Eigen::VectorXd dz;
};

/// Number of independent Wiener channels the model drives: one per additive
/// noise column; the multiplicative term always uses a single channel, which
/// comes first in the mixed model's increment vector.
int noise_channels(const OperatorSet& ops);

uint64_t splitmix64(uint64_t x);

/// Deterministic per-path increment stream; distinct (seed, path) pairs give
/// independent streams regardless of threading or call order.
class PathNoise {
 public:
  PathNoise(uint64_t seed, uint64_t path_index, int channels, double h);
  NoiseIncrements next();

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  int channels_;
  double h_;
};

/// x + h A x + noise term per model kind.
Eigen::VectorXd euler_maruyama_step(const OperatorSet& ops, const Eigen::VectorXd& x, double h,
                                    const NoiseIncrements& noise);

/// Strong Taylor 1.5 step, linear-model specialization:
/// deterministic part x + h A x + (h^2/2) A^2 x;
/// additive channels contribute S dw + A S dz;
/// the multiplicative channel contributes S1 x dw + A S1 x dz
///   + S1 A x (h dw - dz) + S1^2 x (dw^2 - h)/2 + S1^3 x ((1/3) dw^2 - h) dw / 2.
Eigen::VectorXd taylor15_step(const OperatorSet& ops, const Eigen::VectorXd& x, double h,
                              const NoiseIncrements& noise);

enum class PathMethod { euler_maruyama, taylor15 };

struct EnsembleOptions {
  PathMethod method = PathMethod::taylor15;
  uint64_t seed = 0;
  int n_paths = 1;
  double h = 0.1;
  int n_steps = 1;
  bool store_trajectories = false;
  int threads = 1;
};

/// Streaming ensemble statistics. Partial sums are accumulated over fixed
/// 64-path blocks and merged in block order, so results are bitwise
/// reproducible for a given seed whatever the thread count.
struct PathEnsemble {
  int n_paths = 0;
  double h = 0.0;
  Eigen::MatrixXd mean;          // n x (steps+1), ensemble mean per step
  Eigen::MatrixXd variance;      // n x (steps+1), unbiased per-component variance
  Eigen::MatrixXd cov_final;     // unbiased covariance at the final step
  Eigen::MatrixXd moment2_final; // uncentered second moment E[x x^T] at the final step
  std::vector<Eigen::MatrixXd> trajectories;  // per path, when requested
};

PathEnsemble run_ensemble(const OperatorSet& ops, const Eigen::VectorXd& x0,
                          const EnsembleOptions& opts);

}  // namespace nino
