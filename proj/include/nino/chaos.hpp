#pragma once

#include <Eigen/Dense>
#include <vector>

#include "nino/grid.hpp"
#include "nino/linalg.hpp"
#include "nino/model.hpp"

namespace nino {

/// Exponential spatial covariance kernel q * exp(-|p1 - p2| / length),
/// distances Euclidean in (lon, lat) degrees.
struct KernelSpec {
  double q = 1.0;
  double length = 1.0;
};

/// Truncated Karhunen-Loeve basis of the kernel on a grid.
struct KLBasis {
  Eigen::VectorXd lambda;   // eigenvalues, descending, clamped at 0
  Eigen::MatrixXd phi;      // n x N eigenfields, orthonormal in the weighted inner product
  Eigen::VectorXd weights;  // trapezoidal cell weights used by the Nystrom solve
};

/// Nystrom discretization with trapezoidal cell weights on the grid: solve the
/// symmetric weighted eigenproblem of the kernel matrix and keep the leading
/// `count` pairs. An eigenvalue below -1e-8 * lambda_1 raises NumericalError.
KLBasis kl_eigenpairs(const Grid& g, const KernelSpec& kernel, int count);

/// Noise factor [sqrt(l_1) phi_1 | ... | sqrt(l_m) phi_m] from the leading modes.
Eigen::MatrixXd kl_noise_factor(const KLBasis& kl, int modes);

/// Multi-index Hermite basis over n_vars Gaussian variables, total degree <= K,
/// in graded lexicographic order (degree first, then lexicographic).
struct ChaosBasis {
  int n_vars = 0;
  int max_degree = 0;
  std::vector<std::vector<int>> indices;  // size M+1; indices[0] is all zeros
  Eigen::VectorXd norms;                  // <H_a, H_a> = prod a_i!

  int size() const { return static_cast<int>(indices.size()); }
  /// Position of a multi-index, or -1 when outside the truncation.
  int find(const std::vector<int>& alpha) const;
};

ChaosBasis build_chaos_basis(int n_vars, int max_degree);

/// Univariate probabilists' Hermite triple product <He_i He_j He_k>.
double hermite_triple(int i, int j, int k);

/// Multivariate triple product of basis entries a, b, c (by position).
double chaos_triple(const ChaosBasis& basis, int a, int b, int c);

/// Probabilists' Hermite polynomial He_n(x).
double hermite_eval(int n, double x);

/// One Gaussian variable of the expansion: a spatial noise channel modulated
/// by an orthonormal time window (value 1/sqrt(t1-t0) on [t0,t1), 0 outside).
struct ChaosVariableSpec {
  int channel = 0;
  double t0 = 0.0;
  double t1 = 0.0;

  double profile(double t) const;
  bool operator==(const ChaosVariableSpec&) const = default;
};

struct GalerkinSpec {
  ModelKind kind = ModelKind::additive;  // additive or multiplicative
  int degree = 1;                        // K
  int time_windows = 1;                  // windows per channel on [0, horizon]
  double horizon = 1.0;
};

/// Galerkin projection of the model onto the Hermite basis: a deterministic
/// block ODE system. The driving noise is expanded over (channel x window)
/// variables; each degree-1 block picks up the matching noise column as
/// forcing (additive case) or the blocks couple through S1 and the Hermite
/// triple products (multiplicative case, drift Wong-Zakai-corrected to keep
/// the Ito interpretation).
struct ChaosSystem {
  ChaosBasis basis;
  std::vector<ChaosVariableSpec> variables;  // variable v = channel*windows + window
  DriftMatrix a_eff;
  Eigen::MatrixXd s1;  // empty for the additive case
  ModelKind kind = ModelKind::additive;
  int n = 0;
  double horizon = 0.0;

  struct Forcing {
    int block;
    int variable;
    Eigen::VectorXd field;
  };
  std::vector<Forcing> forcings;

  struct Coupling {
    int i;  // receiving block
    int j;  // source block
    int variable;
    double coeff;  // <xi_v H_j H_i> / <H_i H_i>
  };
  std::vector<Coupling> couplings;
};

/// noise_columns holds [sqrt(l_j) phi_j] for the additive case (one channel per
/// column); the multiplicative case uses s1 and a single channel.
ChaosSystem assemble_galerkin_system(const DriftMatrix& a, const Eigen::MatrixXd& noise_columns,
                                     const Eigen::MatrixXd& s1, const GalerkinSpec& spec);

struct ChaosSolution {
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> coeffs;  // per checkpoint: n x (M+1) block matrix
  ChaosBasis basis;
  std::vector<ChaosVariableSpec> variables;

  const Eigen::MatrixXd& final_coeffs() const { return coeffs.back(); }
};

/// Crank-Nicolson on the block system; time windows should align with the
/// step grid (the profile is sampled at each step's midpoint).
ChaosSolution solve_chaos(const ChaosSystem& sys, const Eigen::VectorXd& x0, double h,
                          int n_steps, int checkpoint_stride = 1);

struct ChaosMoments {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

/// Mean block plus variance field sum_{k>=1} X_k^2 <H_k,H_k> (elementwise).
ChaosMoments chaos_statistics(const Eigen::MatrixXd& coeffs, const ChaosBasis& basis);

/// Evaluate one realization at sample eta of the expansion variables.
Eigen::VectorXd chaos_realization(const Eigen::MatrixXd& coeffs, const ChaosBasis& basis,
                                  const Eigen::VectorXd& eta);

/// L2(probability x space) norm of a chaos state.
double chaos_l2_norm(const Eigen::MatrixXd& coeffs, const ChaosBasis& basis);

/// Distance between two degree-1 solutions whose variable sets nest (blocks
/// are matched by their (channel, window) variable spec; unmatched blocks
/// count fully). Used for truncation-convergence studies.
double chaos_l2_distance_degree1(const ChaosSolution& a, const ChaosSolution& b);

}  // namespace nino
