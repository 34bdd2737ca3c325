#include "nino/sampling.hpp"

#include <cmath>
#include <random>

#include "nino/path_sim.hpp"

namespace nino {

std::vector<Eigen::MatrixXd> sample_realizations(const DLESolution& sol,
                                                 const RealizationRequest& req) {
  if (req.count < 1) throw DataError("sample_realizations: need at least one realization");
  if (sol.checkpoints.empty()) throw DataError("sample_realizations: empty solution");

  const int n = static_cast<int>(sol.checkpoints.front().mean.size());
  const int nt = static_cast<int>(sol.checkpoints.size());

  std::vector<Eigen::MatrixXd> out;
  out.reserve(req.count);
  for (int k = 0; k < req.count; ++k) {
    std::mt19937_64 rng(splitmix64(splitmix64(req.seed) ^ splitmix64(k + 0x5eedULL)));
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd traj(n, nt);
    for (int i = 0; i < nt; ++i) {
      const DLECheckpoint& cp = sol.checkpoints[i];
      traj.col(i) = cp.mean;
      const int rank = cp.cov.rank();
      if (rank > 0 && !req.zero_noise) {
        Eigen::VectorXd z(rank);
        for (int r = 0; r < rank; ++r) z[r] = normal(rng);
        traj.col(i) += cp.cov.z * z;
      }
    }
    out.push_back(std::move(traj));
  }
  return out;
}

ErrorReport score_against_reference(const std::vector<Eigen::MatrixXd>& realizations,
                                    const std::vector<double>& times,
                                    const AnomalySeries& reference, const RegionMask& region) {
  if (realizations.empty()) throw DataError("score_against_reference: no realizations");
  if (times.empty() || static_cast<int>(times.size()) != realizations.front().cols())
    throw DataError("score_against_reference: times do not match realization columns");
  if (realizations.front().rows() != reference.grid.size())
    throw DataError("score_against_reference: realization size does not match reference grid");
  if (region.indices.empty()) throw DataError("score_against_reference: empty region");

  const int nt = static_cast<int>(times.size());
  const double h = nt > 1 ? times[1] - times[0] : reference.dt_days;
  const int n_real = static_cast<int>(realizations.size());

  ErrorReport report;
  report.n_realizations = n_real;
  report.time_days.reserve(nt);
  report.err_mean.reserve(nt);
  report.rel_l2.reserve(nt);

  for (int i = 0; i < nt; ++i) {
    const double t = times[i];
    const long idx = std::lround((t - reference.t0_days) / reference.dt_days);
    if (idx < 0 || idx >= reference.steps() ||
        std::abs(t - reference.time(static_cast<int>(idx))) > 0.5 * h + 1e-9) {
      throw DataError("score_against_reference: realization time " + std::to_string(t) +
                      " has no reference snapshot within half a step");
    }

    Eigen::VectorXd ens_mean = Eigen::VectorXd::Zero(realizations.front().rows());
    for (const auto& r : realizations) ens_mean += r.col(i);
    ens_mean /= n_real;

    const Eigen::VectorXd ref_r =
        restrict_to_region(reference.snapshots.col(idx), region);
    const Eigen::VectorXd diff_r = ref_r - restrict_to_region(ens_mean, region);

    report.time_days.push_back(t);
    report.err_mean.push_back(diff_r.mean());
    const double denom = ref_r.norm();
    report.rel_l2.push_back(denom > 0.0 ? diff_r.norm() / denom : 0.0);
  }
  return report;
}

}  // namespace nino
