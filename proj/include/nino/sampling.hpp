#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "nino/calibration.hpp"
#include "nino/dle.hpp"
#include "nino/grid.hpp"

namespace nino {

struct RealizationRequest {
  int count = 1;
  uint64_t seed = 0;
  bool zero_noise = false;  // test hook: z = 0, realizations collapse onto the mean
};

/// Draw realizations from a mean/covariance-factor trajectory: at checkpoint i
/// realization k is m_i + Z_i z with z ~ N(0, I_rank) drawn fresh per
/// realization and per step (marginal sampling). Each entry of the result is
/// one realization, n x n_checkpoints.
std::vector<Eigen::MatrixXd> sample_realizations(const DLESolution& sol,
                                                 const RealizationRequest& req);

struct ErrorReport {
  std::vector<double> time_days;
  std::vector<double> err_mean;  // regional spatial mean of (reference - ensemble mean)
  std::vector<double> rel_l2;    // ||(reference - ensemble mean)_R|| / ||reference_R||
  int n_realizations = 0;
};

/// Score realizations against a reference series over a region. Realization
/// times are matched to the nearest reference snapshot; a mismatch beyond
/// half the realization step raises DataError.
ErrorReport score_against_reference(const std::vector<Eigen::MatrixXd>& realizations,
                                    const std::vector<double>& times,
                                    const AnomalySeries& reference, const RegionMask& region);

}  // namespace nino
