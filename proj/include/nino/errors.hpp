#pragma once

#include <stdexcept>
#include <string>

namespace nino {

/// Malformed or inconsistent input data (files, series, masks, shapes).
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// A numerical method failed to meet its contract (non-convergence,
/// indefiniteness beyond tolerance, branch-cut eigenvalues, singular solves).
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace nino
