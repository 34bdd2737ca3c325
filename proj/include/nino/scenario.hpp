#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "nino/calibration.hpp"
#include "nino/chaos.hpp"
#include "nino/grid.hpp"
#include "nino/model.hpp"
#include "nino/sampling.hpp"

namespace nino {

// ---------------------------------------------------------------------------
// Gridded-series file format "ssta-grid 1" (plain text, line oriented):
//   line 1: `ssta-grid 1`
//   line 2: `nx ny`
//   line 3: `lon_min lon_max lat_min lat_max`
//   line 4: `nt dt_days t0_days`
//   then nt blocks of ny lines with nx whitespace-separated decimal values,
//   latitude rows from south to north.
// Values are written with 17 significant digits so finite fields round-trip
// exactly. Blank lines and full-line `#` comments are ignored when reading;
// parse errors carry the offending line number.
// ---------------------------------------------------------------------------

AnomalySeries read_grid_series(std::istream& in, const std::string& name);
AnomalySeries read_grid_series(const std::string& path);
void write_grid_series(const AnomalySeries& series, std::ostream& out);
void write_grid_series(const AnomalySeries& series, const std::string& path);

// ---------------------------------------------------------------------------
// Velocity file format "ocvel 1": identical header with two blocks (u, then v,
// both in deg/day) per time slice. The steady reader requires nt = 1.
// ---------------------------------------------------------------------------

VelocityField read_velocity_field(std::istream& in, const std::string& name);
VelocityField read_velocity_field(const std::string& path);
void write_velocity_field(const VelocityField& vel, std::ostream& out);
void write_velocity_field(const VelocityField& vel, const std::string& path);

// ---------------------------------------------------------------------------
// Operator-set persistence "nino-ops 1": versioned text header followed by
// named row-major dense blocks:
//   nino-ops 1
//   kind <additive|multiplicative|mixed>
//   tau_days <float>
//   matrix <a|s|s1|s2|basis> <rows> <cols>
//   <rows lines of cols values>
//   ...
//   end
// A sparse drift is densified on write; reading always yields a dense drift.
// ---------------------------------------------------------------------------

OperatorSet read_operator_set(std::istream& in, const std::string& name);
OperatorSet read_operator_set(const std::string& path);
void write_operator_set(const OperatorSet& ops, std::ostream& out);
void write_operator_set(const OperatorSet& ops, const std::string& path);

// ---------------------------------------------------------------------------
// Plot-ready dumps.
// ---------------------------------------------------------------------------

/// CSV with header `time_days,err_mean_degC,rel_l2`, one row per step.
void write_error_report_csv(const ErrorReport& report, std::ostream& out);
void write_error_report_csv(const ErrorReport& report, const std::string& path);

/// Combined per-method CSV with header `method,time_days,err_mean_degC,rel_l2`.
void write_comparison_csv(const std::vector<std::pair<std::string, ErrorReport>>& labeled,
                          std::ostream& out);
void write_comparison_csv(const std::vector<std::pair<std::string, ErrorReport>>& labeled,
                          const std::string& path);

/// Plain-text matrix dump of a field: ny rows of nx values, north row first.
void write_field_text(const Field& field, std::ostream& out);
void write_field_text(const Field& field, const std::string& path);

/// Binary 16-bit PGM (P5, maxval 65535, big-endian samples, north row first).
/// A header comment documents the linear scaling gray -> physical value.
void write_field_pgm(const Field& field, std::ostream& out);
void write_field_pgm(const Field& field, const std::string& path);

// ---------------------------------------------------------------------------
// Synthetic scenario generation.
// ---------------------------------------------------------------------------

/// Configuration for the synthetic desk-scale basin, parsed from a flat
/// `key = value` text file (`#` starts a comment; unknown or duplicate keys
/// are errors; nx, ny and n_steps are required, everything else defaults).
struct ScenarioConfig {
  Grid grid{2, 1, 160.0, 270.0, -20.0, 20.0};

  std::string velocity_name = "double-gyre";  // or "zero"
  double velocity_u0_ms = 0.1;                // gyre amplitude, m/s

  double gamma_per_day = 0.1;  // diagonal damping; keeps the drift stable
  KernelSpec kernel{0.01, 10.0};
  int kl_modes = 8;

  double t0_days = 0.0;
  double dt_days = 1.0;  // output step of the generated series
  int n_steps = 100;     // series holds n_steps + 1 snapshots incl. the start
  int substeps = 1;      // integrator substeps per output step

  double init_amplitude = 1.0;  // Gaussian-bump initial anomaly, degrees C
  uint64_t seed = 0;

  void validate() const;
};

ScenarioConfig parse_scenario_config(std::istream& in, const std::string& name);
ScenarioConfig parse_scenario_config(const std::string& path);

/// Named analytic velocity fields. "double-gyre" is the steady flow
/// u = U sin(pi xi) cos(pi zeta), v = -U cos(pi xi) sin(pi zeta) on
/// basin-normalized coordinates (tangent to the boundary, so the zero-inflow
/// discretization is natural); "zero" is the quiescent basin. U is in m/s and
/// the result is converted to deg/day.
VelocityField make_velocity(const Grid& g, const std::string& name, double u0_ms);

struct Scenario {
  AnomalySeries series;   // simulated "observations", n_steps + 1 snapshots
  VelocityField velocity; // deg/day
  OperatorSet truth;      // additive ground truth: A = transport - gamma I, S = KL factor
};

/// Build the ground-truth operators (upwind transport minus gamma I, KL noise
/// factor of the exponential kernel), verify stability, and integrate one long
/// seeded Taylor-1.5 trajectory to produce the observed series.
Scenario generate_synthetic_scenario(const ScenarioConfig& cfg);

}  // namespace nino
