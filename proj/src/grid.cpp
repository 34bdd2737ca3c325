#include "nino/grid.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace nino {

VelocityField velocity_from_ms(const Grid& g, const Eigen::VectorXd& u_ms,
                               const Eigen::VectorXd& v_ms) {
  if (u_ms.size() != g.size() || v_ms.size() != g.size())
    throw DataError("velocity_from_ms: component size does not match grid");
  const double meters_per_deg = kEarthRadiusMeters * std::numbers::pi / 180.0;
  const double day_seconds = 86400.0;
  Eigen::VectorXd u(g.size()), v(g.size());
  for (int j = 0; j < g.ny; ++j) {
    const double lat = g.lat(j);
    const double c = std::cos(lat * std::numbers::pi / 180.0);
    if (std::abs(c) < 1e-6) {
      std::ostringstream msg;
      msg << "velocity_from_ms: latitude " << lat << " too close to a pole for zonal conversion";
      throw DataError(msg.str());
    }
    for (int i = 0; i < g.nx; ++i) {
      const int k = g.index(i, j);
      u[k] = u_ms[k] * day_seconds / (meters_per_deg * c);
      v[k] = v_ms[k] * day_seconds / meters_per_deg;
    }
  }
  return VelocityField(g, std::move(u), std::move(v));
}

RegionMask::RegionMask(const Grid& g, double lon_lo, double lon_hi, double lat_lo,
                       double lat_hi)
    : grid(g) {
  for (int j = 0; j < g.ny; ++j) {
    const double la = g.lat(j);
    if (la < lat_lo || la > lat_hi) continue;
    for (int i = 0; i < g.nx; ++i) {
      const double lo = g.lon(i);
      if (lo < lon_lo || lo > lon_hi) continue;
      indices.push_back(g.index(i, j));
    }
  }
}

Eigen::VectorXd restrict_to_region(const Eigen::VectorXd& values, const RegionMask& mask) {
  if (mask.indices.empty()) throw DataError("restrict_to_region: empty mask");
  if (values.size() != mask.grid.size())
    throw DataError("restrict_to_region: value count does not match the mask's grid");
  Eigen::VectorXd out(mask.count());
  for (int k = 0; k < mask.count(); ++k) out[k] = values[mask.indices[k]];
  return out;
}

}  // namespace nino
