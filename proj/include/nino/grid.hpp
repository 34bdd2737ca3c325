#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "nino/errors.hpp"

namespace nino {

/// Uniform longitude/latitude grid over a rectangular basin.
///
/// Nodes are stored row-major and latitude-major: linear index
/// k = j*nx + i, where j counts latitude rows south to north and
/// i counts longitude columns west to east. Node (i,j) sits at
/// (lon_min + i*dx, lat_min + j*dy); the bounds are node positions,
/// not cell edges.
struct Grid {
  int nx = 0;
  int ny = 0;
  double lon_min = 0.0, lon_max = 0.0;
  double lat_min = 0.0, lat_max = 0.0;

  Grid() = default;
  Grid(int nx_, int ny_, double lon_lo, double lon_hi, double lat_lo, double lat_hi)
      : nx(nx_), ny(ny_), lon_min(lon_lo), lon_max(lon_hi), lat_min(lat_lo), lat_max(lat_hi) {
    if (nx < 2 || ny < 1) throw DataError("Grid: need nx >= 2 and ny >= 1");
    if (!(lon_max > lon_min) || (ny > 1 && !(lat_max > lat_min)))
      throw DataError("Grid: bounds must be increasing");
  }

  int size() const { return nx * ny; }
  double dx() const { return (lon_max - lon_min) / (nx - 1); }
  double dy() const { return ny > 1 ? (lat_max - lat_min) / (ny - 1) : 0.0; }
  int index(int i, int j) const { return j * nx + i; }
  double lon(int i) const { return lon_min + i * dx(); }
  double lat(int j) const { return lat_min + j * dy(); }

  bool same_layout(const Grid& o) const {
    return nx == o.nx && ny == o.ny && lon_min == o.lon_min && lon_max == o.lon_max &&
           lat_min == o.lat_min && lat_max == o.lat_max;
  }
};

/// Scalar field (e.g. a temperature-anomaly snapshot) on a Grid.
struct Field {
  Grid grid;
  Eigen::VectorXd values;  // grid.size() entries, grid ordering

  Field() = default;
  Field(const Grid& g, Eigen::VectorXd v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.size()) throw DataError("Field: value count does not match grid");
  }
  static Field zero(const Grid& g) { return Field(g, Eigen::VectorXd::Zero(g.size())); }

  double& at(int i, int j) { return values[grid.index(i, j)]; }
  double at(int i, int j) const { return values[grid.index(i, j)]; }
};

/// Horizontal velocity field, components in degrees/day on the grid nodes.
struct VelocityField {
  Grid grid;
  Eigen::VectorXd u_east;   // zonal component, deg/day
  Eigen::VectorXd v_north;  // meridional component, deg/day

  VelocityField() = default;
  VelocityField(const Grid& g, Eigen::VectorXd u, Eigen::VectorXd v)
      : grid(g), u_east(std::move(u)), v_north(std::move(v)) {
    if (u_east.size() != grid.size() || v_north.size() != grid.size())
      throw DataError("VelocityField: component size does not match grid");
  }
};

/// Mean radius used for the metre <-> degree conversion.
inline constexpr double kEarthRadiusMeters = 6371000.0;

/// Convert node-wise velocities in m/s to deg/day. The zonal component is
/// divided by cos(latitude); rows too close to the poles are rejected.
VelocityField velocity_from_ms(const Grid& g, const Eigen::VectorXd& u_ms,
                               const Eigen::VectorXd& v_ms);

/// Subset of grid nodes inside a closed lon/lat box.
struct RegionMask {
  Grid grid;
  std::vector<int> indices;  // ascending linear indices

  RegionMask() = default;
  /// Nodes with lon in [lon_lo, lon_hi] and lat in [lat_lo, lat_hi], inclusive.
  RegionMask(const Grid& g, double lon_lo, double lon_hi, double lat_lo, double lat_hi);

  int count() const { return static_cast<int>(indices.size()); }
};

/// Extract the masked entries of a field vector, in ascending index order.
Eigen::VectorXd restrict_to_region(const Eigen::VectorXd& values, const RegionMask& mask);

}  // namespace nino
