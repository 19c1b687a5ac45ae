#pragma once

#include <Eigen/Dense>
#include <array>
#include <utility>
#include <vector>

#include "iongrid/lattice.hpp"

namespace iongrid::propagation {

// v_g(k) = -(eps omega_z d / 2) sum' sin(a*u + b*v) * (a, b) / (a^2+b^2)^(3/2)
// over the square window |a|,|b| <= radius (u = k1*d, v = k2*d). Written so
// that v_g(-k) = -v_g(k) holds exactly. Requires k in (-pi/d, pi/d].
std::array<double, 2> group_velocity(double k1, double k2, double eps,
                                     double omega_z, double d, int radius);

// Scans |v_g| on a grid x grid mesh of the closed irreducible wedge
// [0, pi]^2 in k*d (|v_g| has the full square-lattice symmetry, so the wedge
// contains the zone maximum and nested grids make refinement checks exact).
// Returns (max speed in m/s, max normalized by eps*omega_z*d). The
// normalized value is computed epsilon-free, so it is identical for any eps.
std::pair<double, double> max_group_velocity(double eps, double omega_z,
                                             double d, int grid,
                                             int radius = 200);

struct GroupVelocityField {
  int grid = 0;
  std::vector<double> axis;  // k*d values, (-pi, pi]
  Eigen::MatrixXd vx;        // m/s, row = k1 index, col = k2 index
  Eigen::MatrixXd vy;
  double max_speed = 0;       // m/s, from the wedge scan at the same density
  double normalized_max = 0;  // max_speed / (eps omega_z d)
};

// Full-zone field on the uniform grid x_i = -pi + 2*pi*(i+1)/grid, plus the
// wedge-scan maximum.
GroupVelocityField group_velocity_field(double eps, double omega_z, double d,
                                        int grid, int radius = 200);

struct DisturbanceResponse {
  int source = 0;
  double z0 = 0;  // m
  double v0 = 0;  // m/s
  std::vector<double> times;
  Eigen::MatrixXd displacement;  // N x times, m
  Eigen::VectorXd envelope;      // per-ion max |z| over the window, m
  double energy_drift = 0;       // max relative deviation of the mode energy
};

// Projects (z0, v0) on the source ion onto the modes, evolves each mode as
// z_k(t) = z_k(0) cos(w_k t) + (zdot_k(0)/w_k) sin(w_k t), and reconstructs
// per-ion displacements at the given times (all >= 0).
DisturbanceResponse evolve_disturbance(const lattice::LatticeGeometry& geometry,
                                       const lattice::ModeSpectrum& modes,
                                       int source, double z0, double v0,
                                       const std::vector<double>& times);

}  // namespace iongrid::propagation
