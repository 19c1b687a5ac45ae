#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

namespace iongrid::lattice {

struct LatticeGeometry {
  std::vector<std::array<double, 2>> positions;  // m
  // Grid constant for regular constructions; for hand-built geometries set it
  // to the minimum pairwise distance (it feeds epsilon downstream).
  double spacing = 0;
  // Set by build_square_lattice (row-major indexing); 0 for custom layouts.
  int rows = 0;
  int cols = 0;

  int ion_count() const { return static_cast<int>(positions.size()); }
};

// rows x cols ions at (a*d, b*d), index = a*cols + b.
LatticeGeometry build_square_lattice(int rows, int cols, double d);

struct PotentialMatrix {
  Eigen::MatrixXd entries;   // N/m, symmetric
  double mass = 0;           // kg
  double trap_frequency = 0; // rad/s
  double spacing = 0;        // carried from the geometry
};

// V_ij = e^2/(4 pi eps0 r_ij^3) for i != j; diagonal chosen so every row sums
// to exactly m*omega_z^2 (which makes the uniform vector an eigenvector).
PotentialMatrix potential_matrix(const LatticeGeometry& geometry, double mass,
                                 double omega_z);

struct ModeSpectrum {
  Eigen::VectorXd frequencies;  // rad/s, ascending
  Eigen::MatrixXd mode_matrix;  // orthonormal, column k = mode k
  double epsilon = 0;           // e^2/(4 pi eps0 m omega_z^2 d^3)

  int modes() const { return static_cast<int>(frequencies.size()); }
};

// Eigen-decomposition of V/m. Frequencies sorted ascending; each mode vector
// has its largest-magnitude entry positive (ties: lowest index); degenerate
// clusters (relative frequency gap <= 1e-12) are ordered lexicographically by
// the sign-fixed vectors. A non-positive eigenvalue raises NumericError.
ModeSpectrum normal_modes(const PotentialMatrix& V);

// Sum over integer pairs (a,b) != (0,0) with |a|,|b| <= radius of
// 1/(a^2+b^2)^p, plus the continuum tail pi * radius^(2-2p) / (p-1).
// p <= 1 diverges and raises DomainError.
double lattice_sum(double p, int radius);

struct DispersionPoint {
  double k1 = 0;                 // rad/m
  double k2 = 0;                 // rad/m
  double omega = 0;              // rad/s, square-root form
  double omega_first_order = 0;  // rad/s, linearized form
};

// S(k) = sum' [1 - cos(a*u + b*v)] / (a^2+b^2)^(3/2) over the square window
// |a|,|b| <= radius (no tail; the integrand oscillates). u = k1*d, v = k2*d.
// Written so that S is exactly even in (u,v).
double dispersion_sum(double u, double v, int radius);

// omega(k) = omega_z * sqrt(1 - eps*S(k)) and the first-order form
// omega_z * (1 - eps*S(k)/2). Requires k in the Brillouin zone (-pi/d, pi/d];
// a non-positive radicand raises NumericError.
DispersionPoint dispersion(double k1, double k2, double omega_z, double eps,
                           double d, int radius);

}  // namespace iongrid::lattice
