#pragma once

#include <string>

#include "iongrid/constants_species.hpp"

namespace iongrid::gate_design {

using constants_species::IonSpecies;

enum class Rounding { nearest, up, down };

Rounding parse_rounding(const std::string& name);  // "nearest" | "up" | "down"
std::string rounding_name(Rounding r);

struct GateDesign {
  IonSpecies species;
  double spacing = 0;          // m
  double omega_z = 0;          // rad/s
  long long kicks_per_arm = 0; // M
  double m_tilde = 0;          // real-valued kick count before rounding
  double epsilon = 0;
  double gate_time = 0;        // s, = 2M / (omega_rep/2pi)
  double delta_phi = 0;        // rad, pi/4 up to the integer-M adjustment
  double roundoff_bound = 0;   // (5 pi / 8M)^2
  bool epsilon_warning = false;// epsilon >= 0.01: outside the eps << 1 regime
};

struct SensitivityReport {
  double delta_omega_rel = 0;
  double rotation_infidelity = 0;      // quadratic in delta_omega/omega
  double displacement_infidelity = 0;  // quartic in delta_omega/omega
};

// eps = e^2 / (4 pi eps0 m omega_z^2 d^3)
double epsilon(const IonSpecies& species, double omega_z, double d);

// Trap frequency for which the two-mode phase difference of the (+M,-M)
// sequence equals pi/4 before the integer-M constraint:
// omega_z0 = (3 e^2 hbar dk^2 omega_rep^2 / (2 pi^3 eps0 m^2 d^3))^(1/5)
double initial_omega_z(const IonSpecies& species, double d);

// Rounds M_tilde = (1 + eps/2) * omega_rep / omega_z0 to an integer, then
// re-solves omega_z by fixed-point iteration of
// omega_z <- (1 + eps(omega_z)/2) * omega_rep / M to 1e-14 relative.
GateDesign solve_design(const IonSpecies& species, double d,
                        Rounding rounding = Rounding::nearest);

double roundoff_bound(long long M);

// rotation = (5 pi delta/4 omega)^2, displacement = 8 pi^2 eta_z^2 M^2
// (delta/omega)^4 with eta_z = dk * sqrt(hbar / 2 m omega_z).
SensitivityReport sensitivity(const GateDesign& design, double delta_omega_z);

// Two-mode phase difference 3 eps hbar dk^2 omega_rep^2 / (2 pi m omega_z^3)
// at eps = eps(species, omega_z, d).
double delta_phi(const IonSpecies& species, double omega_z, double d);

}  // namespace iongrid::gate_design
