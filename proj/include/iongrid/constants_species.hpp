#pragma once

#include <numbers>
#include <string>

namespace iongrid::constants_species {

// CODATA-2018 values, SI units. Fixed so results are reproducible.
struct PhysicalConstants {
  double elementary_charge;   // C
  double vacuum_permittivity; // F/m
  double reduced_planck;      // J*s
  double boltzmann;           // J/K
  double atomic_mass_unit;    // kg
};

inline constexpr PhysicalConstants kConst{
    1.602176634e-19,
    8.8541878128e-12,
    1.054571817e-34,
    1.380649e-23,
    1.66053906660e-27,
};

// e^2 / (4 pi eps0): the Coulomb coupling prefactor that appears in the
// potential matrix and in epsilon.
inline constexpr double kCoulomb =
    kConst.elementary_charge * kConst.elementary_charge /
    (4.0 * std::numbers::pi * kConst.vacuum_permittivity);

struct IonSpecies {
  std::string name;
  double mass = 0;             // kg
  double raman_wavelength = 0; // m
  double repetition_rate = 0;  // rad/s
  double linewidth = 0;        // rad/s
  double delta_k = 0;          // rad/m, always 4*pi/raman_wavelength
};

// Validates positivity and derives delta_k = 4*pi/lambda (counter-propagating
// Raman beams, each contributing 2*pi/lambda).
IonSpecies make_species(const std::string& name, double mass_kg,
                        double raman_wavelength_m, double repetition_rate_rad_s,
                        double linewidth_rad_s);

// Built-in table: Yb171, Be9, Ca40. All with omega_rep = 2*pi*80 MHz and
// Gamma = 2*pi*20 MHz. Throws UnknownSpeciesError for other names.
IonSpecies builtin_species(const std::string& name);

// Doppler temperature T_D = hbar*Gamma / (2 k_B).
double doppler_temperature(double linewidth_rad_s);

}  // namespace iongrid::constants_species
