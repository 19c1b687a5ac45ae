#include "iongrid/constants_species.hpp"

#include "iongrid/errors.hpp"

namespace iongrid::constants_species {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

IonSpecies make_species(const std::string& name, double mass_kg,
                        double raman_wavelength_m, double repetition_rate_rad_s,
                        double linewidth_rad_s) {
  if (!(mass_kg > 0.0)) throw DomainError("species mass must be positive");
  if (!(raman_wavelength_m > 0.0))
    throw DomainError("Raman wavelength must be positive");
  if (!(repetition_rate_rad_s > 0.0))
    throw DomainError("repetition rate must be positive");
  if (!(linewidth_rad_s > 0.0)) throw DomainError("linewidth must be positive");
  IonSpecies s;
  s.name = name;
  s.mass = mass_kg;
  s.raman_wavelength = raman_wavelength_m;
  s.repetition_rate = repetition_rate_rad_s;
  s.linewidth = linewidth_rad_s;
  s.delta_k = 4.0 * std::numbers::pi / raman_wavelength_m;
  return s;
}

IonSpecies builtin_species(const std::string& name) {
  const double u = kConst.atomic_mass_unit;
  const double omega_rep = kTwoPi * 80e6;
  const double gamma = kTwoPi * 20e6;
  if (name == "Yb171")
    return make_species(name, 170.936 * u, 355e-9, omega_rep, gamma);
  if (name == "Be9")
    return make_species(name, 9.012 * u, 318e-9, omega_rep, gamma);
  if (name == "Ca40")
    return make_species(name, 39.963 * u, 400e-9, omega_rep, gamma);
  throw UnknownSpeciesError("unknown species '" + name +
                            "' (built-ins: Yb171, Be9, Ca40)");
}

double doppler_temperature(double linewidth_rad_s) {
  if (!(linewidth_rad_s > 0.0))
    throw DomainError("linewidth must be positive");
  return kConst.reduced_planck * linewidth_rad_s / (2.0 * kConst.boltzmann);
}

}  // namespace iongrid::constants_species
