#include "iongrid/gate_design.hpp"

#include <cmath>
#include <numbers>

#include "iongrid/constants_species.hpp"
#include "iongrid/errors.hpp"

namespace iongrid::gate_design {

namespace {
using constants_species::kConst;
using constants_species::kCoulomb;
}  // namespace

Rounding parse_rounding(const std::string& name) {
  if (name == "nearest") return Rounding::nearest;
  if (name == "up") return Rounding::up;
  if (name == "down") return Rounding::down;
  throw DomainError("unknown rounding mode '" + name +
                    "' (expected nearest, up or down)");
}

std::string rounding_name(Rounding r) {
  switch (r) {
    case Rounding::nearest: return "nearest";
    case Rounding::up: return "up";
    case Rounding::down: return "down";
  }
  throw DomainError("invalid rounding mode");
}

double epsilon(const constants_species::IonSpecies& species, double omega_z,
               double d) {
  if (!(omega_z > 0.0)) throw DomainError("trap frequency must be positive");
  if (!(d > 0.0)) throw DomainError("lattice spacing must be positive");
  const double d3 = (d * d) * d;
  return kCoulomb / (species.mass * omega_z * omega_z * d3);
}

double initial_omega_z(const constants_species::IonSpecies& species,
                       double d) {
  if (!(d > 0.0)) throw DomainError("lattice spacing must be positive");
  const double pi = std::numbers::pi;
  const double dk = species.delta_k;
  const double wr = species.repetition_rate;
  const double num = 3.0 * kConst.elementary_charge * kConst.elementary_charge *
                     kConst.reduced_planck * dk * dk * wr * wr;
  const double den = 2.0 * pi * pi * pi * kConst.vacuum_permittivity *
                     species.mass * species.mass * ((d * d) * d);
  return std::pow(num / den, 0.2);
}

double roundoff_bound(long long kicks_per_arm) {
  if (kicks_per_arm < 1) throw DomainError("kicks per arm must be >= 1");
  const double x =
      5.0 * std::numbers::pi / (8.0 * static_cast<double>(kicks_per_arm));
  return x * x;
}

double delta_phi(const constants_species::IonSpecies& species, double omega_z,
                 double d) {
  const double eps = epsilon(species, omega_z, d);
  const double dk = species.delta_k;
  const double wr = species.repetition_rate;
  const double num = 3.0 * eps * kConst.reduced_planck * dk * dk * wr * wr;
  const double den = 2.0 * std::numbers::pi * species.mass * omega_z *
                     omega_z * omega_z;
  return num / den;
}

GateDesign solve_design(const constants_species::IonSpecies& species, double d,
                        Rounding rounding) {
  if (!(d > 0.0)) throw DomainError("lattice spacing must be positive");

  const double w0 = initial_omega_z(species, d);
  const double eps0 = epsilon(species, w0, d);
  const double m_tilde = (1.0 + eps0 / 2.0) * species.repetition_rate / w0;

  long long M = 0;
  switch (rounding) {
    case Rounding::nearest: M = std::llround(m_tilde); break;
    case Rounding::up: M = static_cast<long long>(std::ceil(m_tilde)); break;
    case Rounding::down: M = static_cast<long long>(std::floor(m_tilde)); break;
  }
  if (M < 1)
    throw DomainError("no valid kick count: commensurability ratio below 1");

  // self-consistent trap frequency for the integer kick count
  double w = w0;
  bool converged = false;
  for (int it = 0; it < 100; ++it) {
    const double wn = (1.0 + epsilon(species, w, d) / 2.0) *
                      species.repetition_rate / static_cast<double>(M);
    if (std::fabs(wn - w) / wn < 1e-14) {
      w = wn;
      converged = true;
      break;
    }
    w = wn;
  }
  if (!converged)
    throw NumericError("trap-frequency fixed point did not converge");

  GateDesign g;
  g.species = species;
  g.spacing = d;
  g.omega_z = w;
  g.kicks_per_arm = M;
  g.m_tilde = m_tilde;
  g.epsilon = epsilon(species, w, d);
  g.gate_time = 2.0 * static_cast<double>(M) /
                (species.repetition_rate / (2.0 * std::numbers::pi));
  g.delta_phi = delta_phi(species, w, d);
  g.roundoff_bound = roundoff_bound(M);
  g.epsilon_warning = g.epsilon >= 0.01;
  return g;
}

SensitivityReport sensitivity(const GateDesign& design, double delta_omega_z) {
  if (!(std::fabs(delta_omega_z) < design.omega_z))
    throw DomainError("|delta omega_z| must be below omega_z");
  const double rel = delta_omega_z / design.omega_z;

  const double xr = 5.0 * std::numbers::pi * rel / 4.0;
  const double rotation = xr * xr;

  const auto& sp = design.species;
  const double eta_z =
      sp.delta_k *
      std::sqrt(kConst.reduced_planck / (2.0 * sp.mass * design.omega_z));
  const double m = static_cast<double>(design.kicks_per_arm);
  // rel^4 as sq(sq(rel)) so the quartic scaling is exact in binary
  const double rel2 = rel * rel;
  const double rel4 = rel2 * rel2;
  const double coeff =
      8.0 * std::numbers::pi * std::numbers::pi * eta_z * eta_z * m * m;
  const double displacement = coeff * rel4;

  return SensitivityReport{rel, rotation, displacement};
}

}  // namespace iongrid::gate_design
