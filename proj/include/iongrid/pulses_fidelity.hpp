#pragma once

#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "iongrid/lattice.hpp"

namespace iongrid::pulses_fidelity {

struct PulseSequence {
  std::vector<double> kick_times;  // s, strictly increasing, t_l = l / f_rep
  std::vector<int> signs;          // +1 / -1
  double delta_k = 0;              // rad/m
  double kick_spacing = 0;         // s, 1 / f_rep
  std::string pattern;             // descriptor, e.g. "(+147,-147)"

  int size() const { return static_cast<int>(kick_times.size()); }
};

// pattern entries are signed arm lengths, e.g. {M, -M} or {M, -2*M, M}.
// Kicks are uniformly spaced at 1/f_rep starting at t = 0 (only time
// differences matter; see the time-shift invariance test).
PulseSequence build_pulse_sequence(const std::vector<long long>& pattern,
                                   double omega_rep, double delta_k);

// Parses "+M,-2M,+3" style pattern strings, substituting M = kicks_per_arm.
std::vector<long long> parse_pattern(const std::string& text, long long M);

// C(w) = sum_l s_l exp(i w t_l)  — the residual-displacement phase sum.
std::complex<double> kick_sum(double omega, const PulseSequence& seq);

// D(w) = sum_{l>m} s_l s_m sin(w (t_l - t_m)), evaluated in O(L) via the
// prefix sums Im(e_l * conj(sum_{m<l} e_m)) with e_l = s_l exp(i w t_l).
double kick_phase_sum(double omega, const PulseSequence& seq);

// alpha_j^k = i eta_k b_jk C(omega_k), eta_k = dk * sqrt(hbar / 2 m omega_k).
std::complex<double> mode_displacement(double omega_k, double b_jk,
                                       const PulseSequence& seq, double mass);

// Theta_ij = -2 sum_k eta_k^2 b_ik b_jk D(omega_k). Requires i != j.
double rotation_angle(const lattice::ModeSpectrum& modes,
                      const PulseSequence& seq, int i, int j, double mass);

struct FidelityReport {
  double theta = 0;  // rad
  std::vector<std::complex<double>> alpha_i;  // per mode
  std::vector<std::complex<double>> alpha_j;
  double worst_case_infidelity = 0;  // (Theta - pi/4)^2 + thermal alpha terms
  double average_infidelity = 0;     // 4/5 of worst case
  double temperature = 0;            // K
  // (mode index, coth-weighted |alpha_i|^2 + |alpha_j|^2 contribution)
  std::vector<std::pair<int, double>> per_mode_breakdown;
};

// deltaF = (Theta - pi/4)^2 + sum_k (|alpha_i^k|^2 + |alpha_j^k|^2)
//          * coth(hbar omega_k / 2 kB T); coth = 1 at T = 0.
// Arguments hbar*omega/(2 kB T) below 1e-8 raise NumericError (the formula
// is not meant for the classical limit).
FidelityReport gate_infidelity(const lattice::ModeSpectrum& modes,
                               const PulseSequence& seq, int i, int j,
                               double mass, double temperature);

struct TrajectorySample {
  double time = 0;  // s
  std::vector<double> displacement;  // dk * z(t), one per tracked ion
  // (X, P) = (sqrt2 Re alpha, sqrt2 Im alpha) per mode, dimensionless.
  std::vector<std::array<double, 2>> mode_xp;
};

// Mean-field trajectory from rest with every tracked ion driven (uniform
// spin branch): each kick adds i eta_k s_l sum_j b_jk to mode k's alpha,
// i.e. sqrt2 eta_k s_l (b-projection) to its momentum quadrature; between
// kicks alpha rotates as exp(-i omega_k dt). Samples are a uniform series
// with `samples_per_kick` points per kick interval, from t = 0 through the
// gate end L/f_rep; a kick coinciding with a sample lands before it.
std::vector<TrajectorySample> trajectory(const lattice::ModeSpectrum& modes,
                                         const PulseSequence& seq,
                                         const std::vector<int>& tracked_ions,
                                         double mass, int samples_per_kick);

}  // namespace iongrid::pulses_fidelity
