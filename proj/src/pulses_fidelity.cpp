#include "iongrid/pulses_fidelity.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <string>

#include "iongrid/constants_species.hpp"
#include "iongrid/errors.hpp"

namespace iongrid::pulses_fidelity {

namespace {

using constants_species::kConst;

double eta_of(double delta_k, double mass, double omega_k) {
  return delta_k * std::sqrt(kConst.reduced_planck / (2.0 * mass * omega_k));
}

// coth(x) for x > 0; exact 1 when the exponential underflows
double coth_positive(double x) {
  if (x < 1e-8)
    throw NumericError("thermal factor coth(x) evaluated too close to the "
                       "classical limit (x < 1e-8)");
  const double e = std::expm1(2.0 * x);
  return 1.0 + 2.0 / e;
}

void check_pair(const lattice::ModeSpectrum& modes, int i, int j) {
  const int n = modes.modes();
  if (i < 0 || i >= n || j < 0 || j >= n)
    throw DomainError("ion index out of range");
  if (i == j) throw DomainError("ion indices must be distinct");
}

}  // namespace

PulseSequence build_pulse_sequence(const std::vector<long long>& pattern,
                                   double omega_rep, double delta_k) {
  if (pattern.empty()) throw DomainError("pulse pattern must be non-empty");
  if (!(omega_rep > 0.0))
    throw DomainError("repetition rate must be positive");
  if (!(delta_k > 0.0)) throw DomainError("delta_k must be positive");

  const double f_rep = omega_rep / (2.0 * std::numbers::pi);
  PulseSequence s;
  s.delta_k = delta_k;
  s.kick_spacing = 1.0 / f_rep;

  std::string desc = "(";
  long long total = 0;
  for (size_t a = 0; a < pattern.size(); ++a) {
    const long long arm = pattern[a];
    if (arm == 0) throw DomainError("pattern arm lengths must be non-zero");
    total += std::llabs(arm);
    if (a) desc.push_back(',');
    desc += (arm > 0 ? "+" : "") + std::to_string(arm);
  }
  desc.push_back(')');
  s.pattern = desc;

  s.kick_times.reserve(static_cast<size_t>(total));
  s.signs.reserve(static_cast<size_t>(total));
  long long l = 0;
  for (long long arm : pattern) {
    const int sgn = arm > 0 ? 1 : -1;
    for (long long c = 0; c < std::llabs(arm); ++c) {
      s.kick_times.push_back(static_cast<double>(l) / f_rep);
      s.signs.push_back(sgn);
      ++l;
    }
  }
  return s;
}

std::vector<long long> parse_pattern(const std::string& text, long long M) {
  std::vector<long long> out;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    std::string tok = text.substr(pos, comma - pos);
    // trim whitespace
    size_t b = tok.find_first_not_of(" \t");
    size_t e = tok.find_last_not_of(" \t");
    if (b == std::string::npos)
      throw DomainError("empty entry in pulse pattern '" + text + "'");
    tok = tok.substr(b, e - b + 1);

    long long sign = 1;
    size_t i = 0;
    if (tok[i] == '+' || tok[i] == '-') {
      if (tok[i] == '-') sign = -1;
      ++i;
    }
    long long count = -1;
    size_t digits_begin = i;
    while (i < tok.size() && std::isdigit(static_cast<unsigned char>(tok[i])))
      ++i;
    if (i > digits_begin) count = std::stoll(tok.substr(digits_begin, i - digits_begin));
    bool uses_m = false;
    if (i < tok.size() && tok[i] == 'M') {
      uses_m = true;
      ++i;
    }
    if (i != tok.size() || (count < 0 && !uses_m))
      throw DomainError("bad pulse pattern entry '" + tok + "'");
    if (uses_m) {
      if (M < 1)
        throw DomainError("pattern uses M but no positive kick count given");
      count = (count < 0 ? 1 : count) * M;
    }
    if (count == 0) throw DomainError("pattern arm length must be non-zero");
    out.push_back(sign * count);

    if (comma == text.size()) break;
    pos = comma + 1;
  }
  if (out.empty()) throw DomainError("empty pulse pattern");
  return out;
}

std::complex<double> kick_sum(double omega, const PulseSequence& seq) {
  std::complex<double> c{0.0, 0.0};
  for (int l = 0; l < seq.size(); ++l)
    c += static_cast<double>(seq.signs[l]) *
         std::polar(1.0, omega * seq.kick_times[l]);
  return c;
}

double kick_phase_sum(double omega, const PulseSequence& seq) {
  std::complex<double> prefix{0.0, 0.0};
  double d = 0.0;
  for (int l = 0; l < seq.size(); ++l) {
    const std::complex<double> e =
        static_cast<double>(seq.signs[l]) *
        std::polar(1.0, omega * seq.kick_times[l]);
    d += std::imag(e * std::conj(prefix));
    prefix += e;
  }
  return d;
}

std::complex<double> mode_displacement(double omega_k, double b_jk,
                                       const PulseSequence& seq, double mass) {
  if (!(omega_k > 0.0)) throw DomainError("mode frequency must be positive");
  if (!(mass > 0.0)) throw DomainError("mass must be positive");
  const double eta = eta_of(seq.delta_k, mass, omega_k);
  return std::complex<double>(0.0, 1.0) * (eta * b_jk) * kick_sum(omega_k, seq);
}

double rotation_angle(const lattice::ModeSpectrum& modes,
                      const PulseSequence& seq, int i, int j, double mass) {
  check_pair(modes, i, j);
  if (!(mass > 0.0)) throw DomainError("mass must be positive");
  const double dk2 = seq.delta_k * seq.delta_k;
  double acc = 0.0;
  for (int k = 0; k < modes.modes(); ++k) {
    const double wk = modes.frequencies(k);
    const double eta2 = dk2 * kConst.reduced_planck / (2.0 * mass * wk);
    acc += eta2 * modes.mode_matrix(i, k) * modes.mode_matrix(j, k) *
           kick_phase_sum(wk, seq);
  }
  return -2.0 * acc;
}

FidelityReport gate_infidelity(const lattice::ModeSpectrum& modes,
                               const PulseSequence& seq, int i, int j,
                               double mass, double temperature) {
  check_pair(modes, i, j);
  if (!(mass > 0.0)) throw DomainError("mass must be positive");
  if (temperature < 0.0) throw DomainError("temperature must be >= 0");

  FidelityReport r;
  r.temperature = temperature;
  const int n = modes.modes();
  r.alpha_i.reserve(n);
  r.alpha_j.reserve(n);
  r.per_mode_breakdown.reserve(n);

  const double dk2 = seq.delta_k * seq.delta_k;
  double theta_acc = 0.0;
  double disp = 0.0;
  for (int k = 0; k < n; ++k) {
    const double wk = modes.frequencies(k);
    const double eta2 = dk2 * kConst.reduced_planck / (2.0 * mass * wk);
    const double bi = modes.mode_matrix(i, k);
    const double bj = modes.mode_matrix(j, k);
    const std::complex<double> c = kick_sum(wk, seq);
    theta_acc += eta2 * bi * bj * kick_phase_sum(wk, seq);

    const double eta = std::sqrt(eta2);
    r.alpha_i.push_back(std::complex<double>(0.0, 1.0) * (eta * bi) * c);
    r.alpha_j.push_back(std::complex<double>(0.0, 1.0) * (eta * bj) * c);

    const double coth =
        temperature == 0.0
            ? 1.0
            : coth_positive(kConst.reduced_planck * wk /
                            (2.0 * kConst.boltzmann * temperature));
    const double term = eta2 * (bi * bi + bj * bj) * std::norm(c) * coth;
    disp += term;
    r.per_mode_breakdown.emplace_back(k, term);
  }

  r.theta = -2.0 * theta_acc;
  const double miss = r.theta - std::numbers::pi / 4.0;
  r.worst_case_infidelity = miss * miss + disp;
  r.average_infidelity = 0.8 * r.worst_case_infidelity;
  return r;
}

std::vector<TrajectorySample> trajectory(const lattice::ModeSpectrum& modes,
                                         const PulseSequence& seq,
                                         const std::vector<int>& tracked_ions,
                                         double mass, int samples_per_kick) {
  if (samples_per_kick < 1)
    throw DomainError("samples per kick must be >= 1");
  if (tracked_ions.empty())
    throw DomainError("trajectory needs at least one tracked ion");
  if (!(mass > 0.0)) throw DomainError("mass must be positive");
  const int n = modes.modes();
  for (int ion : tracked_ions)
    if (ion < 0 || ion >= n) throw DomainError("tracked ion index out of range");

  const int L = seq.size();
  std::vector<TrajectorySample> out;
  if (L == 0) {
    TrajectorySample s;
    s.time = 0.0;
    s.displacement.assign(tracked_ions.size(), 0.0);
    s.mode_xp.assign(static_cast<size_t>(n), {0.0, 0.0});
    out.push_back(std::move(s));
    return out;
  }

  double spacing = seq.kick_spacing;
  if (!(spacing > 0.0) && L >= 2)
    spacing = seq.kick_times[1] - seq.kick_times[0];
  if (!(spacing > 0.0))
    throw DomainError("pulse sequence carries no kick spacing");
  const double dt = spacing / static_cast<double>(samples_per_kick);

  Eigen::VectorXd eta(n), proj(n);
  for (int k = 0; k < n; ++k) {
    eta(k) = eta_of(seq.delta_k, mass, modes.frequencies(k));
    double p = 0.0;
    for (int ion : tracked_ions) p += modes.mode_matrix(ion, k);
    proj(k) = p;
  }
  Eigen::VectorXcd phase(n);
  for (int k = 0; k < n; ++k)
    phase(k) = std::polar(1.0, -modes.frequencies(k) * dt);

  Eigen::VectorXcd alpha = Eigen::VectorXcd::Zero(n);
  const long long steps =
      static_cast<long long>(L) * samples_per_kick;  // samples 0..steps
  out.reserve(static_cast<size_t>(steps) + 1);

  const double sqrt2 = std::numbers::sqrt2;
  int kidx = 0;
  for (long long st = 0; st <= steps; ++st) {
    const double t = static_cast<double>(st) * dt;
    // kicks at or just before this sample land first
    while (kidx < L && seq.kick_times[kidx] <= t + 1e-18) {
      const double s = static_cast<double>(seq.signs[kidx]);
      for (int k = 0; k < n; ++k)
        alpha(k) += std::complex<double>(0.0, 1.0) * (eta(k) * proj(k) * s);
      ++kidx;
    }

    TrajectorySample smp;
    smp.time = t;
    smp.displacement.reserve(tracked_ions.size());
    for (int ion : tracked_ions) {
      double z = 0.0;
      for (int k = 0; k < n; ++k)
        z += modes.mode_matrix(ion, k) * eta(k) * 2.0 * std::real(alpha(k));
      smp.displacement.push_back(z);
    }
    smp.mode_xp.reserve(static_cast<size_t>(n));
    for (int k = 0; k < n; ++k)
      smp.mode_xp.push_back(
          {sqrt2 * std::real(alpha(k)), sqrt2 * std::imag(alpha(k))});
    out.push_back(std::move(smp));

    alpha = alpha.cwiseProduct(phase);
  }
  return out;
}

}  // namespace iongrid::pulses_fidelity
