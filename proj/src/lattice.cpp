#include "iongrid/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "iongrid/constants_species.hpp"
#include "iongrid/errors.hpp"

namespace iongrid::lattice {

namespace {

using constants_species::kCoulomb;

double pow_p(double r2, double p) {
  // hot paths: p = 3/2 (dispersion-type sums) and p = 3 (crosstalk sums)
  if (p == 1.5) return r2 * std::sqrt(r2);
  if (p == 3.0) return (r2 * r2) * r2;
  return std::pow(r2, p);
}

}  // namespace

LatticeGeometry build_square_lattice(int rows, int cols, double d) {
  if (rows < 1 || cols < 1)
    throw DomainError("lattice dimensions must be >= 1");
  if (!(d > 0.0)) throw DomainError("lattice spacing must be positive");
  LatticeGeometry g;
  g.positions.reserve(static_cast<size_t>(rows) * cols);
  for (int a = 0; a < rows; ++a)
    for (int b = 0; b < cols; ++b)
      g.positions.push_back({a * d, b * d});
  g.spacing = d;
  g.rows = rows;
  g.cols = cols;
  return g;
}

PotentialMatrix potential_matrix(const LatticeGeometry& geometry, double mass,
                                 double omega_z) {
  if (!(mass > 0.0)) throw DomainError("mass must be positive");
  if (!(omega_z > 0.0)) throw DomainError("trap frequency must be positive");
  const int N = geometry.ion_count();
  if (N < 1) throw DomainError("geometry has no ions");

  PotentialMatrix V;
  V.entries = Eigen::MatrixXd::Zero(N, N);
  V.mass = mass;
  V.trap_frequency = omega_z;
  V.spacing = geometry.spacing;

  const double trap = mass * omega_z * omega_z;
  for (int i = 0; i < N; ++i) {
    double off_sum = 0.0;
    for (int j = 0; j < N; ++j) {
      if (j == i) continue;
      const double dx = geometry.positions[i][0] - geometry.positions[j][0];
      const double dy = geometry.positions[i][1] - geometry.positions[j][1];
      const double r2 = dx * dx + dy * dy;
      if (!(r2 > 0.0)) throw DomainError("coincident ions in geometry");
      const double vij = kCoulomb / (r2 * std::sqrt(r2));
      V.entries(i, j) = vij;
      off_sum += vij;
    }
    // diagonal chosen so the row sums to exactly m*omega_z^2
    V.entries(i, i) = trap - off_sum;
  }
  return V;
}

ModeSpectrum normal_modes(const PotentialMatrix& V) {
  const auto N = V.entries.rows();
  if (N < 1 || V.entries.cols() != N)
    throw DomainError("potential matrix must be square and non-empty");
  if (!(V.mass > 0.0)) throw DomainError("potential matrix mass not set");
  const double scale = V.entries.cwiseAbs().maxCoeff();
  if ((V.entries - V.entries.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * scale)
    throw DomainError("potential matrix is not symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(V.entries / V.mass);
  if (es.info() != Eigen::Success)
    throw NumericError("eigen-decomposition did not converge");
  Eigen::VectorXd lam = es.eigenvalues();  // ascending
  if (!(lam(0) > 0.0))
    throw NumericError("unstable crystal: non-positive eigenvalue " +
                       std::to_string(lam(0)));

  ModeSpectrum s;
  s.frequencies = lam.array().sqrt();
  s.mode_matrix = es.eigenvectors();

  // sign convention: largest-magnitude entry positive, ties at the lowest
  // index (strictly-greater scan keeps the first maximum)
  for (Eigen::Index k = 0; k < N; ++k) {
    Eigen::Index imax = 0;
    double best = std::fabs(s.mode_matrix(0, k));
    for (Eigen::Index i = 1; i < N; ++i) {
      const double m = std::fabs(s.mode_matrix(i, k));
      if (m > best) {
        best = m;
        imax = i;
      }
    }
    if (s.mode_matrix(imax, k) < 0.0) s.mode_matrix.col(k) = -s.mode_matrix.col(k);
  }

  // degenerate clusters (relative frequency gap <= 1e-12): order the columns
  // lexicographically so the output is deterministic
  Eigen::Index lo = 0;
  while (lo < N) {
    Eigen::Index hi = lo;
    while (hi + 1 < N && s.frequencies(hi + 1) - s.frequencies(hi) <=
                             1e-12 * s.frequencies(hi + 1))
      ++hi;
    if (hi > lo) {
      std::vector<Eigen::Index> order(hi - lo + 1);
      for (size_t t = 0; t < order.size(); ++t) order[t] = lo + t;
      std::sort(order.begin(), order.end(),
                [&](Eigen::Index a, Eigen::Index b) {
                  for (Eigen::Index i = 0; i < N; ++i) {
                    const double va = s.mode_matrix(i, a);
                    const double vb = s.mode_matrix(i, b);
                    if (va != vb) return va < vb;
                  }
                  return false;
                });
      Eigen::MatrixXd cols(N, static_cast<Eigen::Index>(order.size()));
      for (size_t t = 0; t < order.size(); ++t)
        cols.col(t) = s.mode_matrix.col(order[t]);
      s.mode_matrix.middleCols(lo, cols.cols()) = cols;
    }
    lo = hi + 1;
  }

  s.epsilon = V.spacing > 0.0
                  ? kCoulomb / (V.mass * V.trap_frequency * V.trap_frequency *
                                (V.spacing * V.spacing * V.spacing))
                  : 0.0;
  return s;
}

double lattice_sum(double p, int radius) {
  if (!(p > 1.0)) throw DomainError("lattice_sum diverges for p <= 1");
  if (radius < 1) throw DomainError("lattice_sum radius must be >= 1");
  double total = 0.0;
  for (int a = -radius; a <= radius; ++a) {
    double row = 0.0;
    const double a2 = static_cast<double>(a) * a;
    for (int b = -radius; b <= radius; ++b) {
      if (a == 0 && b == 0) continue;
      const double r2 = a2 + static_cast<double>(b) * b;
      row += 1.0 / pow_p(r2, p);
    }
    total += row;
  }
  const double tail = std::numbers::pi *
                      std::pow(static_cast<double>(radius), 2.0 - 2.0 * p) /
                      (p - 1.0);
  return total + tail;
}

double dispersion_sum(double u, double v, int radius) {
  if (radius < 1) throw DomainError("dispersion radius must be >= 1");
  double total = 0.0;
  for (int a = -radius; a <= radius; ++a) {
    double row = 0.0;
    const double a2 = static_cast<double>(a) * a;
    const double au = a * u;
    for (int b = -radius; b <= radius; ++b) {
      if (a == 0 && b == 0) continue;
      const double r2 = a2 + static_cast<double>(b) * b;
      const double t = au + b * v;
      // cos(|t|) keeps S(k) = S(-k) exact at the bit level
      row += (1.0 - std::cos(std::fabs(t))) / (r2 * std::sqrt(r2));
    }
    total += row;
  }
  return total;
}

DispersionPoint dispersion(double k1, double k2, double omega_z, double eps,
                           double d, int radius) {
  if (!(omega_z > 0.0)) throw DomainError("trap frequency must be positive");
  if (eps < 0.0) throw DomainError("epsilon must be >= 0");
  if (!(d > 0.0)) throw DomainError("lattice spacing must be positive");
  const double kb = std::numbers::pi / d;
  const double slack = 1e-12 * kb;
  if (k1 <= -kb - slack || k1 > kb + slack || k2 <= -kb - slack ||
      k2 > kb + slack)
    throw DomainError("k outside the Brillouin zone (-pi/d, pi/d]");

  const double S = dispersion_sum(k1 * d, k2 * d, radius);
  const double radicand = 1.0 - eps * S;
  if (!(radicand > 0.0))
    throw NumericError("dispersion instability: 1 - eps*S(k) <= 0");
  DispersionPoint p;
  p.k1 = k1;
  p.k2 = k2;
  p.omega = omega_z * std::sqrt(radicand);
  p.omega_first_order = omega_z * (1.0 - 0.5 * eps * S);
  return p;
}

}  // namespace iongrid::lattice
