#include "iongrid/propagation.hpp"

#include <cmath>
#include <numbers>

#include "iongrid/errors.hpp"

namespace iongrid::propagation {

namespace {

// sin evaluated on |t| and reflected, so odd_sin(-t) == -odd_sin(t) exactly
inline double odd_sin(double t) {
  const double s = std::sin(std::fabs(t));
  return std::signbit(t) ? -s : s;
}

void check_field_args(double eps, double omega_z, double d, int radius) {
  if (eps < 0.0) throw DomainError("epsilon must be >= 0");
  if (!(omega_z > 0.0)) throw DomainError("trap frequency must be positive");
  if (!(d > 0.0)) throw DomainError("lattice spacing must be positive");
  if (radius < 1) throw DomainError("summation radius must be >= 1");
}

// normalized field on the mesh us x vs (k*d units):
//   vx = -1/2 * S_u (A/r^3) C_v^T,  vy = -1/2 * C_u (B/r^3) S_v^T
// (the sin-cos cross terms cancel by the a -> -a / b -> -b symmetry)
void normalized_field(const Eigen::VectorXd& us, const Eigen::VectorXd& vs,
                      int radius, Eigen::MatrixXd& vx, Eigen::MatrixXd& vy) {
  const int m = 2 * radius + 1;
  Eigen::MatrixXd wa(m, m), wb(m, m);
  for (int ia = 0; ia < m; ++ia) {
    const double a = ia - radius;
    for (int ib = 0; ib < m; ++ib) {
      const double b = ib - radius;
      const double r2 = a * a + b * b;
      const double inv = r2 > 0.0 ? 1.0 / (r2 * std::sqrt(r2)) : 0.0;
      wa(ia, ib) = a * inv;
      wb(ia, ib) = b * inv;
    }
  }
  const auto nu = us.size();
  const auto nv = vs.size();
  Eigen::MatrixXd su(nu, m), cu(nu, m), sv(nv, m), cv(nv, m);
  for (Eigen::Index i = 0; i < nu; ++i)
    for (int ia = 0; ia < m; ++ia) {
      const double t = (ia - radius) * us(i);
      su(i, ia) = odd_sin(t);
      cu(i, ia) = std::cos(std::fabs(t));
    }
  for (Eigen::Index i = 0; i < nv; ++i)
    for (int ib = 0; ib < m; ++ib) {
      const double t = (ib - radius) * vs(i);
      sv(i, ib) = odd_sin(t);
      cv(i, ib) = std::cos(std::fabs(t));
    }
  Eigen::MatrixXd ta = su * wa;
  vx = -0.5 * (ta * cv.transpose());
  Eigen::MatrixXd tb = cu * wb;
  vy = -0.5 * (tb * sv.transpose());
}

}  // namespace

std::array<double, 2> group_velocity(double k1, double k2, double eps,
                                     double omega_z, double d, int radius) {
  check_field_args(eps, omega_z, d, radius);
  const double kb = std::numbers::pi / d;
  const double slack = 1e-12 * kb;
  if (k1 <= -kb - slack || k1 > kb + slack || k2 <= -kb - slack ||
      k2 > kb + slack)
    throw DomainError("k outside the Brillouin zone (-pi/d, pi/d]");

  const double u = k1 * d;
  const double v = k2 * d;
  double sx = 0.0, sy = 0.0;
  for (int a = -radius; a <= radius; ++a) {
    const double au = a * u;
    const double a2 = static_cast<double>(a) * a;
    for (int b = -radius; b <= radius; ++b) {
      if (a == 0 && b == 0) continue;
      const double r2 = a2 + static_cast<double>(b) * b;
      const double w = odd_sin(au + b * v) / (r2 * std::sqrt(r2));
      sx += w * a;
      sy += w * b;
    }
  }
  const double scale = eps * omega_z * d;
  return {scale * (-0.5 * sx), scale * (-0.5 * sy)};
}

std::pair<double, double> max_group_velocity(double eps, double omega_z,
                                             double d, int grid, int radius) {
  check_field_args(eps, omega_z, d, radius);
  if (grid < 3) throw DomainError("grid must be >= 3");

  Eigen::VectorXd us(grid);
  for (int i = 0; i < grid; ++i)
    us(i) = std::numbers::pi * static_cast<double>(i) /
            static_cast<double>(grid - 1);
  Eigen::MatrixXd vx, vy;
  normalized_field(us, us, radius, vx, vy);
  double nmax = 0.0;
  for (Eigen::Index i = 0; i < vx.rows(); ++i)
    for (Eigen::Index j = 0; j < vx.cols(); ++j) {
      const double s = std::hypot(vx(i, j), vy(i, j));
      if (s > nmax) nmax = s;
    }
  return {nmax * (eps * omega_z * d), nmax};
}

GroupVelocityField group_velocity_field(double eps, double omega_z, double d,
                                        int grid, int radius) {
  check_field_args(eps, omega_z, d, radius);
  if (grid < 3) throw DomainError("grid must be >= 3");

  GroupVelocityField f;
  f.grid = grid;
  Eigen::VectorXd xs(grid);
  f.axis.resize(grid);
  for (int i = 0; i < grid; ++i) {
    xs(i) = -std::numbers::pi + 2.0 * std::numbers::pi *
                                    static_cast<double>(i + 1) /
                                    static_cast<double>(grid);
    f.axis[i] = xs(i);
  }
  Eigen::MatrixXd nx, ny;
  normalized_field(xs, xs, radius, nx, ny);
  const double scale = eps * omega_z * d;
  f.vx = scale * nx;
  f.vy = scale * ny;
  const auto mx = max_group_velocity(eps, omega_z, d, grid, radius);
  f.max_speed = mx.first;
  f.normalized_max = mx.second;
  return f;
}

DisturbanceResponse evolve_disturbance(const lattice::LatticeGeometry& geometry,
                                       const lattice::ModeSpectrum& modes,
                                       int source, double z0, double v0,
                                       const std::vector<double>& times) {
  const int n = geometry.ion_count();
  if (modes.modes() != n)
    throw DomainError("mode spectrum does not match the geometry");
  if (source < 0 || source >= n)
    throw DomainError("source ion index out of range");
  if (times.empty()) throw DomainError("times must be non-empty");
  for (double t : times)
    if (!(t >= 0.0)) throw DomainError("times must be >= 0");
  if (!std::isfinite(z0) || !std::isfinite(v0))
    throw DomainError("initial conditions must be finite");

  const auto nt = static_cast<Eigen::Index>(times.size());
  Eigen::VectorXd zeta0(n), vel0(n);
  for (int k = 0; k < n; ++k) {
    zeta0(k) = modes.mode_matrix(source, k) * z0;
    vel0(k) = modes.mode_matrix(source, k) * v0;
  }

  Eigen::MatrixXd coord(n, nt);
  for (Eigen::Index it = 0; it < nt; ++it) {
    const double t = times[static_cast<size_t>(it)];
    for (int k = 0; k < n; ++k) {
      const double wk = modes.frequencies(k);
      coord(k, it) =
          zeta0(k) * std::cos(wk * t) + vel0(k) / wk * std::sin(wk * t);
    }
  }

  DisturbanceResponse r;
  r.source = source;
  r.z0 = z0;
  r.v0 = v0;
  r.times = times;
  r.displacement = modes.mode_matrix * coord;
  r.envelope = r.displacement.cwiseAbs().rowwise().maxCoeff();

  // exact per-mode energies: (zdot_k^2 + w_k^2 z_k^2) summed over modes
  double e0 = 0.0, emin = 0.0, emax = 0.0;
  for (Eigen::Index it = 0; it < nt; ++it) {
    const double t = times[static_cast<size_t>(it)];
    double e = 0.0;
    for (int k = 0; k < n; ++k) {
      const double wk = modes.frequencies(k);
      const double zk = coord(k, it);
      const double zdk =
          -zeta0(k) * wk * std::sin(wk * t) + vel0(k) * std::cos(wk * t);
      e += zdk * zdk + wk * wk * zk * zk;
    }
    if (it == 0) {
      e0 = emin = emax = e;
    } else {
      emin = std::min(emin, e);
      emax = std::max(emax, e);
    }
  }
  r.energy_drift = e0 > 0.0 ? (emax - emin) / e0 : 0.0;
  return r;
}

}  // namespace iongrid::propagation
