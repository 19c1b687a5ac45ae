#include <cmath>
#include <numbers>

#include "doctest.h"
#include "iongrid/constants_species.hpp"
#include "iongrid/errors.hpp"
#include "iongrid/lattice.hpp"
#include "oracles.hpp"

using namespace iongrid;
using namespace iongrid::lattice;
using constants_species::kConst;
using constants_species::kCoulomb;

namespace {

constexpr double kPi = std::numbers::pi;
const double kMassYb = 170.936 * kConst.atomic_mass_unit;

// lexicographic column comparison used for the degenerate-cluster ordering
bool col_lex_less(const Eigen::MatrixXd& B, int a, int b) {
  for (int r = 0; r < B.rows(); ++r) {
    if (B(r, a) < B(r, b)) return true;
    if (B(r, a) > B(r, b)) return false;
  }
  return false;
}

}  // namespace

TEST_SUITE("lattice") {

TEST_CASE("build_square_lattice places ions row-major at (a d, b d)") {
  const LatticeGeometry g = build_square_lattice(2, 3, 5e-6);
  REQUIRE(g.ion_count() == 6);
  CHECK(g.rows == 2);
  CHECK(g.cols == 3);
  CHECK(g.spacing == 5e-6);
  // index = a * cols + b
  CHECK(g.positions[0][0] == 0.0);
  CHECK(g.positions[0][1] == 0.0);
  CHECK(g.positions[2][1] == 2 * 5e-6);
  CHECK(g.positions[4][0] == 5e-6);
  CHECK(g.positions[4][1] == 5e-6);
  CHECK(g.positions[5][0] == 5e-6);
  CHECK(g.positions[5][1] == 2 * 5e-6);

  CHECK_THROWS_AS(build_square_lattice(0, 3, 5e-6), DomainError);
  CHECK_THROWS_AS(build_square_lattice(3, -1, 5e-6), DomainError);
  CHECK_THROWS_AS(build_square_lattice(2, 2, 0.0), DomainError);
}

TEST_CASE("potential matrix: Coulomb off-diagonals, exact row sums") {
  const double d = 50e-6;
  const double wz = 2.0 * kPi * 0.5e6;
  const LatticeGeometry g = build_square_lattice(3, 3, d);
  const PotentialMatrix V = potential_matrix(g, kMassYb, wz);

  REQUIRE(V.entries.rows() == 9);
  CHECK(V.mass == kMassYb);
  CHECK(V.trap_frequency == wz);

  // exact symmetry by construction
  for (int i = 0; i < 9; ++i)
    for (int j = i + 1; j < 9; ++j) CHECK(V.entries(i, j) == V.entries(j, i));

  // nearest and diagonal neighbors of the corner ion
  CHECK(V.entries(0, 1) ==
        doctest::Approx(kCoulomb / (d * d * d)).epsilon(1e-14));
  const double rd = std::sqrt(2.0) * d;
  CHECK(V.entries(0, 4) ==
        doctest::Approx(kCoulomb / (rd * rd * rd)).epsilon(1e-14));

  // each row sums to m omega_z^2 (makes the uniform vector an eigenvector)
  const double target = kMassYb * wz * wz;
  for (int i = 0; i < 9; ++i) {
    CHECK(V.entries.row(i).sum() == doctest::Approx(target).epsilon(1e-12));
  }
}

TEST_CASE("potential matrix input validation") {
  const LatticeGeometry g = build_square_lattice(2, 2, 50e-6);
  CHECK_THROWS_AS(potential_matrix(g, 0.0, 1e6), DomainError);
  CHECK_THROWS_AS(potential_matrix(g, kMassYb, -1e6), DomainError);

  LatticeGeometry coincident;
  coincident.positions = {{0.0, 0.0}, {0.0, 0.0}};
  coincident.spacing = 1e-6;
  CHECK_THROWS_AS(potential_matrix(coincident, kMassYb, 1e6), DomainError);

  LatticeGeometry empty;
  CHECK_THROWS_AS(potential_matrix(empty, kMassYb, 1e6), DomainError);
}

TEST_CASE("normal modes: COM at the band top, orthonormal, sign-fixed") {
  const double d = 50e-6;
  const double wz = 2.0 * kPi * 0.5e6;
  const LatticeGeometry g = build_square_lattice(3, 3, d);
  const PotentialMatrix V = potential_matrix(g, kMassYb, wz);
  const ModeSpectrum modes = normal_modes(V);
  const int n = modes.modes();
  REQUIRE(n == 9);

  // ascending frequencies, highest exactly the trap frequency
  for (int k = 1; k < n; ++k)
    CHECK(modes.frequencies(k) >= modes.frequencies(k - 1));
  CHECK(modes.frequencies(n - 1) == doctest::Approx(wz).epsilon(1e-12));

  // the top mode is the center of mass: uniform 1/3 on all nine ions
  for (int i = 0; i < n; ++i)
    CHECK(modes.mode_matrix(i, n - 1) ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-10));

  // orthonormality
  const Eigen::MatrixXd gram =
      modes.mode_matrix.transpose() * modes.mode_matrix -
      Eigen::MatrixXd::Identity(n, n);
  CHECK(gram.cwiseAbs().maxCoeff() <= 1e-12);

  // eigenvector residuals against V/m
  const Eigen::MatrixXd A = V.entries / V.mass;
  for (int k = 0; k < n; ++k) {
    const double lam = modes.frequencies(k) * modes.frequencies(k);
    const double res =
        (A * modes.mode_matrix.col(k) - lam * modes.mode_matrix.col(k))
            .cwiseAbs()
            .maxCoeff();
    CHECK(res <= 1e-12 * A.cwiseAbs().maxCoeff());
  }

  // sign convention: the largest-magnitude entry of every column is positive
  for (int k = 0; k < n; ++k) {
    int arg = 0;
    for (int i = 1; i < n; ++i)
      if (std::abs(modes.mode_matrix(i, k)) >
          std::abs(modes.mode_matrix(arg, k)))
        arg = i;
    CHECK(modes.mode_matrix(arg, k) > 0.0);
  }

  // epsilon carried through
  const double eps = kCoulomb / (kMassYb * wz * wz * d * d * d);
  CHECK(modes.epsilon == doctest::Approx(eps).epsilon(1e-14));
}

TEST_CASE("normal modes agree with an independent Jacobi eigensolver") {
  const double wz = 2.0 * kPi * 0.5e6;
  const LatticeGeometry g = build_square_lattice(3, 3, 50e-6);
  const PotentialMatrix V = potential_matrix(g, kMassYb, wz);
  const ModeSpectrum modes = normal_modes(V);

  Eigen::VectorXd lam;
  Eigen::MatrixXd vec;
  oracles::jacobi_eigen(V.entries / V.mass, lam, vec);

  for (int k = 0; k < modes.modes(); ++k) {
    REQUIRE(lam(k) > 0.0);
    CHECK(std::sqrt(lam(k)) ==
          doctest::Approx(modes.frequencies(k)).epsilon(1e-10));
  }
  // Jacobi vectors must diagonalize to the same spectrum
  const Eigen::MatrixXd D =
      vec.transpose() * (V.entries / V.mass) * vec;
  for (int k = 0; k < modes.modes(); ++k)
    CHECK(D(k, k) == doctest::Approx(lam(k)).epsilon(1e-10));
  CHECK((D - D.diagonal().asDiagonal().toDenseMatrix()).cwiseAbs().maxCoeff() <=
        1e-10 * D.cwiseAbs().maxCoeff());
}

TEST_CASE("two-ion spectrum: rocking mode at omega_z sqrt(1 - 2 eps)") {
  const double d = 50e-6;
  const double wz = 3420370.8424062226;  // a realistic trap frequency
  const LatticeGeometry g = build_square_lattice(1, 2, d);
  const ModeSpectrum modes = normal_modes(potential_matrix(g, kMassYb, wz));
  REQUIRE(modes.modes() == 2);

  const double eps = modes.epsilon;
  CHECK(modes.frequencies(1) == doctest::Approx(wz).epsilon(1e-13));
  CHECK(modes.frequencies(0) ==
        doctest::Approx(wz * std::sqrt(1.0 - 2.0 * eps)).epsilon(1e-13));

  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  // COM column: both entries +1/sqrt2
  CHECK(modes.mode_matrix(0, 1) == doctest::Approx(inv_sqrt2).epsilon(1e-12));
  CHECK(modes.mode_matrix(1, 1) == doctest::Approx(inv_sqrt2).epsilon(1e-12));
  // rocking column: antisymmetric, and the larger-magnitude entry positive
  // (the 1/sqrt2 entries differ by an ulp, so there is no exact tie)
  CHECK(std::abs(modes.mode_matrix(0, 0)) ==
        doctest::Approx(inv_sqrt2).epsilon(1e-12));
  CHECK(modes.mode_matrix(0, 0) * modes.mode_matrix(1, 0) < 0.0);
  const int big =
      std::abs(modes.mode_matrix(1, 0)) > std::abs(modes.mode_matrix(0, 0))
          ? 1
          : 0;
  CHECK(modes.mode_matrix(big, 0) > 0.0);
}

TEST_CASE("normal modes are deterministic and order degenerate clusters") {
  const double wz = 2.0 * kPi * 0.5e6;
  const LatticeGeometry g = build_square_lattice(3, 3, 50e-6);
  const PotentialMatrix V = potential_matrix(g, kMassYb, wz);
  const ModeSpectrum a = normal_modes(V);
  const ModeSpectrum b = normal_modes(V);

  CHECK(a.frequencies.cwiseEqual(b.frequencies).all());
  CHECK(a.mode_matrix.cwiseEqual(b.mode_matrix).all());

  // inside each degenerate cluster, columns come in lexicographic order
  const int n = a.modes();
  for (int k = 0; k + 1 < n; ++k) {
    const double gap = a.frequencies(k + 1) - a.frequencies(k);
    if (gap <= 1e-12 * a.frequencies(n - 1)) {
      CHECK_FALSE(col_lex_less(a.mode_matrix, k + 1, k));
    }
  }
}

TEST_CASE("unstable lattice raises NumericError") {
  // epsilon >> 1: the rocking branch turns imaginary
  const LatticeGeometry g = build_square_lattice(1, 2, 1e-6);
  const PotentialMatrix V = potential_matrix(g, kMassYb, 1e5);
  CHECK_THROWS_AS(normal_modes(V), NumericError);
}

TEST_CASE("lattice_sum: frozen values and the exact radius-1 case") {
  // S(p=3, R=1): four neighbors at r^2=1, four at r^2=2, tail pi/2
  CHECK(lattice_sum(3.0, 1) ==
        doctest::Approx(4.0 + 0.5 + kPi / 2.0).epsilon(1e-14));
  CHECK(lattice_sum(3.0, 50) ==
        doctest::Approx(4.658913699539766).epsilon(1e-12));
  CHECK(lattice_sum(3.0, 100) ==
        doctest::Approx(4.658913620637352).epsilon(1e-12));

  // generic exponent path (no fast power): small radius done by hand
  double direct = 0.0;
  for (int a = -3; a <= 3; ++a)
    for (int b = -3; b <= 3; ++b) {
      if (a == 0 && b == 0) continue;
      const double r2 = static_cast<double>(a * a + b * b);
      direct += 1.0 / (r2 * r2);
    }
  direct += kPi * std::pow(3.0, -2.0) / 1.0;
  CHECK(lattice_sum(2.0, 3) == doctest::Approx(direct).epsilon(1e-13));
}

TEST_CASE("lattice_sum: p = 3/2 stabilizes slowly but consistently") {
  const double s500 = lattice_sum(1.5, 500);
  const double s1000 = lattice_sum(1.5, 1000);
  const double s2000 = lattice_sum(1.5, 2000);
  CHECK(s500 == doctest::Approx(9.03488565232233).epsilon(1e-12));
  CHECK(s1000 == doctest::Approx(9.034250841760663).epsilon(1e-12));
  CHECK(s2000 == doctest::Approx(9.033935555633478).epsilon(1e-12));
  CHECK(std::abs(s500 - s2000) <= 1e-3 * s1000);
}

TEST_CASE("lattice_sum input validation") {
  CHECK_THROWS_AS(lattice_sum(1.0, 100), DomainError);   // divergent
  CHECK_THROWS_AS(lattice_sum(0.5, 100), DomainError);
  CHECK_THROWS_AS(lattice_sum(3.0, 0), DomainError);
  CHECK_THROWS_AS(lattice_sum(3.0, -5), DomainError);
}

TEST_CASE("dispersion_sum: zero at the zone center, exactly even") {
  CHECK(dispersion_sum(0.0, 0.0, 100) == 0.0);

  oracles::Rng rng(2024);
  for (int t = 0; t < 8; ++t) {
    const double u = rng.uniform(-kPi, kPi);
    const double v = rng.uniform(-kPi, kPi);
    CHECK(dispersion_sum(u, v, 60) == dispersion_sum(-u, -v, 60));
  }

  // frozen zone-corner values
  CHECK(dispersion_sum(kPi, kPi, 200) ==
        doctest::Approx(11.651294507745027).epsilon(1e-12));
  CHECK(dispersion_sum(kPi, kPi, 2000) ==
        doctest::Approx(11.676680495242094).epsilon(1e-12));
  // M point sits above X along the band edge
  CHECK(dispersion_sum(kPi, kPi, 200) > dispersion_sum(kPi, 0.0, 200));
}

TEST_CASE("dispersion: band structure and limits") {
  const double d = 50e-6;
  const double wz = 3420370.8424062226;
  const double eps = 5.558059030514401e-4;

  // zone center: S = 0 exactly, both forms give omega_z bitwise
  const DispersionPoint c = dispersion(0.0, 0.0, wz, eps, d, 100);
  CHECK(c.omega == wz);
  CHECK(c.omega_first_order == wz);

  // eps = 0: flat band at omega_z for any k
  const DispersionPoint f = dispersion(0.7 / d, -1.9 / d, wz, 0.0, d, 100);
  CHECK(f.omega == wz);
  CHECK(f.omega_first_order == wz);

  // 1 - x/2 >= sqrt(1 - x): the linearized form bounds the band from above
  oracles::Rng rng(7);
  for (int t = 0; t < 6; ++t) {
    const double k1 = rng.uniform(-kPi / d, kPi / d);
    const double k2 = rng.uniform(-kPi / d, kPi / d);
    const DispersionPoint p = dispersion(k1, k2, wz, eps, d, 80);
    CHECK(p.omega_first_order >= p.omega);
    CHECK(p.omega <= wz);
    CHECK(p.omega > 0.0);
    CHECK(p.k1 == k1);
    CHECK(p.k2 == k2);
  }

  // Brillouin zone is (-pi/d, pi/d]: +pi/d is in, -pi/d is out
  CHECK_NOTHROW(dispersion(kPi / d, kPi / d, wz, eps, d, 50));
  CHECK_THROWS_AS(dispersion(-kPi / d * 1.0000001, 0.0, wz, eps, d, 50),
                  DomainError);
  CHECK_THROWS_AS(dispersion(1.1 * kPi / d, 0.0, wz, eps, d, 50), DomainError);

  // huge epsilon drives the radicand negative
  CHECK_THROWS_AS(dispersion(kPi / d, kPi / d, wz, 0.2, d, 100), NumericError);
}

}  // TEST_SUITE
