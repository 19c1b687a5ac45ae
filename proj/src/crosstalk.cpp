#include "iongrid/crosstalk.hpp"

#include <cmath>
#include <numbers>

#include "iongrid/constants_species.hpp"
#include "iongrid/errors.hpp"

namespace iongrid::crosstalk {

namespace {
using constants_species::kConst;
}

CrosstalkEntry crosstalk_angle(const lattice::LatticeGeometry& geometry,
                               const lattice::ModeSpectrum& modes,
                               const pulses_fidelity::PulseSequence& seq,
                               int i, int j, double mass) {
  const int n = geometry.ion_count();
  if (i < 0 || i >= n || j < 0 || j >= n)
    throw DomainError("ion index out of range");
  if (!(geometry.spacing > 0.0))
    throw DomainError("geometry carries no lattice spacing");
  const double th = pulses_fidelity::rotation_angle(modes, seq, i, j, mass);
  const double dx = geometry.positions[i][0] - geometry.positions[j][0];
  const double dy = geometry.positions[i][1] - geometry.positions[j][1];
  CrosstalkEntry e;
  e.i = i;
  e.j = j;
  e.separation = std::hypot(dx, dy) / geometry.spacing;
  e.theta = th;
  e.infidelity = th * th;
  return e;
}

ParallelCrosstalk parallel_crosstalk_per_gate(
    int n, const lattice::LatticeGeometry& geometry,
    const lattice::ModeSpectrum& modes,
    const pulses_fidelity::PulseSequence& seq, double mass,
    bool include_boundary) {
  if (n < 2) throw DomainError("block size n must be >= 2");
  const int rows = geometry.rows;
  const int cols = geometry.cols;
  const int N = geometry.ion_count();
  if (rows < 1 || cols < 1 || rows * cols != N)
    throw DomainError("parallel crosstalk needs a rows x cols grid geometry");
  if (rows < 3 * n + 1 || cols < 3 * n + 1)
    throw DomainError("lattice must host at least 3 x 3 blocks of size n");
  if (modes.modes() != N)
    throw DomainError("mode spectrum does not match the geometry");
  if (!(mass > 0.0)) throw DomainError("mass must be positive");

  // Theta over all pairs at once: Theta = B diag(w) B^T, w_k = -2 eta_k^2 D_k
  const double dk2 = seq.delta_k * seq.delta_k;
  Eigen::VectorXd w(N);
  for (int k = 0; k < N; ++k) {
    const double wk = modes.frequencies(k);
    const double eta2 = dk2 * kConst.reduced_planck / (2.0 * mass * wk);
    w(k) = -2.0 * eta2 * pulses_fidelity::kick_phase_sum(wk, seq);
  }
  Eigen::MatrixXd scaled = modes.mode_matrix * w.asDiagonal();
  Eigen::MatrixXd theta = scaled * modes.mode_matrix.transpose();

  // the simultaneously driven class: translates of the central horizontal edge
  const int r0 = ((rows - 1) / 2) % n;
  const int c0 = ((cols - 1) / 2 - 1) % n;
  struct Gate {
    int u, v;  // ion indices of the edge endpoints
    int gr, gc;  // position in the gate grid
  };
  std::vector<Gate> gates;
  int na = 0, nc = 0;
  for (int a = r0; a <= rows - 1; a += n) ++na;
  for (int c = c0; c <= cols - 2; c += n) ++nc;
  gates.reserve(static_cast<size_t>(na) * nc);
  {
    int gr = 0;
    for (int a = r0; a <= rows - 1; a += n, ++gr) {
      int gc = 0;
      for (int c = c0; c <= cols - 2; c += n, ++gc)
        gates.push_back({a * cols + c, a * cols + c + 1, gr, gc});
    }
  }

  double acc = 0.0;
  int averaged = 0;
  for (const Gate& g : gates) {
    const bool interior =
        g.gr >= 1 && g.gr <= na - 2 && g.gc >= 1 && g.gc <= nc - 2;
    if (!include_boundary && !interior) continue;
    double per_gate = 0.0;
    for (const Gate& h : gates) {
      if (h.u == g.u && h.v == g.v) continue;
      for (int u : {g.u, g.v})
        for (int v : {h.u, h.v}) {
          const double t = theta(u, v);
          per_gate += 0.5 * t * t;
        }
    }
    acc += per_gate;
    ++averaged;
  }
  if (averaged == 0)
    throw DomainError("no interior gates to average (lattice too small)");

  ParallelCrosstalk out;
  out.numeric_per_gate = acc / static_cast<double>(averaged);
  const double pf = std::numbers::pi / 4.0;
  const double nn = static_cast<double>(n);
  const double n2 = nn * nn;
  out.analytic_per_gate =
      pf * pf * 2.0 * lattice::lattice_sum(3.0, 100) / ((n2 * n2) * n2);
  out.gates_in_class = static_cast<int>(gates.size());
  out.gates_averaged = averaged;
  return out;
}

BlockSchedule build_block_schedule(int rows, int cols, int n) {
  if (n < 1) throw DomainError("block size n must be >= 1");
  if (rows < n + 1 || cols < n + 1)
    throw DomainError("lattice smaller than one block of gates");

  BlockSchedule s;
  s.n = n;
  const auto idx = [cols](int r, int c) { return r * cols + c; };

  if (n == 1) {
    // translates by 1 would reuse ions; split each orientation by the parity
    // of the along-edge coordinate instead
    for (int parity = 0; parity < 2; ++parity) {
      std::vector<std::pair<int, int>> grp;
      for (int r = 0; r < rows; ++r)
        for (int c = parity; c + 1 < cols; c += 2)
          grp.emplace_back(idx(r, c), idx(r, c + 1));
      s.groups.push_back(std::move(grp));
    }
    for (int parity = 0; parity < 2; ++parity) {
      std::vector<std::pair<int, int>> grp;
      for (int r = parity; r + 1 < rows; r += 2)
        for (int c = 0; c < cols; ++c)
          grp.emplace_back(idx(r, c), idx(r + 1, c));
      s.groups.push_back(std::move(grp));
    }
  } else {
    for (int ro = 0; ro < n; ++ro)
      for (int co = 0; co < n; ++co) {
        std::vector<std::pair<int, int>> grp;
        for (int r = ro; r <= rows - 1; r += n)
          for (int c = co; c + 1 <= cols - 1; c += n)
            grp.emplace_back(idx(r, c), idx(r, c + 1));
        s.groups.push_back(std::move(grp));
      }
    for (int ro = 0; ro < n; ++ro)
      for (int co = 0; co < n; ++co) {
        std::vector<std::pair<int, int>> grp;
        for (int r = ro; r + 1 <= rows - 1; r += n)
          for (int c = co; c <= cols - 1; c += n)
            grp.emplace_back(idx(r, c), idx(r + 1, c));
        s.groups.push_back(std::move(grp));
      }
  }
  s.serial_depth = static_cast<int>(s.groups.size());
  return s;
}

}  // namespace iongrid::crosstalk
