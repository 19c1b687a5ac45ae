#pragma once

#include <utility>
#include <vector>

#include "iongrid/lattice.hpp"
#include "iongrid/pulses_fidelity.hpp"

namespace iongrid::crosstalk {

struct CrosstalkEntry {
  int i = 0;
  int j = 0;
  double separation = 0;  // |r_i - r_j| in units of the lattice spacing
  double theta = 0;       // rad
  double infidelity = 0;  // theta^2
};

// rotation_angle applied to an arbitrary (typically non-adjacent) pair.
CrosstalkEntry crosstalk_angle(const lattice::LatticeGeometry& geometry,
                               const lattice::ModeSpectrum& modes,
                               const pulses_fidelity::PulseSequence& seq,
                               int i, int j, double mass);

struct ParallelCrosstalk {
  double numeric_per_gate = 0;   // finite-lattice mode sum
  double analytic_per_gate = 0;  // (pi/4)^2 * 2 * lattice_sum(3) / n^6
  int gates_in_class = 0;        // simultaneously driven translate class
  int gates_averaged = 0;        // interior gates entering the average
};

// Per-gate crosstalk when one translate class of nearest-neighbor gates runs
// in parallel with block size n: the class of the central horizontal edge,
// i.e. edges at (row, col)-(row, col+1) with row = (rows-1)/2 mod n and
// col = (cols-1)/2 - 1 mod n. Each of the 4 ion pairs between two distinct
// gates contributes Theta^2 split evenly between the two gates; a gate's
// error sums its half-shares and the result is averaged over interior gates
// of the class (all gates with include_boundary). Requires n >= 2 and a
// lattice hosting at least 3 x 3 blocks (rows, cols >= 3n + 1).
ParallelCrosstalk parallel_crosstalk_per_gate(
    int n, const lattice::LatticeGeometry& geometry,
    const lattice::ModeSpectrum& modes,
    const pulses_fidelity::PulseSequence& seq, double mass,
    bool include_boundary = false);

struct BlockSchedule {
  int n = 0;
  // Each group lists nearest-neighbor ion-index pairs that run in parallel.
  std::vector<std::vector<std::pair<int, int>>> groups;
  int serial_depth = 0;  // = groups.size()
};

// Partitions the nearest-neighbor edges of a rows x cols lattice into groups
// of mutual translates by multiples of n: (orientation, row mod n, col mod n)
// classes, 2n^2 groups for n >= 2. For n = 1 a translate class would reuse
// ions, so each class splits by along-edge parity (4 groups). Groups are
// ordered lexicographically by (orientation, row offset, col offset) with
// horizontal first. Requires rows, cols >= n + 1.
BlockSchedule build_block_schedule(int rows, int cols, int n);

}  // namespace iongrid::crosstalk
