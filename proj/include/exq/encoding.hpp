#pragma once

#include "exq/sectors.hpp"
#include "exq/spin.hpp"

#include <array>
#include <vector>

// The three-spin logical qubit. A block (s1,s2,s3) stores one qubit in its
// S=1/2, Sz=+1/2 subspace:
//   |0L> = |singlet(s1,s2)>|up>
//   |1L> = sqrt(2/3)|T+>|down> - sqrt(1/3)|T0>|up>
// Exchange pulses inside a block act as logical rotations; the pair (s1,s2)
// rotates about z, the other two pairs about axes tilted 120 degrees from z
// in the x-z plane.

namespace exq {

struct CodeBlock {
  std::array<int, 3> sites{};  // order significant: sites[0],sites[1] carry the readout pair
};

// Block-local logical states on 3 spins (sites in block order, first = MSB).
Vector logical_zero_local();
Vector logical_one_local();
// Sz = -1/2 partners, obtained by total-spin lowering; used by the
// decoherence-free-subsystem objective.
Vector logical_zero_lowered_local();
Vector logical_one_lowered_local();

struct LogicalBasis {
  int sites = 0;
  std::vector<CodeBlock> blocks;
  Matrix vectors;  // 2^n x 2^k, columns ordered |0..0L> .. |1..1L>, block 0 = MSB
};

// Blocks must be disjoint and cover all sites (n = 3 * #blocks).
LogicalBasis make_logical_basis(int n, const std::vector<CodeBlock>& blocks);

// Standard two-block basis: block A = (0,1,2), block B = (3,4,5).
LogicalBasis two_qubit_basis();

// Four S=0-coupled combinations of the two blocks' Sz = +-1/2 branches;
// columns live in the six-spin (S=0, Sz=0) sector.
Matrix subsystem_singlet_vectors();

// Logical matrix of U in the code space plus how much amplitude leaves it.
BlockDecomposition logical_action(const Matrix& u, const LogicalBasis& basis);

struct BlochAxis {
  Eigen::Vector3d axis;   // unit rotation axis, positive-rate convention
  double rate = 0.0;      // rotation angle per unit tau (2*pi for exchange pairs)
};

// Rotation axis and rate of exchange on a pair of block sites: the logical
// action of exchange_unitary(i,j,tau) is exp(-i*rate*tau*(axis.sigma)/2) up
// to a global phase.
BlochAxis bloch_axis(const CodeBlock& block, int i, int j);

// Probability of finding the block's first two spins in the singlet vs the
// triplet; (1,0) on |0L> and (0,1) on |1L>.
std::pair<double, double> measure_singlet_triplet(const Vector& state,
                                                  const CodeBlock& block);

}  // namespace exq
