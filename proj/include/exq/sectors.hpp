#pragma once

#include "exq/spin.hpp"

#include <vector>

// Total-spin (S, Sz) sector bases and block projections. Exchange dynamics
// never leaves a sector, so restricting operators to sector coordinates is
// both exact and cheap.

namespace exq {

struct SectorBasis {
  int sites = 0;
  int two_s = 0;   // 2S
  int two_sz = 0;  // 2Sz
  Matrix columns;  // 2^n x dim, orthonormal, deterministic construction

  Eigen::Index dim() const { return columns.cols(); }
  double spin() const { return 0.5 * two_s; }
  double spin_z() const { return 0.5 * two_sz; }
};

// Multiplicity of the spin-S irreducible in n spin-1/2 sites; equals the
// dimension of every (S, Sz) sector with |Sz| <= S.
long long sector_dimension(int n, double s);

// Canonical orthonormal basis of the (S, Sz) sector. Deterministic: the
// sector projector is applied to computational-basis seeds in lexicographic
// order and Gram-Schmidt keeps the independent ones.
SectorBasis sector_basis(int n, double s, double sz);

// All nonempty sectors of an n-site register, ordered by (2Sz, 2S).
std::vector<SectorBasis> all_sector_bases(int n);

struct BlockDecomposition {
  Matrix inside_block;        // B^dagger U B
  double leakage_norm = 0.0;  // ||(I - B B^dagger) U B||_F
  double residual_unitarity = 0.0;
};

BlockDecomposition project_to_block(const Matrix& u, const Matrix& basis_columns);
BlockDecomposition project_to_block(const Matrix& u, const SectorBasis& basis);

// Frobenius norm of everything U maps between different sectors; zero for
// exchange-generated evolution.
double total_intersector_leakage(const Matrix& u, const std::vector<SectorBasis>& sectors);

}  // namespace exq
