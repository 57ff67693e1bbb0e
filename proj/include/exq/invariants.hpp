#pragma once

#include "exq/spin.hpp"

#include <random>
#include <stdexcept>
#include <utility>

// Local invariants of two-qubit gates and local-equivalence tooling. Two
// gates are locally equivalent when they differ only by one-qubit rotations
// before and after; the invariant pair (m1, m2) computed in the magic (Bell)
// basis classifies the equivalence classes completely.

namespace exq {

using Eigen::Matrix2cd;
using Eigen::Matrix4cd;

struct NoLocalEquivalence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bell-basis change, columns (|00>+|11>, i|01>+i|10>, |01>-|10>, i|00>-i|11>)/sqrt(2)
Matrix4cd magic_basis();

struct InvariantPair {
  Complex m1;
  double m2 = 0.0;
};

// m = (Q^dag U Q)^T (Q^dag U Q); m1 = tr(m)^2/(16 det U),
// m2 = (tr(m)^2 - tr(m^2))/(4 det U).
InvariantPair makhlin_invariants(const Matrix4cd& u, double unitarity_tol = 1e-8);

// |m1(a)-m1(b)|^2 + (m2(a)-m2(b))^2
double invariant_distance(const InvariantPair& a, const InvariantPair& b);

struct EquivalenceResult {
  bool equivalent = false;
  double distance = 0.0;
};

EquivalenceResult locally_equivalent(const Matrix4cd& u, const Matrix4cd& v,
                                     double tol);

// u = phase * k1 * exp(i(cx XX + cy YY + cz ZZ)) * k2 with k1, k2 local and
// c canonicalized into the Weyl chamber pi/4 >= cx >= cy >= cz >= 0 extended
// by cx <= pi/2 - cy (and cx <= pi/4 when cz = 0).
struct KakDecomposition {
  Complex phase;
  Matrix4cd k1;
  Eigen::Vector3d c;
  Matrix4cd k2;
};

Matrix4cd canonical_gate(const Eigen::Vector3d& c);
KakDecomposition canonical_decomposition(const Matrix4cd& u);

// nearest Kronecker factors of a (near-)local 4x4 unitary
std::pair<Matrix2cd, Matrix2cd> factor_local(const Matrix4cd& k);

struct LocalCorrections {
  Matrix2cd a1, a2, b1, b2;
  double residual = 0.0;  // phase-insensitive entrywise distance to the target
};

// One-qubit gates with (a1 x a2) * achieved * (b1 x b2) = target up to a
// global phase; throws NoLocalEquivalence when the invariants differ.
LocalCorrections extract_local_corrections(const Matrix4cd& achieved,
                                           const Matrix4cd& target);

Matrix4cd kron2(const Matrix2cd& a, const Matrix2cd& b);

// common gates
Matrix4cd cnot_gate();
Matrix4cd cz_gate();
Matrix4cd swap_gate();
Matrix2cd pauli_x();
Matrix2cd pauli_y();
Matrix2cd pauli_z();
Matrix2cd hadamard_gate();
Matrix2cd rx_gate(double theta);
Matrix2cd ry_gate(double theta);
Matrix2cd rz_gate(double theta);

Matrix2cd haar_random_unitary2(std::mt19937_64& rng);

// unitary polar factor of a nonsingular matrix
Matrix polar_unitary(const Matrix& m);

}  // namespace exq
