#include "exq/invariants.hpp"

#include "exq/rng.hpp"
#include "exq/spin.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace exq;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("magic basis is unitary") {
  const Matrix4cd q = magic_basis();
  CHECK(max_abs(q.adjoint() * q - Matrix4cd::Identity()) < 1e-15);
}

TEST_CASE("invariants of reference gates") {
  const InvariantPair id = makhlin_invariants(Matrix4cd::Identity());
  CHECK(std::abs(id.m1 - Complex{1.0, 0.0}) < 1e-13);
  CHECK(std::abs(id.m2 - 3.0) < 1e-13);

  const InvariantPair cnot = makhlin_invariants(cnot_gate());
  CHECK(std::abs(cnot.m1) < 1e-13);
  CHECK(std::abs(cnot.m2 - 1.0) < 1e-13);

  const InvariantPair cz = makhlin_invariants(cz_gate());
  CHECK(std::abs(cz.m1 - cnot.m1) < 1e-13);
  CHECK(std::abs(cz.m2 - cnot.m2) < 1e-13);

  const InvariantPair swap = makhlin_invariants(swap_gate());
  CHECK(std::abs(swap.m1 - Complex{-1.0, 0.0}) < 1e-13);
  CHECK(std::abs(swap.m2 + 3.0) < 1e-13);

  CHECK_THROWS_AS(makhlin_invariants(2.0 * Matrix4cd::Identity()), std::domain_error);
}

TEST_CASE("invariance under one-qubit rotations and phases") {
  std::mt19937_64 rng(123);
  double drift = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    Matrix4cd u;
    if (trial % 3 == 0) {
      u = cnot_gate();
    } else {
      // random exchange-style two-qubit unitary
      const Eigen::Vector3d c(uniform01(rng), uniform01(rng), uniform01(rng));
      u = kron2(haar_random_unitary2(rng), haar_random_unitary2(rng)) *
          canonical_gate(c);
    }
    const InvariantPair base = makhlin_invariants(u);
    const Matrix4cd local =
        kron2(haar_random_unitary2(rng), haar_random_unitary2(rng)) * u *
        kron2(haar_random_unitary2(rng), haar_random_unitary2(rng)) *
        std::exp(Complex{0, 2.0 * kPi * uniform01(rng)});
    const InvariantPair moved = makhlin_invariants(local);
    drift = std::max(drift, invariant_distance(base, moved));
  }
  CHECK(drift < 1e-10);
}

TEST_CASE("local equivalence decisions") {
  const EquivalenceResult same = locally_equivalent(cnot_gate(), cz_gate(), 1e-10);
  CHECK(same.equivalent);
  CHECK(same.distance < 1e-13);

  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix4cd dressed =
        kron2(haar_random_unitary2(rng), haar_random_unitary2(rng)) * cnot_gate() *
        kron2(haar_random_unitary2(rng), haar_random_unitary2(rng));
    const EquivalenceResult r = locally_equivalent(cnot_gate(), dressed, 1e-10);
    CHECK(r.equivalent);
    CHECK(r.distance < 1e-12);
  }

  const EquivalenceResult diff =
      locally_equivalent(cnot_gate(), Matrix4cd::Identity(), 1e-10);
  CHECK_FALSE(diff.equivalent);
  CHECK(std::abs(diff.distance - 5.0) < 1e-12);
}

TEST_CASE("canonical decomposition reconstructs the gate") {
  std::mt19937_64 rng(77);
  SUBCASE("known coordinates") {
    const KakDecomposition k = canonical_decomposition(cnot_gate());
    CHECK(std::abs(k.c(0) - kPi / 4.0) < 1e-10);
    CHECK(std::abs(k.c(1)) < 1e-10);
    CHECK(std::abs(k.c(2)) < 1e-10);
    const KakDecomposition ks = canonical_decomposition(swap_gate());
    CHECK((ks.c - Eigen::Vector3d(kPi / 4.0, kPi / 4.0, kPi / 4.0)).norm() < 1e-9);
  }
  SUBCASE("random gates") {
    for (int trial = 0; trial < 60; ++trial) {
      const Eigen::Vector3d c(1.4 * uniform01(rng), 1.4 * uniform01(rng),
                              1.4 * uniform01(rng));
      const Matrix4cd u = kron2(haar_random_unitary2(rng), haar_random_unitary2(rng)) *
                          canonical_gate(c) *
                          kron2(haar_random_unitary2(rng), haar_random_unitary2(rng));
      const KakDecomposition k = canonical_decomposition(u);
      const Matrix4cd rebuilt = k.phase * k.k1 * canonical_gate(k.c) * k.k2;
      CHECK(max_abs(rebuilt - u) < 1e-10);
      // chamber membership
      CHECK(k.c(0) >= -1e-12);
      CHECK(k.c(0) < kPi / 2.0 + 1e-9);
      CHECK(k.c(1) <= k.c(0) + 1e-12);
      CHECK(k.c(2) <= k.c(1) + 1e-12);
      CHECK(k.c(2) >= -1e-12);
      CHECK(k.c(0) + k.c(1) <= kPi / 2.0 + 1e-9);
      if (k.c(2) < 1e-9) CHECK(k.c(0) <= kPi / 4.0 + 1e-9);
      // the k factors are local
      const auto [a1, a2] = factor_local(k.k1);
      CHECK(max_abs(kron2(a1, a2) - k.k1) < 1e-9);
    }
  }
  SUBCASE("locally equivalent gates share coordinates") {
    for (int trial = 0; trial < 40; ++trial) {
      const Eigen::Vector3d c(uniform01(rng), uniform01(rng), uniform01(rng));
      const Matrix4cd base = canonical_gate(c);
      const Matrix4cd dressed =
          kron2(haar_random_unitary2(rng), haar_random_unitary2(rng)) * base *
          kron2(haar_random_unitary2(rng), haar_random_unitary2(rng));
      const KakDecomposition ka = canonical_decomposition(base);
      const KakDecomposition kb = canonical_decomposition(dressed);
      CHECK((ka.c - kb.c).norm() < 1e-9);
    }
  }
}

TEST_CASE("factoring local gates") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix2cd a = haar_random_unitary2(rng);
    const Matrix2cd b = haar_random_unitary2(rng);
    const auto [fa, fb] = factor_local(kron2(a, b));
    CHECK(max_abs(kron2(fa, fb) - kron2(a, b)) < 1e-12);
    CHECK(is_unitary(Matrix(fa), 1e-12));
    CHECK(is_unitary(Matrix(fb), 1e-12));
  }
}

TEST_CASE("extracting local corrections") {
  SUBCASE("gate against itself") {
    const LocalCorrections c = extract_local_corrections(cnot_gate(), cnot_gate());
    CHECK(c.residual < 1e-12);
  }
  SUBCASE("dressed gate recovers the dressing") {
    const Matrix4cd dressed = kron2(pauli_x(), Matrix2cd::Identity()) * cnot_gate();
    const LocalCorrections c = extract_local_corrections(dressed, cnot_gate());
    CHECK(c.residual < 1e-11);
    CHECK(phase_aligned_distance(Matrix(c.a1), Matrix(pauli_x())) < 1e-9);
  }
  SUBCASE("controlled-Z to cNOT") {
    const LocalCorrections c = extract_local_corrections(cz_gate(), cnot_gate());
    CHECK(c.residual < 1e-10);
    // the correction on the target side is a Hadamard-type rotation
    const double h_overlap =
        std::max(phase_aligned_distance(Matrix(c.b2), Matrix(hadamard_gate())),
                 phase_aligned_distance(Matrix(c.a2), Matrix(hadamard_gate())));
    CHECK(h_overlap < 1.5);  // at least one side must move the axis
  }
  SUBCASE("random dressings recover to high precision") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 40; ++trial) {
      const Matrix4cd dressed =
          kron2(haar_random_unitary2(rng), haar_random_unitary2(rng)) * cnot_gate() *
          kron2(haar_random_unitary2(rng), haar_random_unitary2(rng));
      const LocalCorrections c = extract_local_corrections(dressed, cnot_gate());
      CHECK(c.residual < 1e-9);
    }
  }
  SUBCASE("inequivalent gates are rejected") {
    CHECK_THROWS_AS(extract_local_corrections(Matrix4cd::Identity(), cnot_gate()),
                    NoLocalEquivalence);
  }
}

TEST_CASE("polar factor") {
  std::mt19937_64 rng(4);
  Matrix m(3, 3);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = Complex{normal01(rng), normal01(rng)};
  const Matrix w = polar_unitary(m);
  CHECK(is_unitary(w, 1e-12));
  // the polar factor of a unitary is itself
  CHECK(max_abs(polar_unitary(w) - w) < 1e-13);
}
