#include "exq/encoding.hpp"

#include "exq/rng.hpp"
#include "exq/sectors.hpp"
#include "exq/spin.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace exq;

namespace {
constexpr double kPi = std::numbers::pi;
constexpr Complex kI{0.0, 1.0};
const CodeBlock kBlock{{0, 1, 2}};
}  // namespace

TEST_CASE("logical state amplitudes") {
  const Vector zero = logical_zero_local();
  const Vector one = logical_one_local();

  // |0L>: +sqrt(1/2) on up,down,up and -sqrt(1/2) on down,up,up
  CHECK(std::abs(zero(0b010) - Complex{std::sqrt(0.5), 0}) < 1e-15);
  CHECK(std::abs(zero(0b100) + Complex{std::sqrt(0.5), 0}) < 1e-15);
  CHECK(std::abs(zero.norm() - 1.0) < 1e-14);

  CHECK(std::abs(one(0b001) - Complex{std::sqrt(2.0 / 3.0), 0}) < 1e-15);
  CHECK(std::abs(one(0b010) + Complex{std::sqrt(1.0 / 6.0), 0}) < 1e-15);
  CHECK(std::abs(one.norm() - 1.0) < 1e-14);

  CHECK(std::abs(zero.dot(one)) < 1e-14);

  const SpinRegister reg(3);
  const Matrix s2 = total_s_squared(reg), sz = total_sz(reg);
  for (const Vector& v : {zero, one}) {
    CHECK(max_abs(s2 * v - 0.75 * v) < 1e-12);
    CHECK(max_abs(sz * v - 0.5 * v) < 1e-12);
  }
}

TEST_CASE("logical action of intra-block exchange") {
  const SpinRegister reg(3);
  const LogicalBasis basis = make_logical_basis(3, {kBlock});

  SUBCASE("identity") {
    const BlockDecomposition d = logical_action(Matrix::Identity(8, 8), basis);
    CHECK(max_abs(d.inside_block - Matrix::Identity(2, 2)) < 1e-13);
    CHECK(d.leakage_norm < 1e-13);
  }

  SUBCASE("first pair acts as a z rotation") {
    for (double tau : {0.13, 0.5, 0.77}) {
      const Matrix u = exchange_unitary(reg, 0, 1, tau);
      const BlockDecomposition d = logical_action(u, basis);
      CHECK(d.leakage_norm < 1e-12);
      Matrix want(2, 2);
      want << std::exp(kI * (2.0 * kPi * tau * -0.75)), 0, 0,
          std::exp(kI * (2.0 * kPi * tau * 0.25));
      CHECK(phase_aligned_distance(d.inside_block, want) < 1e-12);
    }
  }

  SUBCASE("logical generators of all three pairs") {
    Matrix b(8, 2);
    b.col(0) = logical_zero_local();
    b.col(1) = logical_one_local();
    const double r3 = std::sqrt(3.0);

    Matrix h01 = b.adjoint() * exchange_hamiltonian(reg, 0, 1) * b;
    Matrix want01(2, 2);
    want01 << -0.75, 0, 0, 0.25;
    CHECK(max_abs(h01 - want01) < 1e-13);

    Matrix h12 = b.adjoint() * exchange_hamiltonian(reg, 1, 2) * b;
    Matrix want12(2, 2);
    want12 << 0.0, r3 / 4.0, r3 / 4.0, -0.5;
    CHECK(max_abs(h12 - want12) < 1e-13);

    Matrix h02 = b.adjoint() * exchange_hamiltonian(reg, 0, 2) * b;
    Matrix want02(2, 2);
    want02 << 0.0, -r3 / 4.0, -r3 / 4.0, -0.5;
    CHECK(max_abs(h02 - want02) < 1e-13);
  }

  SUBCASE("sequences inside a block never leak") {
    std::mt19937_64 rng(29);
    Matrix u = Matrix::Identity(8, 8);
    for (int k = 0; k < 12; ++k) {
      const int pick = static_cast<int>(rng() % 3);
      const int pairs[3][2] = {{0, 1}, {1, 2}, {0, 2}};
      u = exchange_unitary(reg, pairs[pick][0], pairs[pick][1], uniform01(rng)) * u;
    }
    CHECK(logical_action(u, basis).leakage_norm < 1e-11);
  }

  SUBCASE("logical action is multiplicative") {
    const Matrix u = exchange_unitary(reg, 0, 1, 0.23);
    const Matrix v = exchange_unitary(reg, 1, 2, 0.61);
    const Matrix lhs = logical_action(u * v, basis).inside_block;
    const Matrix rhs =
        logical_action(u, basis).inside_block * logical_action(v, basis).inside_block;
    CHECK(phase_aligned_distance(lhs, rhs) < 1e-12);
  }
}

TEST_CASE("bloch axes of the three pairs") {
  SUBCASE("readout pair rotates about z at rate 2pi") {
    const BlochAxis ax = bloch_axis(kBlock, 0, 1);
    CHECK((ax.axis - Eigen::Vector3d(0, 0, 1)).norm() < 1e-12);
    CHECK(std::abs(ax.rate - 2.0 * kPi) < 1e-12);
  }
  SUBCASE("second pair sits 120 degrees from z in the x-z plane") {
    const BlochAxis ax = bloch_axis(kBlock, 1, 2);
    CHECK(std::abs(ax.axis.y()) < 1e-13);
    const double angle = std::acos(ax.axis.z()) * 180.0 / kPi;
    CHECK(std::abs(angle - 120.0) < 1e-9);
    CHECK(ax.axis.x() < 0);  // computed sign for the printed basis phases
    CHECK((ax.axis - Eigen::Vector3d(-std::sqrt(3.0) / 2.0, 0, -0.5)).norm() < 1e-12);
    CHECK(std::abs(ax.rate - 2.0 * kPi) < 1e-12);
  }
  SUBCASE("third pair mirrors it on the other side") {
    const BlochAxis ax = bloch_axis(kBlock, 0, 2);
    CHECK(std::abs(ax.axis.y()) < 1e-13);
    CHECK((ax.axis - Eigen::Vector3d(std::sqrt(3.0) / 2.0, 0, -0.5)).norm() < 1e-12);
  }
  SUBCASE("the two nearest-neighbour axes are 120 degrees apart") {
    const BlochAxis a = bloch_axis(kBlock, 0, 1);
    const BlochAxis b = bloch_axis(kBlock, 1, 2);
    CHECK(std::abs(a.axis.dot(b.axis) + 0.5) < 1e-12);
  }
  SUBCASE("axis matches the generated rotation") {
    // exp(-i rate tau (axis.sigma)/2) must reproduce the logical action
    const SpinRegister reg(3);
    const LogicalBasis basis = make_logical_basis(3, {kBlock});
    const BlochAxis ax = bloch_axis(kBlock, 1, 2);
    for (double tau : {0.21, 0.64}) {
      const Matrix u = exchange_unitary(reg, 1, 2, tau);
      const Matrix got = logical_action(u, basis).inside_block;
      const Eigen::Matrix2cd gen =
          ax.axis.x() * Eigen::Matrix2cd((Eigen::Matrix2cd() << 0, 1, 1, 0).finished()) +
          ax.axis.y() * Eigen::Matrix2cd((Eigen::Matrix2cd() << 0, -kI, kI, 0).finished()) +
          ax.axis.z() * Eigen::Matrix2cd((Eigen::Matrix2cd() << 1, 0, 0, -1).finished());
      const Matrix want = matrix_exp_hermitian(gen, -0.5 * ax.rate * tau);
      CHECK(phase_aligned_distance(got, want) < 1e-12);
    }
  }
  SUBCASE("pair outside the block") {
    CHECK_THROWS_AS(bloch_axis(kBlock, 0, 3), std::domain_error);
  }
}

TEST_CASE("two-block basis") {
  const LogicalBasis basis = two_qubit_basis();
  CHECK(basis.vectors.cols() == 4);
  const Matrix gram = basis.vectors.adjoint() * basis.vectors;
  CHECK(max_abs(gram - Matrix::Identity(4, 4)) < 1e-13);

  // every column lives in the six-spin S=1, Sz=+1 sector
  const SpinRegister reg(6);
  const Matrix s2 = total_s_squared(reg), sz = total_sz(reg);
  CHECK(max_abs(s2 * basis.vectors - 2.0 * basis.vectors) < 1e-10);
  CHECK(max_abs(sz * basis.vectors - basis.vectors) < 1e-10);

  SUBCASE("intra-block exchange keeps the code space") {
    const Matrix u = exchange_unitary(reg, 1, 2, 0.3);
    CHECK(logical_action(u, basis).leakage_norm < 1e-12);
  }
  SUBCASE("inter-block exchange leaks") {
    const Matrix u = exchange_unitary(reg, 2, 3, 0.3);
    CHECK(logical_action(u, basis).leakage_norm > 1e-3);
  }
  SUBCASE("blocks must partition the register") {
    CHECK_THROWS_AS(make_logical_basis(6, {CodeBlock{{0, 1, 2}}, CodeBlock{{2, 3, 4}}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(make_logical_basis(6, {CodeBlock{{0, 1, 2}}}),
                    std::invalid_argument);
  }
}

TEST_CASE("subsystem singlet vectors") {
  const Matrix vs = subsystem_singlet_vectors();
  CHECK(vs.cols() == 4);
  CHECK(max_abs(vs.adjoint() * vs - Matrix::Identity(4, 4)) < 1e-12);
  const SpinRegister reg(6);
  const Matrix s2 = total_s_squared(reg), sz = total_sz(reg);
  CHECK(max_abs(s2 * vs) < 1e-10);
  CHECK(max_abs(sz * vs) < 1e-10);
}

TEST_CASE("singlet-triplet readout") {
  const Vector zero = logical_zero_local();
  const Vector one = logical_one_local();

  auto probs = measure_singlet_triplet(zero, kBlock);
  CHECK(std::abs(probs.first - 1.0) < 1e-12);
  CHECK(std::abs(probs.second) < 1e-12);

  probs = measure_singlet_triplet(one, kBlock);
  CHECK(std::abs(probs.first) < 1e-12);
  CHECK(std::abs(probs.second - 1.0) < 1e-12);

  const Vector plus = std::sqrt(0.5) * (zero + one);
  probs = measure_singlet_triplet(plus, kBlock);
  CHECK(std::abs(probs.first - 0.5) < 1e-12);
  CHECK(std::abs(probs.second - 0.5) < 1e-12);
  CHECK(std::abs(probs.first + probs.second - 1.0) < 1e-12);

  CHECK_THROWS_AS(measure_singlet_triplet(2.0 * zero, kBlock), std::domain_error);
}
