#include "exq/spin.hpp"

#include "exq/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace exq;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr Complex kI{0.0, 1.0};

// test-only oracle: plain truncated Taylor series of exp(i*scale*H)
Matrix taylor_exp(const Matrix& h, double scale, int terms) {
  Matrix out = Matrix::Identity(h.rows(), h.cols());
  Matrix term = out;
  for (int k = 1; k <= terms; ++k) {
    term = term * ((kI * scale / static_cast<double>(k)) * h);
    out += term;
  }
  return out;
}

Matrix random_hermitian(int dim, std::mt19937_64& rng) {
  Matrix a(dim, dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) a(r, c) = Complex{normal01(rng), normal01(rng)};
  return 0.5 * (a + a.adjoint());
}

}  // namespace

TEST_CASE("single-spin operators") {
  const SpinRegister reg(1);
  const SpinComponents ops = spin_operators(reg, 0);
  CHECK(std::abs(ops.sz(0, 0).real() - 0.5) < 1e-15);
  CHECK(std::abs(ops.sz(1, 1).real() + 0.5) < 1e-15);
  CHECK(is_hermitian(ops.sx));
  CHECK(is_hermitian(ops.sy));
  CHECK(is_hermitian(ops.sz));
  // commutator [Sx, Sy] = i Sz
  CHECK(max_abs(ops.sx * ops.sy - ops.sy * ops.sx - kI * ops.sz) < 1e-15);
}

TEST_CASE("embedded operators and eigenvalues") {
  const SpinRegister reg(2);
  const SpinComponents s0 = spin_operators(reg, 0);
  // site 0 is the most significant bit: Sz x I
  Matrix expected = Matrix::Zero(4, 4);
  expected.diagonal() << 0.5, 0.5, -0.5, -0.5;
  CHECK(max_abs(s0.sz - expected) < 1e-15);

  const SpinRegister reg3(3);
  Matrix sz_sum = Matrix::Zero(8, 8);
  for (int k = 0; k < 3; ++k) sz_sum += spin_operators(reg3, k).sz;
  Vector up = Vector::Zero(8);
  up(0) = 1.0;
  CHECK(max_abs((sz_sum * up - 1.5 * up)) < 1e-15);

  CHECK_THROWS_AS(spin_operators(reg, 2), std::out_of_range);
  CHECK_THROWS_AS(spin_operators(reg, -1), std::out_of_range);
}

TEST_CASE("exchange hamiltonian spectrum and eigenvectors") {
  const SpinRegister reg(2);
  const Matrix h = exchange_hamiltonian(reg, 0, 1);
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  Eigen::Vector4d want(-0.75, 0.25, 0.25, 0.25);
  CHECK((es.eigenvalues() - want).cwiseAbs().maxCoeff() < 1e-14);

  Vector singlet = Vector::Zero(4);
  singlet(1) = std::sqrt(0.5);
  singlet(2) = -std::sqrt(0.5);
  CHECK(max_abs(h * singlet + 0.75 * singlet) < 1e-14);

  // cross-check the SWAP construction against the component sum
  Matrix sum = Matrix::Zero(4, 4);
  const SpinComponents a = spin_operators(reg, 0), b = spin_operators(reg, 1);
  sum = a.sx * b.sx + a.sy * b.sy + a.sz * b.sz;
  CHECK(max_abs(h - sum) < 1e-15);

  CHECK_THROWS_AS(exchange_hamiltonian(reg, 1, 1), std::invalid_argument);
}

TEST_CASE("exchange commutes with total spin") {
  for (int n = 2; n <= 6; ++n) {
    const SpinRegister reg(n);
    const Matrix s2 = total_s_squared(reg);
    const Matrix sz = total_sz(reg);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const Matrix h = exchange_hamiltonian(reg, i, j);
        CHECK(max_abs(h * s2 - s2 * h) < 1e-12);
        CHECK(max_abs(h * sz - sz * h) < 1e-12);
      }
    }
  }
}

TEST_CASE("exchange unitary conventions") {
  const SpinRegister reg(2);
  const Matrix swap = swap_permutation(reg, 0, 1);

  SUBCASE("half period is a SWAP up to phase") {
    const Matrix u = exchange_unitary(reg, 0, 1, 0.5);
    CHECK(phase_aligned_distance(u, swap) < 1e-14);
    // the closed form fixes the phase to e^{-i pi/4} i
    CHECK(max_abs(u - std::exp(-kI * (kPi / 4.0)) * kI * swap) < 1e-14);
    Vector ud = Vector::Zero(4);
    ud(1) = 1.0;  // |up down>
    Vector du = Vector::Zero(4);
    du(2) = 1.0;
    const Vector mapped = u * ud;
    CHECK(std::abs(std::abs(mapped.dot(du)) - 1.0) < 1e-14);
  }
  SUBCASE("zero time is the identity") {
    CHECK(max_abs(exchange_unitary(reg, 0, 1, 0.0) - Matrix::Identity(4, 4)) < 1e-15);
  }
  SUBCASE("full period is a global phase") {
    const Matrix u = exchange_unitary(reg, 0, 1, 1.0);
    CHECK(phase_aligned_distance(u, Matrix::Identity(4, 4)) < 1e-14);
  }
  SUBCASE("integer shifts change the phase only") {
    const Matrix u = exchange_unitary(reg, 0, 1, 0.37);
    for (int m : {-2, -1, 1, 3}) {
      const Matrix v = exchange_unitary(reg, 0, 1, 0.37 + m);
      CHECK(phase_aligned_distance(u, v) < 1e-13);
    }
  }
  SUBCASE("one-parameter group") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
      const double t1 = 3.0 * uniform01(rng) - 1.5;
      const double t2 = 3.0 * uniform01(rng) - 1.5;
      const Matrix lhs = exchange_unitary(reg, 0, 1, t1) * exchange_unitary(reg, 0, 1, t2);
      CHECK(max_abs(lhs - exchange_unitary(reg, 0, 1, t1 + t2)) < 1e-12);
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(exchange_unitary(reg, 0, 0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(exchange_unitary(reg, 0, 1, std::nan("")), std::domain_error);
  }
}

TEST_CASE("unitarity of generated steps") {
  std::mt19937_64 rng(5);
  for (int n = 2; n <= 5; ++n) {
    const SpinRegister reg(n);
    for (int trial = 0; trial < 5; ++trial) {
      const int i = static_cast<int>(rng() % static_cast<unsigned>(n));
      int j = static_cast<int>(rng() % static_cast<unsigned>(n));
      if (j == i) j = (i + 1) % n;
      CHECK(is_unitary(exchange_unitary(reg, i, j, 4.0 * uniform01(rng) - 2.0)));
    }
  }
}

TEST_CASE("parallel steps") {
  const SpinRegister reg(4);
  SUBCASE("empty step is the identity") {
    CHECK(max_abs(parallel_step_unitary(reg, {}) - Matrix::Identity(16, 16)) < 1e-15);
  }
  SUBCASE("single coupling matches exchange_unitary") {
    const Matrix a = parallel_step_unitary(reg, {{1, 2, 0.3}});
    CHECK(max_abs(a - exchange_unitary(reg, 1, 2, 0.3)) < 1e-12);
  }
  SUBCASE("disjoint pairs factorize") {
    const Matrix joint = parallel_step_unitary(reg, {{0, 1, 0.21}, {2, 3, 0.43}});
    const Matrix split =
        exchange_unitary(reg, 0, 1, 0.21) * exchange_unitary(reg, 2, 3, 0.43);
    CHECK(max_abs(joint - split) < 1e-12);
  }
  SUBCASE("shared-site couplings do not factorize") {
    const SpinRegister reg3(3);
    const Matrix joint = parallel_step_unitary(reg3, {{0, 1, 0.3}, {1, 2, 0.3}});
    const Matrix split =
        exchange_unitary(reg3, 0, 1, 0.3) * exchange_unitary(reg3, 1, 2, 0.3);
    CHECK(phase_aligned_distance(joint, split) > 1e-3);
    CHECK(is_unitary(joint, 1e-12));
    const Matrix s2 = total_s_squared(reg3), sz = total_sz(reg3);
    CHECK(max_abs(joint * s2 - s2 * joint) < 1e-12);
    CHECK(max_abs(joint * sz - sz * joint) < 1e-12);
  }
  SUBCASE("duplicate pair rejected") {
    CHECK_THROWS_AS(parallel_step_unitary(reg, {{0, 1, 0.1}, {1, 0, 0.2}}),
                    std::invalid_argument);
  }
}

TEST_CASE("hermitian exponential") {
  SUBCASE("zero gives identity") {
    const Matrix z = Matrix::Zero(3, 3);
    CHECK(max_abs(matrix_exp_hermitian(z, 1.7) - Matrix::Identity(3, 3)) < 1e-15);
  }
  SUBCASE("diagonal case") {
    const SpinRegister reg(1);
    const Matrix sz = spin_operators(reg, 0).sz;
    Matrix want(2, 2);
    want << std::exp(kI * (kPi / 2.0)), 0, 0, std::exp(-kI * (kPi / 2.0));
    CHECK(max_abs(matrix_exp_hermitian(sz, kPi) - want) < 1e-14);
    CHECK(max_abs(matrix_exp_hermitian(sz, 2.0 * kPi) + Matrix::Identity(2, 2)) <
          1e-14);
  }
  SUBCASE("matches the pair closed form") {
    const SpinRegister reg(2);
    const Matrix h = exchange_hamiltonian(reg, 0, 1);
    for (double theta : {0.1, 1.0, kPi, 4.2}) {
      const Matrix spectral = matrix_exp_hermitian(h, theta);
      const Matrix closed = exchange_unitary(reg, 0, 1, theta / (2.0 * kPi));
      CHECK(max_abs(spectral - closed) < 1e-12);
    }
  }
  SUBCASE("agrees with the Taylor-series oracle") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 10; ++trial) {
      Matrix h = random_hermitian(5, rng);
      const double scale = 1.0 / std::max(1.0, h.cwiseAbs().sum());
      CHECK(max_abs(matrix_exp_hermitian(h, scale) - taylor_exp(h, scale, 12)) < 1e-10);
    }
  }
  SUBCASE("rejects non-hermitian input") {
    Matrix bad(2, 2);
    bad << 0, 1, 0, 0;
    CHECK_THROWS_AS(matrix_exp_hermitian(bad, 1.0), std::domain_error);
  }
}

TEST_CASE("phase-aligned distance") {
  std::mt19937_64 rng(3);
  const SpinRegister reg(2);
  const Matrix u = exchange_unitary(reg, 0, 1, 0.81);
  CHECK(phase_aligned_distance(u, std::exp(kI * 1.234) * u) < 1e-14);
  CHECK(phase_aligned_distance(u, Matrix::Identity(4, 4)) > 0.1);
}
