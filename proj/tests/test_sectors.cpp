#include "exq/sectors.hpp"

#include "exq/rng.hpp"
#include "exq/spin.hpp"

#include <doctest.h>

#include <cmath>

using namespace exq;

TEST_CASE("sector dimensions") {
  CHECK(sector_dimension(3, 0.5) == 2);
  CHECK(sector_dimension(3, 1.5) == 1);
  CHECK(sector_dimension(2, 0.0) == 1);
  CHECK(sector_dimension(2, 1.0) == 1);
  CHECK(sector_dimension(6, 1.0) == 9);
  CHECK(sector_dimension(6, 0.0) == 5);
  CHECK_THROWS_AS(sector_dimension(3, 1.0), std::domain_error);
  CHECK_THROWS_AS(sector_dimension(4, 3.0), std::domain_error);
}

TEST_CASE("completeness over all sectors") {
  for (int n = 2; n <= 8; ++n) {
    long long total = 0;
    for (int two_s = n % 2; two_s <= n; two_s += 2)
      total += (two_s + 1) * sector_dimension(n, 0.5 * two_s);
    CHECK(total == (1LL << n));
  }
}

TEST_CASE("sector bases are orthonormal eigenbases") {
  for (auto [n, s, sz] : {std::tuple<int, double, double>{3, 0.5, 0.5},
                          {4, 1.0, 0.0},
                          {5, 1.5, -0.5},
                          {6, 1.0, 1.0}}) {
    const SectorBasis basis = sector_basis(n, s, sz);
    CHECK(basis.dim() == sector_dimension(n, s));
    const Matrix gram = basis.columns.adjoint() * basis.columns;
    CHECK(max_abs(gram - Matrix::Identity(basis.dim(), basis.dim())) < 1e-12);

    const SpinRegister reg(n);
    const Matrix s2 = total_s_squared(reg);
    const Matrix sz_op = total_sz(reg);
    CHECK(max_abs(s2 * basis.columns - s * (s + 1.0) * basis.columns) < 1e-10);
    CHECK(max_abs(sz_op * basis.columns - sz * basis.columns) < 1e-10);
  }
}

TEST_CASE("known small sectors") {
  SUBCASE("three spins, S=1/2, Sz=+1/2 is two dimensional") {
    CHECK(sector_basis(3, 0.5, 0.5).dim() == 2);
  }
  SUBCASE("six spins, S=1, Sz=+1 has nine states") {
    CHECK(sector_basis(6, 1.0, 1.0).dim() == 9);
  }
  SUBCASE("two-spin singlet") {
    const SectorBasis basis = sector_basis(2, 0.0, 0.0);
    REQUIRE(basis.dim() == 1);
    Vector singlet = Vector::Zero(4);
    singlet(1) = std::sqrt(0.5);
    singlet(2) = -std::sqrt(0.5);
    CHECK(max_abs(basis.columns - Matrix(singlet)) < 1e-12);
  }
  SUBCASE("invalid quantum numbers") {
    CHECK_THROWS_AS(sector_basis(3, 0.5, 1.5), std::domain_error);
    CHECK_THROWS_AS(sector_basis(3, 1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(sector_basis(4, 1.0, 0.5), std::domain_error);
  }
}

TEST_CASE("deterministic construction") {
  const SectorBasis a = sector_basis(6, 1.0, 1.0);
  const SectorBasis b = sector_basis(6, 1.0, 1.0);
  CHECK(max_abs(a.columns - b.columns) == 0.0);
  const SectorBasis c = sector_basis(5, 0.5, 0.5);
  const SectorBasis d = sector_basis(5, 0.5, 0.5);
  CHECK(max_abs(c.columns - d.columns) < 1e-12);
}

TEST_CASE("block projections") {
  SUBCASE("identity stays inside any subspace") {
    const SectorBasis basis = sector_basis(4, 1.0, 1.0);
    const BlockDecomposition d =
        project_to_block(Matrix::Identity(16, 16), basis);
    CHECK(max_abs(d.inside_block - Matrix::Identity(basis.dim(), basis.dim())) < 1e-13);
    CHECK(d.leakage_norm < 1e-13);
    CHECK(d.residual_unitarity < 1e-12);
  }
  SUBCASE("dimension mismatch") {
    const SectorBasis basis = sector_basis(4, 1.0, 1.0);
    CHECK_THROWS_AS(project_to_block(Matrix::Identity(8, 8), basis),
                    std::domain_error);
  }
}

TEST_CASE("exchange evolution is block diagonal across sectors") {
  std::mt19937_64 rng(17);
  for (int n : {4, 5, 6}) {
    const SpinRegister reg(n);
    const auto sectors = all_sector_bases(n);
    const int i = static_cast<int>(rng() % static_cast<unsigned>(n));
    int j = static_cast<int>(rng() % static_cast<unsigned>(n));
    if (j == i) j = (i + 1) % n;
    const Matrix u = exchange_unitary(reg, i, j, 0.7 * uniform01(rng) + 0.1);
    CHECK(total_intersector_leakage(u, sectors) < 1e-11);

    std::vector<Coupling> couplings;
    for (int k = 0; k + 1 < n; ++k)
      couplings.push_back({k, k + 1, uniform01(rng)});
    CHECK(total_intersector_leakage(parallel_step_unitary(reg, couplings), sectors) <
          1e-11);
  }
}

TEST_CASE("projection of a commuting unitary stays unitary") {
  const SpinRegister reg(4);
  const SectorBasis basis = sector_basis(4, 1.0, 0.0);
  const Matrix u = exchange_unitary(reg, 1, 2, 0.377);
  const BlockDecomposition d = project_to_block(u, basis);
  CHECK(d.leakage_norm < 1e-12);
  CHECK(d.residual_unitarity < 1e-11);
}
