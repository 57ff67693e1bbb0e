#include "exq/sectors.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace exq {

namespace {

int to_twice(double x, const char* what) {
  const double t = 2.0 * x;
  const double r = std::round(t);
  if (std::abs(t - r) > 1e-9)
    throw std::domain_error(std::string(what) + " must be integer or half-integer");
  return static_cast<int>(r);
}

long long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long r = 1;
  for (int t = 1; t <= k; ++t) r = r * (n - k + t) / t;
  return r;
}

long long multiplicity(int n, int two_s) {
  if (two_s < 0 || two_s > n || (n - two_s) % 2 != 0) return 0;
  const int k = (n - two_s) / 2;
  return binomial(n, k) - binomial(n, k - 1);
}

// indices of basis states with the given number of down spins, ascending
std::vector<Eigen::Index> sz_block_indices(const SpinRegister& reg, int n_down) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index b = 0; b < reg.dim(); ++b)
    if (__builtin_popcountll(static_cast<unsigned long long>(b)) == n_down)
      idx.push_back(b);
  return idx;
}

// S^2 restricted to a fixed-Sz block, as a real symmetric matrix
Eigen::MatrixXd s_squared_in_block(const SpinRegister& reg,
                                   const std::vector<Eigen::Index>& idx) {
  const int n = reg.sites;
  const Eigen::Index d = static_cast<Eigen::Index>(idx.size());
  std::vector<Eigen::Index> pos(static_cast<size_t>(reg.dim()), -1);
  for (Eigen::Index k = 0; k < d; ++k) pos[static_cast<size_t>(idx[k])] = k;

  Eigen::MatrixXd m = (0.75 * n - 0.25 * n * (n - 1)) *
                      Eigen::MatrixXd::Identity(d, d);
  for (int i = 0; i < n; ++i) {
    const Eigen::Index mi = reg.mask(i);
    for (int j = i + 1; j < n; ++j) {
      const Eigen::Index mj = reg.mask(j);
      for (Eigen::Index k = 0; k < d; ++k) {
        const Eigen::Index b = idx[static_cast<size_t>(k)];
        const bool bi = (b & mi) != 0, bj = (b & mj) != 0;
        const Eigen::Index target = (bi == bj) ? b : (b ^ mi ^ mj);
        m(pos[static_cast<size_t>(target)], k) += 1.0;
      }
    }
  }
  return m;
}

}  // namespace

long long sector_dimension(int n, double s) {
  if (n < 1 || n > 12) throw std::domain_error("sector_dimension: n out of range");
  const int two_s = to_twice(s, "S");
  if (two_s < 0 || two_s > n)
    throw std::domain_error("sector_dimension: need 0 <= S <= n/2");
  if ((n - two_s) % 2 != 0)
    throw std::domain_error("sector_dimension: S inconsistent with site parity");
  return multiplicity(n, two_s);
}

SectorBasis sector_basis(int n, double s, double sz) {
  const SpinRegister reg(n);
  const int two_s = to_twice(s, "S");
  const int two_sz = to_twice(sz, "Sz");
  if (two_s < 0 || two_s > n || (n - two_s) % 2 != 0)
    throw std::domain_error("sector_basis: invalid S for this register");
  if (std::abs(two_sz) > two_s || (two_s - two_sz) % 2 != 0)
    throw std::domain_error("sector_basis: invalid Sz for this S");

  const int n_down = (n - two_sz) / 2;
  const auto idx = sz_block_indices(reg, n_down);
  const Eigen::Index bd = static_cast<Eigen::Index>(idx.size());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s_squared_in_block(reg, idx));
  const double target = 0.25 * two_s * (two_s + 2);

  // projector onto the S eigenspace; unique regardless of eigenvector choices
  Eigen::MatrixXd proj = Eigen::MatrixXd::Zero(bd, bd);
  Eigen::Index count = 0;
  for (Eigen::Index k = 0; k < bd; ++k) {
    if (std::abs(es.eigenvalues()(k) - target) < 1e-9) {
      proj += es.eigenvectors().col(k) * es.eigenvectors().col(k).transpose();
      ++count;
    }
  }
  const long long want = multiplicity(n, two_s);
  if (count != want)
    throw std::runtime_error("sector_basis: eigenvalue multiplicity mismatch");

  // canonical Gram-Schmidt against lexicographic computational-basis seeds
  Eigen::MatrixXd cols(bd, want);
  Eigen::Index have = 0;
  for (Eigen::Index k = 0; k < bd && have < want; ++k) {
    Eigen::VectorXd w = proj.col(k);
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index m = 0; m < have; ++m)
        w -= cols.col(m).dot(w) * cols.col(m);
    const double nrm = w.norm();
    if (nrm > 1e-6) {
      w /= nrm;
      for (Eigen::Index r = 0; r < bd; ++r) {
        if (std::abs(w(r)) > 1e-8) {
          if (w(r) < 0) w = -w;
          break;
        }
      }
      cols.col(have++) = w;
    }
  }
  if (have != want)
    throw std::runtime_error("sector_basis: seed span deficiency");

  SectorBasis basis;
  basis.sites = n;
  basis.two_s = two_s;
  basis.two_sz = two_sz;
  basis.columns = Matrix::Zero(reg.dim(), want);
  for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(idx.size()); ++k)
    basis.columns.row(idx[static_cast<size_t>(k)]) = cols.row(k);
  return basis;
}

std::vector<SectorBasis> all_sector_bases(int n) {
  std::vector<SectorBasis> out;
  for (int two_sz = -n; two_sz <= n; two_sz += 2) {
    for (int two_s = std::abs(two_sz); two_s <= n; two_s += 2) {
      if ((n - two_s) % 2 != 0) continue;
      if (multiplicity(n, two_s) == 0) continue;
      out.push_back(sector_basis(n, 0.5 * two_s, 0.5 * two_sz));
    }
  }
  return out;
}

BlockDecomposition project_to_block(const Matrix& u, const Matrix& basis_columns) {
  if (u.rows() != u.cols() || u.rows() != basis_columns.rows())
    throw std::domain_error("project_to_block: dimension mismatch");
  BlockDecomposition out;
  const Matrix ub = u * basis_columns;
  out.inside_block = basis_columns.adjoint() * ub;
  out.leakage_norm = (ub - basis_columns * out.inside_block).norm();
  out.residual_unitarity = max_abs(out.inside_block.adjoint() * out.inside_block -
                                   Matrix::Identity(out.inside_block.rows(),
                                                    out.inside_block.cols()));
  return out;
}

BlockDecomposition project_to_block(const Matrix& u, const SectorBasis& basis) {
  return project_to_block(u, basis.columns);
}

double total_intersector_leakage(const Matrix& u,
                                 const std::vector<SectorBasis>& sectors) {
  double sq = 0.0;
  for (const SectorBasis& s : sectors) {
    const BlockDecomposition d = project_to_block(u, s);
    sq += d.leakage_norm * d.leakage_norm;
  }
  return std::sqrt(sq);
}

}  // namespace exq
