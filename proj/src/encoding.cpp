#include "exq/encoding.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace exq {

namespace {

constexpr double kPi = std::numbers::pi;

void check_block(const CodeBlock& b, int n) {
  for (int s : b.sites)
    if (s < 0 || s >= n) throw std::out_of_range("code block site out of range");
  if (b.sites[0] == b.sites[1] || b.sites[0] == b.sites[2] ||
      b.sites[1] == b.sites[2])
    throw std::invalid_argument("code block sites must be distinct");
}

Vector lowered(const Vector& v) {
  const SpinRegister reg(3);
  Matrix minus = Matrix::Zero(reg.dim(), reg.dim());
  for (int s = 0; s < 3; ++s) {
    const SpinComponents ops = spin_operators(reg, s);
    minus += ops.sx - Complex{0.0, 1.0} * ops.sy;
  }
  Vector w = minus * v;
  return w / w.norm();
}

}  // namespace

Vector logical_zero_local() {
  Vector v = Vector::Zero(8);
  v(0b010) = std::sqrt(0.5);   // up down up
  v(0b100) = -std::sqrt(0.5);  // down up up
  return v;
}

Vector logical_one_local() {
  Vector v = Vector::Zero(8);
  v(0b001) = std::sqrt(2.0 / 3.0);   // up up down
  v(0b010) = -std::sqrt(1.0 / 6.0);  // up down up
  v(0b100) = -std::sqrt(1.0 / 6.0);  // down up up
  return v;
}

Vector logical_zero_lowered_local() { return lowered(logical_zero_local()); }
Vector logical_one_lowered_local() { return lowered(logical_one_local()); }

LogicalBasis make_logical_basis(int n, const std::vector<CodeBlock>& blocks) {
  if (n != 3 * static_cast<int>(blocks.size()))
    throw std::invalid_argument("logical basis needs n = 3 * #blocks");
  std::vector<bool> used(static_cast<size_t>(n), false);
  for (const CodeBlock& b : blocks) {
    check_block(b, n);
    for (int s : b.sites) {
      if (used[static_cast<size_t>(s)])
        throw std::invalid_argument("code blocks must be disjoint");
      used[static_cast<size_t>(s)] = true;
    }
  }

  const SpinRegister reg(n);
  const int k = static_cast<int>(blocks.size());
  const Eigen::Index labels = Eigen::Index{1} << k;
  const Vector locals[2] = {logical_zero_local(), logical_one_local()};

  LogicalBasis basis;
  basis.sites = n;
  basis.blocks = blocks;
  basis.vectors = Matrix::Zero(reg.dim(), labels);
  for (Eigen::Index label = 0; label < labels; ++label) {
    for (Eigen::Index b = 0; b < reg.dim(); ++b) {
      Complex amp{1.0, 0.0};
      for (int blk = 0; blk < k && amp != Complex{0.0, 0.0}; ++blk) {
        const int bit = static_cast<int>((label >> (k - 1 - blk)) & 1);
        Eigen::Index local = 0;
        for (int p = 0; p < 3; ++p)
          local = (local << 1) | ((b & reg.mask(blocks[static_cast<size_t>(blk)].sites[static_cast<size_t>(p)])) ? 1 : 0);
        amp *= locals[bit](local);
      }
      basis.vectors(b, label) = amp;
    }
  }
  return basis;
}

LogicalBasis two_qubit_basis() {
  return make_logical_basis(6, {CodeBlock{{0, 1, 2}}, CodeBlock{{3, 4, 5}}});
}

Matrix subsystem_singlet_vectors() {
  const Vector up[2] = {logical_zero_local(), logical_one_local()};
  const Vector down[2] = {logical_zero_lowered_local(), logical_one_lowered_local()};
  Matrix out = Matrix::Zero(64, 4);
  const double inv_sqrt2 = std::sqrt(0.5);
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      Vector v = Vector::Zero(64);
      for (Eigen::Index ia = 0; ia < 8; ++ia)
        for (Eigen::Index ib = 0; ib < 8; ++ib)
          v((ia << 3) | ib) = inv_sqrt2 * (up[a](ia) * down[b](ib) -
                                           down[a](ia) * up[b](ib));
      out.col(2 * a + b) = v;
    }
  }
  return out;
}

BlockDecomposition logical_action(const Matrix& u, const LogicalBasis& basis) {
  return project_to_block(u, basis.vectors);
}

BlochAxis bloch_axis(const CodeBlock& block, int i, int j) {
  check_block(block, 1 << 30);
  int pi = -1, pj = -1;
  for (int p = 0; p < 3; ++p) {
    if (block.sites[static_cast<size_t>(p)] == i) pi = p;
    if (block.sites[static_cast<size_t>(p)] == j) pj = p;
  }
  if (pi < 0 || pj < 0 || pi == pj)
    throw std::domain_error("bloch_axis: pair must be two distinct block sites");

  const SpinRegister reg(3);
  const Matrix h = exchange_hamiltonian(reg, pi, pj);
  Matrix b(8, 2);
  b.col(0) = logical_zero_local();
  b.col(1) = logical_one_local();
  const Matrix l = b.adjoint() * h * b;

  // traceless part c.sigma; exp(i 2pi tau (c.sigma)) rotates about -c/|c|
  // at 4pi|c| per unit tau
  const double cz = 0.5 * std::real(l(0, 0) - l(1, 1));
  const double cx = std::real(l(1, 0));
  const double cy = std::imag(l(1, 0));
  Eigen::Vector3d c(cx, cy, cz);
  const double norm = c.norm();
  if (norm < 1e-12) return BlochAxis{Eigen::Vector3d(0, 0, 1), 0.0};
  return BlochAxis{-c / norm, 4.0 * kPi * norm};
}

std::pair<double, double> measure_singlet_triplet(const Vector& state,
                                                  const CodeBlock& block) {
  const Eigen::Index dim = state.size();
  int n = 0;
  while ((Eigen::Index{1} << n) < dim) ++n;
  if ((Eigen::Index{1} << n) != dim)
    throw std::domain_error("state dimension must be a power of two");
  const SpinRegister reg(n);
  check_block(block, n);
  if (std::abs(state.norm() - 1.0) > 1e-9)
    throw std::domain_error("measure_singlet_triplet: state not normalized");

  const Eigen::Index m1 = reg.mask(block.sites[0]);
  const Eigen::Index m2 = reg.mask(block.sites[1]);
  double p_singlet = 0.0, p_triplet = 0.0;
  for (Eigen::Index b = 0; b < dim; ++b) {
    const bool b1 = (b & m1) != 0, b2 = (b & m2) != 0;
    if (b1 == b2) {
      p_triplet += std::norm(state(b));  // |T+> or |T->
    } else if (!b1) {                    // up-down member of each mixed pair
      const Complex a_ud = state(b);
      const Complex a_du = state(b ^ m1 ^ m2);
      p_singlet += 0.5 * std::norm(a_ud - a_du);
      p_triplet += 0.5 * std::norm(a_ud + a_du);
    }
  }
  return {p_singlet, p_triplet};
}

}  // namespace exq
