#include "exq/spin.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

namespace exq {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr Complex kI{0.0, 1.0};

void check_site(const SpinRegister& reg, int site) {
  if (site < 0 || site >= reg.sites)
    throw std::out_of_range("site index " + std::to_string(site) +
                            " out of range for " + std::to_string(reg.sites) +
                            " sites");
}

void check_pair(const SpinRegister& reg, int i, int j) {
  check_site(reg, i);
  check_site(reg, j);
  if (i == j)
    throw std::invalid_argument("exchange coupling needs two distinct sites, got (" +
                                std::to_string(i) + "," + std::to_string(j) + ")");
}

}  // namespace

SpinRegister::SpinRegister(int n) : sites(n) {
  if (n < 1 || n > 12)
    throw std::invalid_argument("spin register supports 1..12 sites, got " +
                                std::to_string(n));
}

Eigen::Index SpinRegister::mask(int site) const {
  return Eigen::Index{1} << (sites - 1 - site);
}

SpinComponents spin_operators(const SpinRegister& reg, int site) {
  check_site(reg, site);
  const Eigen::Index d = reg.dim();
  const Eigen::Index m = reg.mask(site);
  SpinComponents ops{Matrix::Zero(d, d), Matrix::Zero(d, d), Matrix::Zero(d, d)};
  for (Eigen::Index b = 0; b < d; ++b) {
    const bool down = (b & m) != 0;
    ops.sz(b, b) = down ? -0.5 : 0.5;
    const Eigen::Index flipped = b ^ m;
    ops.sx(flipped, b) = 0.5;
    // Sy|up> = +i/2 |down>, Sy|down> = -i/2 |up>
    ops.sy(flipped, b) = down ? -0.5 * kI : 0.5 * kI;
  }
  return ops;
}

Matrix total_sz(const SpinRegister& reg) {
  const Eigen::Index d = reg.dim();
  Matrix out = Matrix::Zero(d, d);
  for (Eigen::Index b = 0; b < d; ++b) {
    const int ups = reg.sites - __builtin_popcountll(static_cast<unsigned long long>(b));
    out(b, b) = 0.5 * ups - 0.5 * (reg.sites - ups);
  }
  return out;
}

Matrix total_s_squared(const SpinRegister& reg) {
  // S^2 = (3n/4 - n(n-1)/4) I + sum_{i<j} SWAP_ij
  const Eigen::Index d = reg.dim();
  const int n = reg.sites;
  const double shift = 0.75 * n - 0.25 * n * (n - 1);
  Matrix out = shift * Matrix::Identity(d, d);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) out += swap_permutation(reg, i, j);
  return out;
}

Matrix swap_permutation(const SpinRegister& reg, int i, int j) {
  check_pair(reg, i, j);
  const Eigen::Index d = reg.dim();
  const Eigen::Index mi = reg.mask(i), mj = reg.mask(j);
  Matrix out = Matrix::Zero(d, d);
  for (Eigen::Index b = 0; b < d; ++b) {
    const bool bi = (b & mi) != 0, bj = (b & mj) != 0;
    const Eigen::Index target = (bi == bj) ? b : (b ^ mi ^ mj);
    out(target, b) = 1.0;
  }
  return out;
}

Matrix exchange_hamiltonian(const SpinRegister& reg, int i, int j) {
  // S_i . S_j = SWAP_ij/2 - I/4
  Matrix h = 0.5 * swap_permutation(reg, i, j);
  h.diagonal().array() -= 0.25;
  return h;
}

Matrix exchange_unitary(const SpinRegister& reg, int i, int j, double tau) {
  if (!std::isfinite(tau))
    throw std::domain_error("exchange duration must be finite");
  // exp(i 2pi tau (SWAP/2 - 1/4)) = e^{-i pi tau/2} (cos(pi tau) I + i sin(pi tau) SWAP)
  const Complex phase = std::exp(-kI * (kPi * tau / 2.0));
  Matrix u = (phase * kI * std::sin(kPi * tau)) * swap_permutation(reg, i, j);
  u.diagonal().array() += phase * std::cos(kPi * tau);
  return u;
}

Matrix parallel_step_unitary(const SpinRegister& reg,
                             const std::vector<Coupling>& couplings) {
  const Eigen::Index d = reg.dim();
  std::set<std::pair<int, int>> seen;
  Matrix gen = Matrix::Zero(d, d);
  for (const Coupling& c : couplings) {
    check_pair(reg, c.i, c.j);
    if (!std::isfinite(c.tau))
      throw std::domain_error("exchange duration must be finite");
    const auto key = std::minmax(c.i, c.j);
    if (!seen.insert(key).second)
      throw std::invalid_argument("duplicate pair (" + std::to_string(key.first) +
                                  "," + std::to_string(key.second) +
                                  ") in parallel step");
    gen += c.tau * exchange_hamiltonian(reg, c.i, c.j);
  }
  if (couplings.empty()) return Matrix::Identity(d, d);
  if (couplings.size() == 1)
    return exchange_unitary(reg, couplings[0].i, couplings[0].j, couplings[0].tau);
  return matrix_exp_hermitian(gen, 2.0 * kPi);
}

Matrix matrix_exp_hermitian(const Matrix& h, double scale, double hermiticity_tol) {
  if (h.rows() != h.cols()) throw std::domain_error("matrix must be square");
  if (!is_hermitian(h, hermiticity_tol))
    throw std::domain_error("matrix exponential input is not hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (h + h.adjoint()));
  const Eigen::VectorXd& ev = es.eigenvalues();
  Vector phases(ev.size());
  for (Eigen::Index k = 0; k < ev.size(); ++k)
    phases(k) = std::exp(kI * (scale * ev(k)));
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

double max_abs(const Matrix& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

bool is_unitary(const Matrix& u, double tol) {
  if (u.rows() != u.cols()) return false;
  return max_abs(u.adjoint() * u - Matrix::Identity(u.rows(), u.cols())) < tol;
}

bool is_hermitian(const Matrix& h, double tol) {
  if (h.rows() != h.cols()) return false;
  return max_abs(h - h.adjoint()) < tol;
}

Complex alignment_phase(const Matrix& u, const Matrix& v) {
  if (u.rows() != v.rows() || u.cols() != v.cols())
    throw std::domain_error("alignment_phase: shape mismatch");
  Eigen::Index r = 0, c = 0;
  v.cwiseAbs().maxCoeff(&r, &c);
  if (std::abs(v(r, c)) < 1e-300 || std::abs(u(r, c)) < 1e-14) return Complex{1.0, 0.0};
  const Complex ratio = u(r, c) / v(r, c);
  return ratio / std::abs(ratio);
}

double phase_aligned_distance(const Matrix& u, const Matrix& v) {
  return max_abs(u - alignment_phase(u, v) * v);
}

}  // namespace exq
