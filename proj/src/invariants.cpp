#include "exq/invariants.hpp"

#include "exq/optimize.hpp"
#include "exq/rng.hpp"

#include <cmath>
#include <numbers>

namespace exq {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr Complex kI{0.0, 1.0};

Matrix4cd pauli_pair(int axis) {
  const Matrix2cd p[3] = {pauli_x(), pauli_y(), pauli_z()};
  return kron2(p[axis], p[axis]);
}

// 2x2 unitary exp(i(a0 I + v.sigma))
Matrix2cd exp_su2(double a0, const Eigen::Vector3d& v) {
  const double n = v.norm();
  Matrix2cd out = std::cos(n) * Matrix2cd::Identity();
  if (n > 1e-300) {
    const Complex s = kI * (std::sin(n) / n);
    out += s * (v.x() * pauli_x() + v.y() * pauli_y() + v.z() * pauli_z());
  }
  return std::exp(kI * a0) * out;
}

double fro_phase_dist2(const Matrix4cd& u, const Matrix4cd& v) {
  return u.squaredNorm() + v.squaredNorm() - 2.0 * std::abs((v.adjoint() * u).trace());
}

}  // namespace

Matrix4cd magic_basis() {
  Matrix4cd q;
  const double s = std::sqrt(0.5);
  q << Complex{s, 0}, Complex{0, 0}, Complex{0, 0}, Complex{0, s},
       Complex{0, 0}, Complex{0, s}, Complex{s, 0}, Complex{0, 0},
       Complex{0, 0}, Complex{0, s}, Complex{-s, 0}, Complex{0, 0},
       Complex{s, 0}, Complex{0, 0}, Complex{0, 0}, Complex{0, -s};
  return q;
}

InvariantPair makhlin_invariants(const Matrix4cd& u, double unitarity_tol) {
  if (!is_unitary(u, unitarity_tol))
    throw std::domain_error("makhlin_invariants: input not unitary");
  static const Matrix4cd q = magic_basis();
  const Matrix4cd m_magic = q.adjoint() * u * q;
  const Matrix4cd m = m_magic.transpose() * m_magic;
  const Complex tr = m.trace();
  const Complex tr2 = (m * m).trace();
  const Complex det = u.determinant();
  InvariantPair inv;
  inv.m1 = tr * tr / (16.0 * det);
  inv.m2 = std::real((tr * tr - tr2) / (4.0 * det));
  return inv;
}

double invariant_distance(const InvariantPair& a, const InvariantPair& b) {
  return std::norm(a.m1 - b.m1) + (a.m2 - b.m2) * (a.m2 - b.m2);
}

EquivalenceResult locally_equivalent(const Matrix4cd& u, const Matrix4cd& v,
                                     double tol) {
  const double d = invariant_distance(makhlin_invariants(u), makhlin_invariants(v));
  return EquivalenceResult{d < tol, d};
}

Matrix4cd canonical_gate(const Eigen::Vector3d& c) {
  Matrix gen = c.x() * pauli_pair(0) + c.y() * pauli_pair(1) + c.z() * pauli_pair(2);
  return matrix_exp_hermitian(gen, 1.0);
}

KakDecomposition canonical_decomposition(const Matrix4cd& u) {
  if (!is_unitary(u, 1e-8))
    throw std::domain_error("canonical_decomposition: input not unitary");
  static const Matrix4cd q = magic_basis();

  // special-unitary normalization via a principal fourth root
  const Complex det = u.determinant();
  Complex phase = std::exp(kI * (std::arg(det) / 4.0));
  const Matrix4cd su = u / phase;

  const Matrix4cd mm = q.adjoint() * su * q;
  const Matrix4cd s = mm.transpose() * mm;  // complex symmetric unitary

  // joint orthogonal eigenbasis of Re(S), Im(S)
  const Eigen::Matrix4d sr = s.real(), si = s.imag();
  Eigen::Matrix4d v;
  bool ok = false;
  for (int attempt = 0; attempt < 24 && !ok; ++attempt) {
    const double t = 2.39996322972865332 * attempt;  // golden-angle sweep
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(std::cos(t) * sr +
                                                      std::sin(t) * si);
    v = es.eigenvectors();
    const Matrix4cd d = v.transpose() * s * v;
    double off = 0.0;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        if (a != b) off = std::max(off, std::abs(d(a, b)));
    ok = off < 1e-10;
  }
  if (!ok)
    throw std::runtime_error("canonical_decomposition: joint diagonalization failed");
  if (v.determinant() < 0) v.col(0) = -v.col(0);

  const Matrix4cd d = v.transpose() * s * v;
  Eigen::Vector4d theta;
  for (int k = 0; k < 4; ++k) theta(k) = 0.5 * std::arg(d(k, k));

  // det(S)=1 fixes sum(theta) to a multiple of pi; move it to exactly zero
  int guard = 0;
  while (std::abs(theta.sum()) > 0.5 * kPi && guard++ < 8) {
    int k = 0;
    if (theta.sum() > 0)
      theta.maxCoeff(&k), theta(k) -= kPi;
    else
      theta.minCoeff(&k), theta(k) += kPi;
  }

  Vector ph(4), phn(4);
  for (int k = 0; k < 4; ++k) {
    ph(k) = std::exp(kI * theta(k));
    phn(k) = std::exp(-kI * theta(k));
  }
  const Matrix4cd vc = v.cast<Complex>();
  const Matrix4cd kmat = mm * vc * phn.asDiagonal() * vc.transpose();

  KakDecomposition out;
  out.phase = phase;
  out.k1 = q * (kmat * vc) * q.adjoint();
  out.k2 = q * vc.transpose() * q.adjoint();
  out.c = Eigen::Vector3d(0.5 * (theta(0) + theta(1)), 0.5 * (theta(1) + theta(3)),
                          0.5 * (theta(0) + theta(3)));

  // canonicalize c into the Weyl chamber, updating the local factors
  auto shift_down = [&out](int k) {  // c_k -= pi/2
    out.c(k) -= 0.5 * kPi;
    out.k2 = pauli_pair(k) * out.k2;
    out.phase *= kI;
  };
  auto shift_up = [&out](int k) {
    out.c(k) += 0.5 * kPi;
    out.k2 = pauli_pair(k) * out.k2;
    out.phase *= -kI;
  };
  auto conjugate_move = [&out](const Matrix4cd& g, const Eigen::Vector3d& cnew) {
    out.k1 = out.k1 * g.adjoint();
    out.k2 = g * out.k2;
    out.c = cnew;
  };
  const Matrix2cd sgate = (Matrix2cd() << 1, 0, 0, kI).finished();
  const Matrix4cd swap_xy = kron2(sgate, sgate);
  const Matrix4cd swap_yz = kron2(rx_gate(0.5 * kPi), rx_gate(0.5 * kPi));
  const Matrix4cd flip_xy = kron2(pauli_z(), Matrix2cd::Identity());
  const Matrix4cd flip_xz = kron2(pauli_y(), Matrix2cd::Identity());

  for (int pass = 0; pass < 40; ++pass) {
    bool changed = false;
    for (int k = 0; k < 3; ++k) {
      while (out.c(k) >= 0.5 * kPi - 1e-14) shift_down(k), changed = true;
      while (out.c(k) < -1e-14) shift_up(k), changed = true;
      if (out.c(k) < 0) out.c(k) = 0;
    }
    if (out.c(0) < out.c(1)) {
      conjugate_move(swap_xy, {out.c(1), out.c(0), out.c(2)});
      changed = true;
    }
    if (out.c(1) < out.c(2)) {
      conjugate_move(swap_yz, {out.c(0), out.c(2), out.c(1)});
      changed = true;
    }
    if (out.c(0) < out.c(1)) {
      conjugate_move(swap_xy, {out.c(1), out.c(0), out.c(2)});
      changed = true;
    }
    if (out.c(0) + out.c(1) > 0.5 * kPi + 1e-14) {
      conjugate_move(flip_xy, {-out.c(0), -out.c(1), out.c(2)});
      shift_up(0);
      shift_up(1);
      changed = true;
      continue;
    }
    if (out.c(2) < 1e-11 && out.c(0) > 0.25 * kPi + 1e-12) {
      conjugate_move(flip_xz, {-out.c(0), out.c(1), -out.c(2)});
      shift_up(0);
      if (out.c(2) < 0) out.c(2) = 0;
      changed = true;
      continue;
    }
    if (!changed) break;
  }
  return out;
}

std::pair<Matrix2cd, Matrix2cd> factor_local(const Matrix4cd& k) {
  // Van Loan rearrangement: R(2*i1+j1, 2*i2+j2) = K(2*i1+i2, 2*j1+j2)
  Matrix4cd r;
  for (int i1 = 0; i1 < 2; ++i1)
    for (int j1 = 0; j1 < 2; ++j1)
      for (int i2 = 0; i2 < 2; ++i2)
        for (int j2 = 0; j2 < 2; ++j2)
          r(2 * i1 + j1, 2 * i2 + j2) = k(2 * i1 + i2, 2 * j1 + j2);

  Eigen::JacobiSVD<Matrix4cd> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double scale = std::sqrt(svd.singularValues()(0));
  const Vector va = scale * svd.matrixU().col(0);
  const Vector vb = scale * svd.matrixV().col(0).conjugate();
  Matrix2cd a, b;
  a << va(0), va(1), va(2), va(3);
  b << vb(0), vb(1), vb(2), vb(3);
  a = polar_unitary(a);
  b = polar_unitary(b);
  a *= alignment_phase(k, kron2(a, b));
  return {a, b};
}

LocalCorrections extract_local_corrections(const Matrix4cd& achieved,
                                           const Matrix4cd& target) {
  const EquivalenceResult eq = locally_equivalent(achieved, target, 1e-8);
  if (!eq.equivalent)
    throw NoLocalEquivalence("gates are not locally equivalent (invariant distance " +
                             std::to_string(eq.distance) + ")");

  const KakDecomposition da = canonical_decomposition(achieved);
  const KakDecomposition dt = canonical_decomposition(target);

  LocalCorrections out;
  std::tie(out.a1, out.a2) = factor_local(dt.k1 * da.k1.adjoint());
  std::tie(out.b1, out.b2) = factor_local(da.k2.adjoint() * dt.k2);
  auto residual = [&](const LocalCorrections& c) {
    return phase_aligned_distance(kron2(c.a1, c.a2) * achieved * kron2(c.b1, c.b2),
                                  target);
  };
  out.residual = residual(out);

  if (out.residual > 1e-11) {
    // 16-parameter polish of the corrections around the canonical seed
    const LocalCorrections seed = out;
    auto objective = [&](const Eigen::VectorXd& p) {
      LocalCorrections c = seed;
      c.a1 = exp_su2(p(0), {p(1), p(2), p(3)}) * seed.a1;
      c.a2 = exp_su2(p(4), {p(5), p(6), p(7)}) * seed.a2;
      c.b1 = seed.b1 * exp_su2(p(8), {p(9), p(10), p(11)});
      c.b2 = seed.b2 * exp_su2(p(12), {p(13), p(14), p(15)});
      return fro_phase_dist2(kron2(c.a1, c.a2) * achieved * kron2(c.b1, c.b2),
                             target);
    };
    NelderMeadOptions nm;
    nm.max_evaluations = 8000;
    nm.initial_step = 0.02;
    const MinimizeResult r =
        minimize_nelder_mead(objective, Eigen::VectorXd::Zero(16), nm);
    LocalCorrections polished = seed;
    polished.a1 = exp_su2(r.x(0), {r.x(1), r.x(2), r.x(3)}) * seed.a1;
    polished.a2 = exp_su2(r.x(4), {r.x(5), r.x(6), r.x(7)}) * seed.a2;
    polished.b1 = seed.b1 * exp_su2(r.x(8), {r.x(9), r.x(10), r.x(11)});
    polished.b2 = seed.b2 * exp_su2(r.x(12), {r.x(13), r.x(14), r.x(15)});
    polished.residual = residual(polished);
    if (polished.residual < out.residual) out = polished;
  }
  return out;
}

Matrix4cd kron2(const Matrix2cd& a, const Matrix2cd& b) {
  Matrix4cd out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return out;
}

Matrix4cd cnot_gate() {
  Matrix4cd g = Matrix4cd::Identity();
  g(2, 2) = g(3, 3) = 0;
  g(2, 3) = g(3, 2) = 1;
  return g;
}

Matrix4cd cz_gate() {
  Matrix4cd g = Matrix4cd::Identity();
  g(3, 3) = -1;
  return g;
}

Matrix4cd swap_gate() {
  Matrix4cd g = Matrix4cd::Identity();
  g(1, 1) = g(2, 2) = 0;
  g(1, 2) = g(2, 1) = 1;
  return g;
}

Matrix2cd pauli_x() { return (Matrix2cd() << 0, 1, 1, 0).finished(); }
Matrix2cd pauli_y() { return (Matrix2cd() << 0, -kI, kI, 0).finished(); }
Matrix2cd pauli_z() { return (Matrix2cd() << 1, 0, 0, -1).finished(); }

Matrix2cd hadamard_gate() {
  const double s = std::sqrt(0.5);
  return (Matrix2cd() << s, s, s, -s).finished();
}

Matrix2cd rx_gate(double theta) {
  const double c = std::cos(0.5 * theta), s = std::sin(0.5 * theta);
  return (Matrix2cd() << c, -kI * s, -kI * s, c).finished();
}

Matrix2cd ry_gate(double theta) {
  const double c = std::cos(0.5 * theta), s = std::sin(0.5 * theta);
  return (Matrix2cd() << c, -s, s, c).finished();
}

Matrix2cd rz_gate(double theta) {
  return (Matrix2cd() << std::exp(-kI * (0.5 * theta)), 0, 0,
          std::exp(kI * (0.5 * theta)))
      .finished();
}

Matrix2cd haar_random_unitary2(std::mt19937_64& rng) {
  Eigen::Vector4d q;
  for (int k = 0; k < 4; ++k) q(k) = normal01(rng);
  q.normalize();
  Matrix2cd u;
  u << Complex{q(0), q(1)}, Complex{q(2), q(3)},
       Complex{-q(2), q(3)}, Complex{q(0), -q(1)};
  return std::exp(kI * (2.0 * kPi * uniform01(rng))) * u;
}

Matrix polar_unitary(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

}  // namespace exq
