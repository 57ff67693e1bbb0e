#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

// Dense spin-1/2 machinery: site operators, Heisenberg exchange couplings and
// the exchange-step unitaries they generate.
//
// Conventions used throughout:
//   * site 0 is the most significant bit of the computational-basis index,
//   * |up> maps to bit value 0, so the all-up state is index 0,
//   * S = sigma/2 (eigenvalues +-1/2),
//   * a step of dimensionless duration tau applies exp(i*2*pi*tau*S_i.S_j),
//     so tau = 1/2 is a SWAP of sites i and j up to a global phase and
//     tau -> tau + 1 changes the step by a global phase only.

namespace exq {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

struct SpinRegister {
  int sites = 0;

  explicit SpinRegister(int n);
  Eigen::Index dim() const { return Eigen::Index{1} << sites; }
  // bit mask of `site` within a basis index
  Eigen::Index mask(int site) const;
};

struct SpinComponents {
  Matrix sx, sy, sz;
};

// Embedded S_x, S_y, S_z for one site (identity on the rest).
SpinComponents spin_operators(const SpinRegister& reg, int site);

Matrix total_sz(const SpinRegister& reg);
Matrix total_s_squared(const SpinRegister& reg);

// Permutation matrix exchanging the states of sites i and j.
Matrix swap_permutation(const SpinRegister& reg, int i, int j);

// S_i . S_j, identity-extended. Eigenvalues 1/4 (triplet) and -3/4 (singlet).
Matrix exchange_hamiltonian(const SpinRegister& reg, int i, int j);

// exp(i*2*pi*tau*S_i.S_j), evaluated in closed form through the pair SWAP.
Matrix exchange_unitary(const SpinRegister& reg, int i, int j, double tau);

struct Coupling {
  int i = 0;
  int j = 0;
  double tau = 0.0;
};

// exp(i*2*pi*sum_p tau_p S_i(p).S_j(p)); couplings may share sites but a pair
// may appear at most once per step.
Matrix parallel_step_unitary(const SpinRegister& reg,
                             const std::vector<Coupling>& couplings);

// exp(i*scale*H) by spectral decomposition of a hermitian H.
Matrix matrix_exp_hermitian(const Matrix& h, double scale,
                            double hermiticity_tol = 1e-10);

double max_abs(const Matrix& a);
bool is_unitary(const Matrix& u, double tol = 1e-12);
bool is_hermitian(const Matrix& h, double tol = 1e-12);

// Phase factor e^{i phi} aligning v to u on the largest-magnitude entry of v.
Complex alignment_phase(const Matrix& u, const Matrix& v);

// Global-phase-insensitive entrywise distance max|U - e^{i phi} V|, with the
// phase chosen by alignment_phase.
double phase_aligned_distance(const Matrix& u, const Matrix& v);

}  // namespace exq
