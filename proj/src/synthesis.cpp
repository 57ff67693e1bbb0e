#include "exq/synthesis.hpp"

#include "exq/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <set>
#include <stdexcept>
#include <thread>

namespace exq {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr Complex kI{0.0, 1.0};

std::pair<int, int> ordered(int i, int j) { return {std::min(i, j), std::max(i, j)}; }

bool grid_adjacent(int i, int j) {
  const auto pairs = grid_pairs_2x3();
  return std::find(pairs.begin(), pairs.end(), ordered(i, j)) != pairs.end();
}

double mod_unit(double tau) {
  double t = tau - std::floor(tau);
  if (t >= 1.0) t = 0.0;  // guards the floor rounding up at tiny negatives
  return t;
}

}  // namespace

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::Serial: return "serial";
    case Mode::Parallel1D: return "parallel-1d";
    case Mode::Parallel2D: return "parallel-2d";
  }
  return "serial";
}

Mode mode_from_string(const std::string& text) {
  if (text == "serial") return Mode::Serial;
  if (text == "parallel-1d") return Mode::Parallel1D;
  if (text == "parallel-2d") return Mode::Parallel2D;
  throw std::invalid_argument("unknown mode '" + text + "'");
}

void validate_sequence(const PulseSequence& seq) {
  const SpinRegister reg(seq.sites);
  if (seq.mode == Mode::Parallel2D && seq.sites != 6)
    throw std::invalid_argument("parallel-2d layout is the 2x3 grid of 6 spins");
  for (const auto& step : seq.steps) {
    if (seq.mode == Mode::Serial && step.size() != 1)
      throw std::invalid_argument("serial steps hold exactly one coupling");
    std::set<std::pair<int, int>> seen;
    for (const Coupling& c : step) {
      if (c.i < 0 || c.i >= seq.sites || c.j < 0 || c.j >= seq.sites || c.i == c.j)
        throw std::invalid_argument("invalid coupling pair");
      if (!std::isfinite(c.tau))
        throw std::invalid_argument("coupling duration must be finite");
      if (!seen.insert(ordered(c.i, c.j)).second)
        throw std::invalid_argument("duplicate pair within a step");
      if (seq.mode == Mode::Parallel1D && std::abs(c.i - c.j) != 1)
        throw std::invalid_argument("parallel-1d couplings must be line-adjacent");
      if (seq.mode == Mode::Parallel2D && !grid_adjacent(c.i, c.j))
        throw std::invalid_argument("parallel-2d couplings must be grid-adjacent");
    }
  }
}

PulseSequence canonicalized(PulseSequence seq) {
  for (auto& step : seq.steps)
    if (step.size() == 1) step[0].tau = mod_unit(step[0].tau);
  return seq;
}

Matrix sequence_unitary(const PulseSequence& seq) {
  validate_sequence(seq);
  const SpinRegister reg(seq.sites);
  Matrix u = Matrix::Identity(reg.dim(), reg.dim());
  for (const auto& step : seq.steps) u = parallel_step_unitary(reg, step) * u;
  return u;
}

std::vector<std::pair<int, int>> line_pairs(int n) {
  std::vector<std::pair<int, int>> out;
  for (int k = 0; k + 1 < n; ++k) out.push_back({k, k + 1});
  return out;
}

std::vector<std::pair<int, int>> grid_pairs_2x3() {
  // sites 0,1,2 on the top row, 3,4,5 below them
  return {{0, 1}, {1, 2}, {3, 4}, {4, 5}, {0, 3}, {1, 4}, {2, 5}};
}

Pattern pattern_of(const PulseSequence& seq) {
  Pattern out;
  for (const auto& step : seq.steps) {
    StepPattern sp;
    for (const Coupling& c : step) sp.push_back({c.i, c.j});
    out.push_back(sp);
  }
  return out;
}

PulseSequence sequence_from(Mode mode, int sites, const Pattern& pattern,
                            const Eigen::VectorXd& taus) {
  PulseSequence seq;
  seq.mode = mode;
  seq.sites = sites;
  Eigen::Index p = 0;
  for (const StepPattern& sp : pattern) {
    std::vector<Coupling> step;
    for (const auto& pr : sp) {
      if (p >= taus.size())
        throw std::invalid_argument("sequence_from: too few durations");
      step.push_back(Coupling{pr.first, pr.second, taus(p++)});
    }
    seq.steps.push_back(step);
  }
  if (p != taus.size())
    throw std::invalid_argument("sequence_from: too many durations");
  return seq;
}

SynthesisObjective two_qubit_objective(const Matrix4cd& target,
                                       EquivalenceMode equivalence, bool subsystem) {
  SynthesisObjective obj;
  obj.target = target;
  obj.basis = two_qubit_basis();
  obj.include_singlet_sector = subsystem;
  obj.equivalence = equivalence;
  return obj;
}

SynthesisObjective single_qubit_objective(const Matrix2cd& target) {
  SynthesisObjective obj;
  obj.target = target;
  obj.basis = make_logical_basis(3, {CodeBlock{{0, 1, 2}}});
  obj.equivalence = EquivalenceMode::Exact;
  return obj;
}

// --- compiled evaluator ------------------------------------------------------

CompiledObjective::CompiledObjective(const SynthesisObjective& obj,
                                     const Pattern& pattern)
    : pattern_(pattern),
      target_(obj.target),
      equivalence_(obj.equivalence),
      leakage_weight_(obj.leakage_weight) {
  const int n = obj.basis.sites;
  const SpinRegister reg(n);
  logical_dim_ = obj.basis.vectors.cols();
  if (target_.rows() != logical_dim_ || target_.cols() != logical_dim_)
    throw std::invalid_argument("objective target does not match the logical dimension");
  if (!is_unitary(target_, 1e-8))
    throw std::domain_error("objective target must be unitary");
  if (equivalence_ == EquivalenceMode::LocalEquivalence) {
    if (logical_dim_ != 4)
      throw std::invalid_argument("local-equivalence objectives need a two-qubit basis");
    target_invariants_ = makhlin_invariants(target_);
  }
  if (!(leakage_weight_ >= 0.0) || !std::isfinite(leakage_weight_))
    throw std::invalid_argument("leakage weight must be finite and nonnegative");

  // pair ids and parameter layout
  std::vector<std::pair<int, int>> pairs;
  for (const StepPattern& sp : pattern_) {
    std::vector<std::pair<int, int>> step;
    std::set<std::pair<int, int>> in_step;
    for (const auto& pr : sp) {
      if (pr.first < 0 || pr.first >= n || pr.second < 0 || pr.second >= n ||
          pr.first == pr.second)
        throw std::invalid_argument("pattern pair out of range");
      const auto key = ordered(pr.first, pr.second);
      if (!in_step.insert(key).second)
        throw std::invalid_argument("duplicate pair within a pattern step");
      auto it = std::find(pairs.begin(), pairs.end(), key);
      int id = static_cast<int>(it - pairs.begin());
      if (it == pairs.end()) {
        pairs.push_back(key);
        id = static_cast<int>(pairs.size()) - 1;
      }
      step.push_back({id, n_params_++});
    }
    steps_.push_back(step);
  }

  // sector bases holding the code space
  std::vector<std::pair<SectorBasis, Matrix>> sector_sets;
  if (obj.basis.blocks.size() == 1) {
    sector_sets.push_back({sector_basis(n, 0.5, 0.5), obj.basis.vectors});
  } else if (obj.basis.blocks.size() == 2) {
    sector_sets.push_back({sector_basis(n, 1.0, 1.0), obj.basis.vectors});
    if (obj.include_singlet_sector)
      sector_sets.push_back({sector_basis(n, 0.0, 0.0), subsystem_singlet_vectors()});
  } else {
    throw std::invalid_argument("objectives support one or two code blocks");
  }

  for (auto& [sb, logical] : sector_sets) {
    SectorData sd;
    sd.dim = sb.dim();
    sd.c = sb.columns.adjoint() * logical;
    if (max_abs(sd.c.adjoint() * sd.c - Matrix::Identity(logical_dim_, logical_dim_)) > 1e-10)
      throw std::runtime_error("logical vectors do not span the expected sector");
    for (const auto& pr : pairs)
      sd.swaps.push_back(sb.columns.adjoint() *
                         swap_permutation(reg, pr.first, pr.second) * sb.columns);
    sectors_.push_back(std::move(sd));
  }
}

namespace {

// divided difference of exp(i x): (e^{ia}-e^{ib})/(a-b), stable near a = b
Complex exp_divided_difference(double a, double b) {
  const double h = 0.5 * (a - b);
  const double sinc = std::abs(h) < 1e-8 ? 1.0 - h * h / 6.0 : std::sin(h) / h;
  return kI * std::exp(kI * (0.5 * (a + b))) * sinc;
}

struct SectorContext {
  const std::vector<std::vector<std::pair<int, int>>>& steps;
  const Matrix& target;
  const InvariantPair& target_invariants;
  EquivalenceMode equivalence;
  double leakage_weight;
};

// Statically-sized evaluation core; D = sector dimension, M = logical
// dimension. The sector-restricted SWAPs square to the identity, which keeps
// both the step application and its derivative to cos/sin combinations of
// stored products.
template <int D, int M>
double sector_terms_impl(const SectorContext& ctx, const Matrix& c_dyn,
                         const std::vector<Matrix>& swaps_dyn,
                         const Eigen::VectorXd& taus, Eigen::VectorXd* grad,
                         double* leak_sq_out) {
  using MatDD = Eigen::Matrix<Complex, D, D>;
  using MatDM = Eigen::Matrix<Complex, D, M>;
  using MatMD = Eigen::Matrix<Complex, M, D>;
  using MatMM = Eigen::Matrix<Complex, M, M>;
  const Eigen::Index d = c_dyn.rows();
  const Eigen::Index m = c_dyn.cols();
  const int nsteps = static_cast<int>(ctx.steps.size());
  static const Matrix4cd q4 = magic_basis();

  const Eigen::Map<const MatDM> c(c_dyn.data(), d, m);
  std::vector<Eigen::Map<const MatDD>> swaps;
  swaps.reserve(swaps_dyn.size());
  for (const Matrix& w : swaps_dyn) swaps.emplace_back(w.data(), d, d);

  // forward sweep: b_k = (U_k ... U_1) C, phase-free step convention
  std::vector<MatDM, Eigen::aligned_allocator<MatDM>> b(
      static_cast<size_t>(nsteps) + 1);
  std::vector<MatDM, Eigen::aligned_allocator<MatDM>> wb(
      grad ? static_cast<size_t>(nsteps) : 0);
  std::vector<Eigen::SelfAdjointEigenSolver<MatDD>> step_eigs(
      grad ? static_cast<size_t>(nsteps) : 0);
  b[0] = c;
  MatDM scratch(d, m);
  for (int k = 0; k < nsteps; ++k) {
    const auto& step = ctx.steps[static_cast<size_t>(k)];
    const size_t uk = static_cast<size_t>(k);
    if (step.size() == 1) {
      const double t = kPi * taus(step[0].second);
      scratch.noalias() = swaps[static_cast<size_t>(step[0].first)] * b[uk];
      b[uk + 1] = std::cos(t) * b[uk] + (kI * std::sin(t)) * scratch;
      if (grad) wb[uk] = scratch;
    } else {
      MatDD gen = MatDD::Zero(d, d);
      for (const auto& [pid, tid] : step)
        gen += (kPi * taus(tid)) * swaps[static_cast<size_t>(pid)];
      Eigen::SelfAdjointEigenSolver<MatDD> es(gen);
      Eigen::Matrix<Complex, D, 1> phases(d);
      for (Eigen::Index r = 0; r < d; ++r)
        phases(r) = std::exp(kI * es.eigenvalues()(r));
      b[uk + 1].noalias() =
          es.eigenvectors() *
          (phases.asDiagonal() * (es.eigenvectors().adjoint() * b[uk]).eval());
      if (grad) step_eigs[uk] = std::move(es);
    }
  }

  MatMM l;
  l.noalias() = c.adjoint() * b[static_cast<size_t>(nsteps)];
  // residual-matrix form; the naive m - |L|^2 expression cancels
  // catastrophically once the optimizer closes in on a solution
  const double leak_sq = (b[static_cast<size_t>(nsteps)] - c * l).squaredNorm();
  if (leak_sq_out) *leak_sq_out = leak_sq;

  double f = ctx.leakage_weight * leak_sq;

  // adjoint seed: df = 2 Re tr(seed * dL) accumulated over all parameters
  MatMM seed;
  if (ctx.equivalence == EquivalenceMode::Exact) {
    const Eigen::Map<const MatMM> target(ctx.target.data(), m, m);
    const Complex t_overlap = (target.adjoint() * l).trace();
    const Complex phase =
        std::abs(t_overlap) > 1e-300 ? t_overlap / std::abs(t_overlap) : Complex{1, 0};
    const MatMM residual = l - phase * target;
    f += residual.squaredNorm();
    if (grad) seed = residual.adjoint() - ctx.leakage_weight * l.adjoint();
  } else if constexpr (M == 4 || M == Eigen::Dynamic) {
    Eigen::SelfAdjointEigenSolver<MatMM> eig(l.adjoint() * l);
    const Eigen::Matrix<double, M, 1> sigma =
        eig.eigenvalues().cwiseMax(1e-24).cwiseSqrt();
    const MatMM& y = eig.eigenvectors();
    const MatMM pinv = y * sigma.cwiseInverse().asDiagonal() * y.adjoint();
    const MatMM w = l * pinv;  // unitary polar factor
    const MatMM m_magic = q4.adjoint() * w * q4;
    const MatMM mm = m_magic.transpose() * m_magic;
    const Complex c1 = mm.trace();
    const Complex det = w.determinant();
    const Complex m1 = c1 * c1 / (16.0 * det);
    const Complex m2c = (c1 * c1 - (mm * mm).trace()) / (4.0 * det);
    const Complex e1 = m1 - ctx.target_invariants.m1;
    const double e2 = std::real(m2c) - ctx.target_invariants.m2;
    f += std::norm(e1) + e2 * e2;

    if (grad) {
      // z = conj(e1) C1 + e2 C2 with dm_i = tr(C_i dW)
      const MatMM qmq = q4 * m_magic.transpose() * q4.adjoint();
      const MatMM qmmq = q4 * (mm * m_magic.transpose()) * q4.adjoint();
      const MatMM z = std::conj(e1) * ((c1 / (4.0 * det)) * qmq - m1 * w.adjoint()) +
                      e2 * ((c1 * qmq - qmmq) / det - m2c * w.adjoint());
      // pull dW = (dL - W dP) P^{-1} back onto dL through the Sylvester solve
      const MatMM e = y.adjoint() * (pinv * z * w) * y;
      MatMM g(m, m);
      for (Eigen::Index r = 0; r < m; ++r)
        for (Eigen::Index cc = 0; cc < m; ++cc)
          g(r, cc) = e(r, cc) / std::max(sigma(r) + sigma(cc), 1e-12);
      seed = pinv * z - y * (g + g.adjoint()) * y.adjoint() * l.adjoint() -
             ctx.leakage_weight * l.adjoint();
    }
  } else {
    throw std::logic_error("invariant objective needs a two-qubit block");
  }

  if (!grad) return f;

  // backward sweep: a_k = C^dag (U_N ... U_{k+1})
  MatMD a = c.adjoint();
  MatMD sa(m, d), aw(m, d);
  MatDM dstep(d, m);
  for (int k = nsteps - 1; k >= 0; --k) {
    const auto& step = ctx.steps[static_cast<size_t>(k)];
    const size_t uk = static_cast<size_t>(k);
    if (step.size() == 1) {
      const double t = kPi * taus(step[0].second);
      // d(step)/dtau applied forward: W b_{k+1} = cos(t) (W b_k) + i sin(t) b_k
      sa.noalias() = seed * a;
      dstep = std::cos(t) * wb[uk] + (kI * std::sin(t)) * b[uk];
      const Complex val = (sa * dstep).trace();
      (*grad)(step[0].second) += 2.0 * std::real(kI * kPi * val);
      aw.noalias() = a * swaps[static_cast<size_t>(step[0].first)];
      a = std::cos(t) * a + (kI * std::sin(t)) * aw;
    } else {
      const auto& es = step_eigs[uk];
      const MatMD av = a * es.eigenvectors();
      const MatDM vb = es.eigenvectors().adjoint() * b[uk];
      const MatDD r = vb * (seed * av);  // d x d
      for (const auto& [pid, tid] : step) {
        const MatDD vwv = es.eigenvectors().adjoint() *
                          (kPi * swaps[static_cast<size_t>(pid)]) * es.eigenvectors();
        Complex val{0.0, 0.0};
        for (Eigen::Index rr = 0; rr < d; ++rr)
          for (Eigen::Index cc = 0; cc < d; ++cc)
            val += r(cc, rr) * vwv(rr, cc) *
                   exp_divided_difference(es.eigenvalues()(rr), es.eigenvalues()(cc));
        (*grad)(tid) += 2.0 * std::real(val);
      }
      Eigen::Matrix<Complex, D, 1> phases(d);
      for (Eigen::Index rr = 0; rr < d; ++rr)
        phases(rr) = std::exp(kI * es.eigenvalues()(rr));
      a = (av * phases.asDiagonal()) * es.eigenvectors().adjoint();
    }
  }
  return f;
}

}  // namespace

double CompiledObjective::sector_terms(const SectorData& s,
                                       const Eigen::VectorXd& taus,
                                       Eigen::VectorXd* grad,
                                       double* leak_sq_out) const {
  const SectorContext ctx{steps_, target_, target_invariants_, equivalence_,
                          leakage_weight_};
  const Eigen::Index d = s.dim;
  const Eigen::Index m = logical_dim_;
  if (d == 9 && m == 4)
    return sector_terms_impl<9, 4>(ctx, s.c, s.swaps, taus, grad, leak_sq_out);
  if (d == 5 && m == 4)
    return sector_terms_impl<5, 4>(ctx, s.c, s.swaps, taus, grad, leak_sq_out);
  if (d == 2 && m == 2)
    return sector_terms_impl<2, 2>(ctx, s.c, s.swaps, taus, grad, leak_sq_out);
  return sector_terms_impl<Eigen::Dynamic, Eigen::Dynamic>(ctx, s.c, s.swaps, taus,
                                                           grad, leak_sq_out);
}

double CompiledObjective::value(const Eigen::VectorXd& taus, double* leakage) const {
  if (taus.size() != n_params_)
    throw std::invalid_argument("objective: wrong number of durations");
  double f = 0.0, leak_total = 0.0;
  for (const SectorData& s : sectors_) {
    double leak_sq = 0.0;
    f += sector_terms(s, taus, nullptr, &leak_sq);
    leak_total += leak_sq;
  }
  if (leakage) *leakage = std::sqrt(leak_total);
  return f;
}

double CompiledObjective::value_and_gradient(const Eigen::VectorXd& taus,
                                             Eigen::VectorXd& grad,
                                             double* leakage) const {
  if (taus.size() != n_params_)
    throw std::invalid_argument("objective: wrong number of durations");
  grad = Eigen::VectorXd::Zero(n_params_);
  double f = 0.0, leak_total = 0.0;
  for (const SectorData& s : sectors_) {
    double leak_sq = 0.0;
    f += sector_terms(s, taus, &grad, &leak_sq);
    leak_total += leak_sq;
  }
  if (leakage) *leakage = std::sqrt(leak_total);
  return f;
}

Matrix CompiledObjective::logical_block(const Eigen::VectorXd& taus) const {
  if (taus.size() != n_params_)
    throw std::invalid_argument("objective: wrong number of durations");
  const SectorData& s = sectors_.front();
  Matrix b = s.c;
  for (size_t k = 0; k < steps_.size(); ++k) {
    const auto& step = steps_[k];
    if (step.size() == 1) {
      const Matrix& w = s.swaps[static_cast<size_t>(step[0].first)];
      const double t = kPi * taus(step[0].second);
      b = std::cos(t) * b + kI * std::sin(t) * (w * b);
    } else {
      Matrix gen = Matrix::Zero(s.dim, s.dim);
      for (const auto& [pid, tid] : step)
        gen += (kPi * taus(tid)) * s.swaps[static_cast<size_t>(pid)];
      b = matrix_exp_hermitian(gen, 1.0) * b;
    }
  }
  return s.c.adjoint() * b;
}

double evaluate_objective(const PulseSequence& seq, const SynthesisObjective& obj,
                          double* leakage) {
  validate_sequence(seq);
  const CompiledObjective comp(obj, pattern_of(seq));
  Eigen::VectorXd taus(comp.parameter_count());
  Eigen::Index p = 0;
  for (const auto& step : seq.steps)
    for (const Coupling& c : step) taus(p++) = c.tau;
  return comp.value(taus, leakage);
}

Eigen::VectorXd analytic_gradient(const PulseSequence& seq,
                                  const SynthesisObjective& obj) {
  validate_sequence(seq);
  const CompiledObjective comp(obj, pattern_of(seq));
  Eigen::VectorXd taus(comp.parameter_count());
  Eigen::Index p = 0;
  for (const auto& step : seq.steps)
    for (const Coupling& c : step) taus(p++) = c.tau;
  Eigen::VectorXd grad;
  comp.value_and_gradient(taus, grad);
  return grad;
}

// --- multistart driver -------------------------------------------------------

int default_thread_count() {
  if (const char* env = std::getenv("EXQ_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1 && v <= 256) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace {

struct RestartResult {
  double f = std::numeric_limits<double>::infinity();
  Eigen::VectorXd x;
  int iterations = 0;
};

std::vector<std::string> detect_time_relations(const Eigen::VectorXd& t) {
  std::vector<std::string> out;
  const Eigen::Index n = t.size();
  const double tol = 1e-9;
  for (Eigen::Index k = 0; k < n / 2; ++k) {
    const Eigen::Index m = n - 1 - k;
    if (std::abs(t(k) + t(m) - 1.0) < tol)
      out.push_back("tau[" + std::to_string(k) + "] + tau[" + std::to_string(m) + "] = 1");
    else if (std::abs(t(k) - t(m)) < tol)
      out.push_back("tau[" + std::to_string(k) + "] = tau[" + std::to_string(m) + "]");
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    if (std::abs(t(k) - 0.5) < tol)
      out.push_back("tau[" + std::to_string(k) + "] = 1/2");
  }
  return out;
}

}  // namespace

OptimizationReport minimize_multistart(const SynthesisObjective& obj,
                                       const Pattern& pattern,
                                       const MultistartOptions& opts) {
  if (opts.restarts < 1) throw std::invalid_argument("need at least one restart");
  const auto t0 = std::chrono::steady_clock::now();
  const CompiledObjective comp(obj, pattern);
  const int n = comp.parameter_count();

  const GradientFn fg = [&comp](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    if (g) return comp.value_and_gradient(x, *g);
    return comp.value(x);
  };

  std::vector<RestartResult> results(static_cast<size_t>(opts.restarts));
  const int threads = std::max(1, opts.threads == 0 ? default_thread_count() : opts.threads);
  auto run_range = [&](int lo, int hi) {
    MinimizeOptions mo;
    mo.max_iterations = opts.max_iterations;
    mo.gradient_tol = 1e-13;
    mo.f_tol = opts.success_f * 1e-3;
    for (int k = lo; k < hi; ++k) {
      std::mt19937_64 rng(substream_seed(opts.seed, opts.substream, static_cast<std::uint64_t>(k)));
      Eigen::VectorXd x0(n);
      for (int q = 0; q < n; ++q) x0(q) = uniform01(rng);
      RestartResult& r = results[static_cast<size_t>(k)];
      if (opts.method == OptMethod::Bfgs) {
        const MinimizeResult mr = minimize_bfgs(fg, x0, mo);
        r.f = mr.f;
        r.x = mr.x;
        r.iterations = mr.iterations;
      } else {
        NelderMeadOptions nm;
        nm.max_evaluations = opts.max_iterations * (n + 2);
        nm.initial_step = 0.25;
        nm.f_tol = opts.success_f * 1e-3;
        const MinimizeResult mr =
            minimize_nelder_mead([&comp](const Eigen::VectorXd& x) { return comp.value(x); },
                                 x0, nm);
        r.f = mr.f;
        r.x = mr.x;
        r.iterations = mr.iterations;
      }
    }
  };
  if (threads == 1 || opts.restarts == 1) {
    run_range(0, opts.restarts);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (opts.restarts + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const int lo = t * chunk, hi = std::min(opts.restarts, lo + chunk);
      if (lo < hi) pool.emplace_back(run_range, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  OptimizationReport rep;
  rep.restarts = opts.restarts;
  rep.seed = opts.seed;
  int best = 0;
  for (int k = 0; k < opts.restarts; ++k) {
    rep.total_iterations += results[static_cast<size_t>(k)].iterations;
    if (results[static_cast<size_t>(k)].f < results[static_cast<size_t>(best)].f) best = k;
  }
  rep.best_restart = best;
  Eigen::VectorXd x = results[static_cast<size_t>(best)].x;

  if (opts.polish) {
    MinimizeOptions mo;
    mo.max_iterations = std::max(2000, 4 * opts.max_iterations);
    mo.gradient_tol = 1e-17;
    const MinimizeResult mr = minimize_bfgs(fg, x, mo);
    if (mr.f <= results[static_cast<size_t>(best)].f) x = mr.x;
    rep.total_iterations += mr.iterations;
  }

  // canonical serial times; the objective is exactly invariant under mod 1
  bool serial_like = true;
  for (const auto& sp : pattern)
    if (sp.size() != 1) serial_like = false;
  if (serial_like)
    for (int q = 0; q < n; ++q) x(q) = mod_unit(x(q));

  rep.best_times = x;
  rep.objective = comp.value(x, &rep.leakage);
  rep.success = rep.objective < opts.success_f && rep.leakage < opts.success_leakage;
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

// --- serial pattern machinery -------------------------------------------------

bool pairs_commute(const std::pair<int, int>& a, const std::pair<int, int>& b) {
  return a.first != b.first && a.first != b.second && a.second != b.first &&
         a.second != b.second;
}

std::vector<std::pair<int, int>> normal_form(std::vector<std::pair<int, int>> word) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t k = 0; k + 1 < word.size(); ++k) {
      if (pairs_commute(word[k], word[k + 1]) && word[k + 1] < word[k]) {
        std::swap(word[k], word[k + 1]);
        changed = true;
      }
    }
  }
  return word;
}

bool reducible(const std::vector<std::pair<int, int>>& word) {
  const auto nf = normal_form(word);
  for (size_t k = 0; k + 1 < nf.size(); ++k)
    if (nf[k] == nf[k + 1]) return true;
  return false;
}

namespace {

using Word = std::vector<std::pair<int, int>>;

std::pair<int, int> mirror_pair(const std::pair<int, int>& p) {
  return ordered(5 - p.first, 5 - p.second);
}

Word mirrored_reverse(const Word& w) {
  Word out;
  for (auto it = w.rbegin(); it != w.rend(); ++it) out.push_back(mirror_pair(*it));
  return out;
}

Pattern to_pattern(const Word& w) {
  Pattern p;
  for (const auto& pr : w) p.push_back({pr});
  return p;
}

// alternating word over two letters
Word alternating(const std::pair<int, int>& first, const std::pair<int, int>& second,
                 int len, bool start_second) {
  Word out;
  for (int k = 0; k < len; ++k)
    out.push_back(((k % 2 == 0) != start_second) ? first : second);
  return out;
}

// compositions of total into `parts` nonnegative integers, most balanced first
std::vector<std::vector<int>> balanced_compositions(int total, int parts) {
  std::vector<std::vector<int>> comps;
  std::vector<int> cur(static_cast<size_t>(parts), 0);
  std::function<void(int, int)> rec = [&](int idx, int left) {
    if (idx == parts - 1) {
      cur[static_cast<size_t>(idx)] = left;
      comps.push_back(cur);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      cur[static_cast<size_t>(idx)] = v;
      rec(idx + 1, left - v);
    }
  };
  rec(0, total);
  std::stable_sort(comps.begin(), comps.end(),
                   [](const std::vector<int>& a, const std::vector<int>& b) {
                     auto spread = [](const std::vector<int>& v) {
                       return *std::max_element(v.begin(), v.end()) -
                              *std::min_element(v.begin(), v.end());
                     };
                     return spread(a) < spread(b);
                   });
  return comps;
}

}  // namespace

std::vector<Pattern> serial_two_qubit_pattern_stream(int length, int max_patterns,
                                                     std::uint64_t seed) {
  const std::pair<int, int> a{0, 1}, b{1, 2}, x{2, 3}, c{3, 4}, d{4, 5};
  const std::pair<int, int> all[5] = {a, b, x, c, d};

  std::vector<Pattern> out;
  std::set<Word> seen;
  auto emit = [&](const Word& w) {
    if (static_cast<int>(w.size()) != length) return;
    if (reducible(w)) return;
    if (!seen.insert(normal_form(w)).second) return;
    out.push_back(to_pattern(w));
  };
  auto emit_mirror_half = [&](const Word& half) {
    Word full = half;
    full.push_back(x);
    const Word tail = mirrored_reverse(half);
    full.insert(full.end(), tail.begin(), tail.end());
    emit(full);
  };

  const int half_len = (length - 1) / 2;
  if (length >= 3 && length % 2 == 1) {
    // stage 0: one crossing per half, intra segments on both sides of it
    for (const auto& comp : balanced_compositions(half_len - 1, 4)) {
      const int la_out = comp[0], lb_out = comp[1], la_in = comp[2], lb_in = comp[3];
      for (int sa_out = 0; sa_out < (la_out > 1 ? 2 : 1); ++sa_out)
        for (int sb_out = 0; sb_out < (lb_out > 1 ? 2 : 1); ++sb_out)
          for (int sa_in = 0; sa_in < (la_in > 1 ? 2 : 1); ++sa_in)
            for (int sb_in = 0; sb_in < (lb_in > 1 ? 2 : 1); ++sb_in) {
              Word half;
              auto append = [&half](const Word& w) {
                half.insert(half.end(), w.begin(), w.end());
              };
              append(alternating(a, b, la_out, sa_out == 1));
              append(alternating(d, c, lb_out, sb_out == 1));
              half.push_back(x);
              append(alternating(a, b, la_in, sa_in == 1));
              append(alternating(d, c, lb_in, sb_in == 1));
              emit_mirror_half(half);
              if (static_cast<int>(out.size()) >= max_patterns) return out;
            }
    }
    // starting-letter variants missed above for length-1 words
    for (const auto& comp : balanced_compositions(half_len - 1, 4)) {
      const int la_out = comp[0], lb_out = comp[1], la_in = comp[2], lb_in = comp[3];
      for (int mask = 0; mask < 16; ++mask) {
        Word half;
        auto append = [&half](const Word& w) {
          half.insert(half.end(), w.begin(), w.end());
        };
        append(alternating(a, b, la_out, (mask & 1) != 0));
        append(alternating(d, c, lb_out, (mask & 2) != 0));
        half.push_back(x);
        append(alternating(a, b, la_in, (mask & 4) != 0));
        append(alternating(d, c, lb_in, (mask & 8) != 0));
        emit_mirror_half(half);
        if (static_cast<int>(out.size()) >= max_patterns) return out;
      }
    }
    // stage 1: two crossings per half
    if (half_len >= 2) {
      for (const auto& comp : balanced_compositions(half_len - 2, 6)) {
        for (int mask = 0; mask < 64; ++mask) {
          Word half;
          auto append = [&half](const Word& w) {
            half.insert(half.end(), w.begin(), w.end());
          };
          int bit = 0;
          for (int seg = 0; seg < 3; ++seg) {
            append(alternating(a, b, comp[static_cast<size_t>(2 * seg)],
                               (mask & (1 << bit++)) != 0));
            append(alternating(d, c, comp[static_cast<size_t>(2 * seg + 1)],
                               (mask & (1 << bit++)) != 0));
            if (seg < 2) half.push_back(x);
          }
          emit_mirror_half(half);
          if (static_cast<int>(out.size()) >= max_patterns) return out;
        }
      }
    }
  }

  // stage 2: seeded random words, mirror-symmetric and unconstrained ones
  std::mt19937_64 rng(substream_seed(seed, 0xbeef, static_cast<std::uint64_t>(length)));
  long long tries = 0;
  const long long try_cap = 400LL * std::max(max_patterns, 1);
  while (static_cast<int>(out.size()) < max_patterns && tries++ < try_cap) {
    if (length >= 3 && length % 2 == 1 && tries % 2 == 0) {
      Word half;
      for (int k = 0; k < half_len; ++k)
        half.push_back(all[rng() % 5]);
      emit_mirror_half(half);
    } else {
      Word w;
      for (int k = 0; k < length; ++k) w.push_back(all[rng() % 5]);
      emit(w);
    }
  }
  return out;
}

std::vector<Pattern> all_short_serial_patterns(int max_length) {
  const std::vector<std::pair<int, int>> pairs = line_pairs(6);
  std::vector<Pattern> out;
  std::set<Word> seen;
  std::function<void(Word&)> rec = [&](Word& w) {
    if (!w.empty()) {
      if (!reducible(w) && seen.insert(normal_form(w)).second)
        out.push_back(to_pattern(w));
    }
    if (static_cast<int>(w.size()) == max_length) return;
    for (const auto& p : pairs) {
      if (!w.empty() && w.back() == p) continue;
      w.push_back(p);
      rec(w);
      w.pop_back();
    }
  };
  Word w;
  rec(w);
  return out;
}

// --- two-qubit search ----------------------------------------------------------

namespace {

double correction_residual_for(const Matrix& logical_raw, const Matrix4cd& target) {
  const Matrix4cd w = polar_unitary(logical_raw);
  const LocalCorrections corr = extract_local_corrections(w, target);
  return phase_aligned_distance(
      kron2(corr.a1, corr.a2) * Matrix4cd(logical_raw) * kron2(corr.b1, corr.b2),
      target);
}

}  // namespace

SynthesisOutcome synthesize_two_qubit(const Matrix4cd& target,
                                      const TwoQubitSearchOptions& opts) {
  const SynthesisObjective obj =
      two_qubit_objective(target, opts.equivalence, opts.subsystem);
  SynthesisOutcome outcome;
  outcome.min_f_seen = std::numeric_limits<double>::infinity();

  auto finalize_success = [&](const OptimizationReport& rep, const Pattern& pat,
                              int index) {
    outcome.success = true;
    outcome.report = rep;
    outcome.pattern_index = index;
    const CompiledObjective comp(obj, pat);
    const Matrix l = comp.logical_block(rep.best_times);
    if (opts.equivalence == EquivalenceMode::LocalEquivalence) {
      try {
        outcome.report.correction_residual = correction_residual_for(l, target);
      } catch (const NoLocalEquivalence&) {
        outcome.report.correction_residual = -1.0;
      }
    } else {
      outcome.report.correction_residual = phase_aligned_distance(l, target);
    }
    outcome.report.observed_relations = detect_time_relations(rep.best_times);
    outcome.sequence = canonicalized(
        sequence_from(opts.mode, 6, pat, outcome.report.best_times));
  };

  if (opts.mode != Mode::Serial) {
    auto pairs = opts.mode == Mode::Parallel1D ? line_pairs(6) : grid_pairs_2x3();
    for (const auto& ex : opts.excluded_pairs)
      pairs.erase(std::remove(pairs.begin(), pairs.end(), ordered(ex.first, ex.second)),
                  pairs.end());
    const Pattern pattern(static_cast<size_t>(opts.max_steps), pairs);
    MultistartOptions mo;
    mo.restarts = opts.restarts;
    mo.seed = opts.seed;
    mo.threads = opts.threads;
    mo.success_f = opts.success_f;
    mo.success_leakage = opts.success_leakage;
    mo.max_iterations = 600;
    const OptimizationReport rep = minimize_multistart(obj, pattern, mo);
    outcome.patterns_tried = 1;
    outcome.min_f_seen = rep.objective;
    outcome.screen_min_f.push_back(rep.objective);
    if (rep.success) {
      finalize_success(rep, pattern, 0);
    } else {
      outcome.report = rep;
      outcome.sequence = sequence_from(opts.mode, 6, pattern, rep.best_times);
    }
    return outcome;
  }

  std::vector<Pattern> patterns;
  if (max_abs(Matrix(target) - Matrix(swap_gate())) < 1e-12 && opts.max_steps >= 3) {
    // moving each physical spin across realizes the coded swap directly
    patterns.push_back(Pattern{{{0, 3}}, {{1, 4}}, {{2, 5}}});
  }
  for (auto& p : serial_two_qubit_pattern_stream(opts.max_steps, opts.max_patterns, opts.seed))
    patterns.push_back(std::move(p));

  OptimizationReport best_rep;
  best_rep.objective = std::numeric_limits<double>::infinity();
  Pattern best_pattern;

  for (size_t idx = 0; idx < patterns.size(); ++idx) {
    const Pattern& pat = patterns[idx];
    MultistartOptions screen;
    screen.restarts = opts.screen_restarts;
    screen.max_iterations = opts.screen_iterations;
    screen.seed = opts.seed;
    screen.substream = 2 * idx;
    screen.threads = opts.threads;
    screen.polish = false;
    screen.success_f = opts.success_f;
    screen.success_leakage = opts.success_leakage;
    const OptimizationReport srep = minimize_multistart(obj, pat, screen);
    ++outcome.patterns_tried;
    outcome.screen_min_f.push_back(srep.objective);
    if (srep.objective < outcome.min_f_seen) outcome.min_f_seen = srep.objective;
    if (srep.objective < best_rep.objective) {
      best_rep = srep;
      best_pattern = pat;
    }

    if (srep.objective < opts.promote_f || srep.success) {
      MultistartOptions deep;
      deep.restarts = opts.restarts;
      deep.max_iterations = 500;
      deep.seed = opts.seed;
      deep.substream = 2 * idx + 1;
      deep.threads = opts.threads;
      deep.success_f = opts.success_f;
      deep.success_leakage = opts.success_leakage;
      OptimizationReport drep = minimize_multistart(obj, pat, deep);

      // continue from the screen's best point as well
      const CompiledObjective comp(obj, pat);
      MinimizeOptions mo;
      mo.max_iterations = 3000;
      mo.gradient_tol = 1e-17;
      const MinimizeResult polished = minimize_bfgs(
          [&comp](const Eigen::VectorXd& v, Eigen::VectorXd* g) {
            if (g) return comp.value_and_gradient(v, *g);
            return comp.value(v);
          },
          srep.best_times, mo);
      if (polished.f < drep.objective) {
        drep.best_times = polished.x;
        for (Eigen::Index q = 0; q < drep.best_times.size(); ++q)
          drep.best_times(q) = mod_unit(drep.best_times(q));
        drep.objective = comp.value(drep.best_times, &drep.leakage);
        drep.success = drep.objective < opts.success_f &&
                       drep.leakage < opts.success_leakage;
      }
      if (drep.objective < outcome.min_f_seen) outcome.min_f_seen = drep.objective;
      if (drep.success) {
        finalize_success(drep, pat, static_cast<int>(idx));
        return outcome;
      }
      if (drep.objective < best_rep.objective) {
        best_rep = drep;
        best_pattern = pat;
      }
    }
  }

  outcome.report = best_rep;
  if (!best_pattern.empty())
    outcome.sequence = sequence_from(opts.mode, 6, best_pattern, best_rep.best_times);
  return outcome;
}

SynthesisOutcome synthesize_cnot(const TwoQubitSearchOptions& opts) {
  return synthesize_two_qubit(cnot_gate(), opts);
}

// --- single-qubit decompositions ------------------------------------------------

namespace {

SingleQubitResult run_single_qubit(const Matrix2cd& target, Mode mode,
                                   const Pattern& pattern,
                                   const SingleQubitOptions& opts,
                                   std::uint64_t substream) {
  const SynthesisObjective obj = single_qubit_objective(target);
  MultistartOptions mo;
  mo.restarts = opts.restarts;
  mo.seed = opts.seed;
  mo.substream = substream;
  mo.max_iterations = opts.max_iterations;
  mo.threads = opts.threads;
  mo.success_f = 1e-18;  // drive the exact-mode mismatch to the floor
  mo.success_leakage = 1e-8;
  const OptimizationReport rep = minimize_multistart(obj, pattern, mo);

  SingleQubitResult res;
  res.report = rep;
  res.times = rep.best_times;
  const CompiledObjective comp(obj, pattern);
  res.residual = phase_aligned_distance(comp.logical_block(rep.best_times), target);
  res.success = res.residual < opts.success_residual;
  res.sequence = canonicalized(sequence_from(mode, 3, pattern, rep.best_times));
  return res;
}

}  // namespace

SingleQubitResult decompose_single_qubit(const Matrix2cd& target,
                                         SingleQubitFlavor flavor,
                                         const SingleQubitOptions& opts) {
  // A single ordered word over fixed axes covers only part of the rotation
  // group (composing R_c R_m R_f obeys <axis_c, T axis_f> >= -1/2 when the
  // axes are pairwise at 120 degrees), so the serial flavors walk a short
  // deterministic list of words and return the first that reaches the target.
  std::vector<Pattern> candidates;
  Mode mode = Mode::Serial;
  switch (flavor) {
    case SingleQubitFlavor::Serial4Nearest:
      candidates.push_back({{{0, 1}}, {{1, 2}}, {{0, 1}}, {{1, 2}}});
      candidates.push_back({{{1, 2}}, {{0, 1}}, {{1, 2}}, {{0, 1}}});
      break;
    case SingleQubitFlavor::Serial3AnyPair: {
      const std::pair<int, int> letters[3] = {{0, 1}, {1, 2}, {0, 2}};
      candidates.push_back({{{0, 1}}, {{1, 2}}, {{0, 2}}});
      for (int f = 0; f < 3; ++f)
        for (int l = 0; l < 3; ++l)
          for (int m = 0; m < 3; ++m) {
            if (m == f || m == l) continue;
            Pattern word = {{letters[f]}, {letters[m]}, {letters[l]}};
            if (std::find(candidates.begin(), candidates.end(), word) ==
                candidates.end())
              candidates.push_back(word);
          }
      break;
    }
    case SingleQubitFlavor::Parallel3:
      mode = Mode::Parallel1D;
      candidates.push_back({{{0, 1}, {1, 2}}, {{0, 1}, {1, 2}}, {{0, 1}, {1, 2}}});
      break;
  }

  SingleQubitResult best;
  best.residual = std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < candidates.size(); ++k) {
    const SingleQubitResult r =
        run_single_qubit(target, mode, candidates[k], opts, k);
    if (r.success) return r;
    if (r.residual < best.residual) best = r;
  }
  return best;
}

SingleQubitResult synthesize_single_qubit(const Matrix2cd& target, Mode mode,
                                          int max_steps,
                                          const SingleQubitOptions& opts) {
  if (max_steps < 1) throw std::invalid_argument("need at least one step");
  if (mode == Mode::Parallel2D)
    throw std::invalid_argument("parallel-2d does not apply to a single block");

  SingleQubitResult best;
  best.residual = std::numeric_limits<double>::infinity();
  std::uint64_t substream = 1;

  if (mode == Mode::Parallel1D) {
    for (int len = 1; len <= std::min(max_steps, 6); ++len) {
      const Pattern pattern(static_cast<size_t>(len),
                            StepPattern{{0, 1}, {1, 2}});
      const SingleQubitResult r =
          run_single_qubit(target, mode, pattern, opts, substream++);
      if (r.success) return r;
      if (r.residual < best.residual) best = r;
    }
    return best;
  }

  // serial: deterministic words over the block pairs, shortest first
  const std::vector<std::pair<int, int>> letters = {{0, 1}, {1, 2}, {0, 2}};
  std::vector<std::vector<std::pair<int, int>>> words = {{}};
  for (int len = 1; len <= std::min(max_steps, 6); ++len) {
    std::vector<std::vector<std::pair<int, int>>> next;
    for (const auto& w : words) {
      for (const auto& l : letters) {
        if (!w.empty() && w.back() == l) continue;
        auto nw = w;
        nw.push_back(l);
        next.push_back(nw);
      }
    }
    words = next;
    for (const auto& w : words) {
      Pattern pattern;
      for (const auto& pr : w) pattern.push_back({pr});
      const SingleQubitResult r =
          run_single_qubit(target, mode, pattern, opts, substream++);
      if (r.success) return r;
      if (r.residual < best.residual) best = r;
    }
  }
  return best;
}

}  // namespace exq
