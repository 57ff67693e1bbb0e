#pragma once

#include <Eigen/Dense>

#include <functional>

// Small dense local minimizers: BFGS with analytic gradients and a
// derivative-free Nelder-Mead fallback. Unconstrained, deterministic.

namespace exq {

using GradientFn = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>;
using ValueFn = std::function<double(const Eigen::VectorXd&)>;

struct MinimizeOptions {
  int max_iterations = 400;
  long long max_evaluations = 0;  // 0: no cap
  double gradient_tol = 1e-13;
  double f_tol = 0.0;         // stop early once f drops below this (0 disables)
  int stagnation_window = 10;  // stop after this many non-improving iterations
  double stagnation_rel = 1e-14;
};

struct MinimizeResult {
  Eigen::VectorXd x;
  double f = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  long long evaluations = 0;
  bool converged = false;
};

MinimizeResult minimize_bfgs(const GradientFn& fg, const Eigen::VectorXd& x0,
                             const MinimizeOptions& opts = {});

struct NelderMeadOptions {
  int max_evaluations = 4000;
  double initial_step = 0.1;
  double f_spread_tol = 1e-15;
  double f_tol = 0.0;
};

MinimizeResult minimize_nelder_mead(const ValueFn& f, const Eigen::VectorXd& x0,
                                    const NelderMeadOptions& opts = {});

}  // namespace exq
