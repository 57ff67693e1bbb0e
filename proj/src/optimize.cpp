#include "exq/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace exq {

MinimizeResult minimize_bfgs(const GradientFn& fg, const Eigen::VectorXd& x0,
                             const MinimizeOptions& opts) {
  const Eigen::Index n = x0.size();
  MinimizeResult res;
  res.x = x0;

  Eigen::VectorXd g(n);
  double f = fg(res.x, &g);
  res.evaluations = 1;
  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd g_new(n);
  bool reset_done = false;

  int stagnant = 0;
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    res.gradient_norm = g.norm();
    if (res.gradient_norm < opts.gradient_tol ||
        (opts.f_tol > 0.0 && f < opts.f_tol)) {
      res.converged = true;
      break;
    }
    if (stagnant >= opts.stagnation_window) break;
    if (opts.max_evaluations > 0 && res.evaluations >= opts.max_evaluations) break;

    Eigen::VectorXd d = -(hinv * g);
    double slope = g.dot(d);
    if (!(slope < 0.0)) {  // not a descent direction, restart from steepest
      hinv.setIdentity();
      d = -g;
      slope = -res.gradient_norm * res.gradient_norm;
    }

    // backtracking Armijo line search with one quadratic interpolation
    const double c1 = 1e-4;
    double alpha = 1.0;
    double f_new = f;
    bool accepted = false;
    for (int ls = 0; ls < 14; ++ls) {
      f_new = fg(res.x + alpha * d, &g_new);
      ++res.evaluations;
      if (std::isfinite(f_new) && f_new <= f + c1 * alpha * slope) {
        accepted = true;
        break;
      }
      const double denom = 2.0 * (f_new - f - alpha * slope);
      double alpha_q = (std::isfinite(f_new) && denom > 0.0)
                           ? -slope * alpha * alpha / denom
                           : 0.5 * alpha;
      alpha = std::clamp(alpha_q, 0.1 * alpha, 0.5 * alpha);
    }
    if (!accepted) {
      if (reset_done) break;
      hinv.setIdentity();
      reset_done = true;
      continue;
    }
    stagnant = (f - f_new <= opts.stagnation_rel * std::max(1.0, std::abs(f)))
                   ? stagnant + 1
                   : 0;

    const Eigen::VectorXd s = alpha * d;
    const Eigen::VectorXd y = g_new - g;
    res.x += s;
    f = f_new;
    g.swap(g_new);

    const double sy = s.dot(y);
    if (sy > 1e-14 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = hinv * y;
      // BFGS inverse update
      hinv += (sy + y.dot(hy)) * rho * rho * (s * s.transpose());
      hinv -= rho * (hy * s.transpose() + s * hy.transpose());
    }
  }
  res.f = f;
  res.gradient_norm = g.norm();
  res.iterations = it;
  return res;
}

MinimizeResult minimize_nelder_mead(const ValueFn& f, const Eigen::VectorXd& x0,
                                    const NelderMeadOptions& opts) {
  const Eigen::Index n = x0.size();
  MinimizeResult res;

  std::vector<Eigen::VectorXd> xs(static_cast<size_t>(n) + 1, x0);
  std::vector<double> fs(static_cast<size_t>(n) + 1);
  for (Eigen::Index i = 0; i < n; ++i) xs[static_cast<size_t>(i) + 1](i) += opts.initial_step;
  for (size_t i = 0; i < xs.size(); ++i) fs[i] = f(xs[i]);
  res.evaluations = static_cast<long long>(xs.size());

  std::vector<size_t> order(xs.size());
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return fs[a] < fs[b]; });
  };

  while (res.evaluations < opts.max_evaluations) {
    sort_simplex();
    const size_t best = order.front(), worst = order.back();
    const size_t second_worst = order[order.size() - 2];
    if (fs[worst] - fs[best] < opts.f_spread_tol ||
        (opts.f_tol > 0.0 && fs[best] < opts.f_tol)) {
      res.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (size_t i = 0; i < xs.size(); ++i)
      if (i != worst) centroid += xs[i];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd refl = centroid + (centroid - xs[worst]);
    const double f_refl = f(refl);
    ++res.evaluations;
    if (f_refl < fs[best]) {
      const Eigen::VectorXd expand = centroid + 2.0 * (centroid - xs[worst]);
      const double f_exp = f(expand);
      ++res.evaluations;
      if (f_exp < f_refl) {
        xs[worst] = expand;
        fs[worst] = f_exp;
      } else {
        xs[worst] = refl;
        fs[worst] = f_refl;
      }
    } else if (f_refl < fs[second_worst]) {
      xs[worst] = refl;
      fs[worst] = f_refl;
    } else {
      const Eigen::VectorXd contr = centroid + 0.5 * (xs[worst] - centroid);
      const double f_con = f(contr);
      ++res.evaluations;
      if (f_con < fs[worst]) {
        xs[worst] = contr;
        fs[worst] = f_con;
      } else {
        for (size_t i = 0; i < xs.size(); ++i) {
          if (i == best) continue;
          xs[i] = xs[best] + 0.5 * (xs[i] - xs[best]);
          fs[i] = f(xs[i]);
          ++res.evaluations;
        }
      }
    }
    ++res.iterations;
  }

  sort_simplex();
  res.x = xs[order.front()];
  res.f = fs[order.front()];
  return res;
}

}  // namespace exq
