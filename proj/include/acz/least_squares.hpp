#pragma once

// Box-constrained Levenberg-Marquardt on Eigen.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "acz/error.hpp"

namespace acz {

struct LsqOptions {
  double xtol = 1e-10;  ///< relative parameter step
  double ftol = 1e-15;  ///< relative cost reduction
  double gtol = 1e-14;  ///< scaled gradient
  int max_iterations = 200;
  double initial_lambda = 1e-3;
};

struct LsqResult {
  Eigen::VectorXd x;
  Eigen::VectorXd residual;
  Eigen::MatrixXd jacobian;  ///< at x
  double cost = 0.0;         ///< sum of squared residuals
  int iterations = 0;
  bool converged = false;
  std::string message;
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

/// Central-difference Jacobian, steps clipped to stay inside the bounds.
inline Eigen::MatrixXd numeric_jacobian(const ResidualFn& f, const Eigen::VectorXd& x, const Eigen::VectorXd& lower,
                                        const Eigen::VectorXd& upper) {
  const Eigen::VectorXd r0 = f(x);
  Eigen::MatrixXd j(r0.size(), x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double h = 1e-7 * std::max(1.0, std::abs(x(k)));
    Eigen::VectorXd xp = x, xm = x;
    xp(k) = std::min(x(k) + h, upper(k));
    xm(k) = std::max(x(k) - h, lower(k));
    const double span = xp(k) - xm(k);
    if (!(span > 0.0)) {
      j.col(k).setZero();
      continue;
    }
    j.col(k) = (f(xp) - f(xm)) / span;
  }
  return j;
}

/// Minimizes |f(x)|^2 over lower <= x <= upper. The Marquardt-scaled normal
/// equations are solved each step and the trial point is projected onto the box.
inline LsqResult levenberg_marquardt(const ResidualFn& f, JacobianFn jac, Eigen::VectorXd x, const Eigen::VectorXd& lower,
                                     const Eigen::VectorXd& upper, const LsqOptions& opt = {}) {
  const Eigen::Index n = x.size();
  if (lower.size() != n || upper.size() != n) throw DomainError("bound dimensions differ from the parameter vector");
  for (Eigen::Index k = 0; k < n; ++k) {
    if (!(lower(k) <= upper(k))) throw DomainError("lower bound exceeds upper bound");
    x(k) = std::clamp(x(k), lower(k), upper(k));
  }
  if (!jac) jac = [&](const Eigen::VectorXd& p) { return numeric_jacobian(f, p, lower, upper); };

  LsqResult res;
  Eigen::VectorXd r = f(x);
  if (!r.allFinite()) throw DomainError("residuals are not finite at the starting point");
  double cost = r.squaredNorm();
  Eigen::MatrixXd j = jac(x);
  double lambda = opt.initial_lambda;

  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    const Eigen::MatrixXd jtj = j.transpose() * j;
    const Eigen::VectorXd g = j.transpose() * r;
    Eigen::VectorXd d = jtj.diagonal();
    for (Eigen::Index k = 0; k < n; ++k) d(k) = std::max(d(k), 1e-12 * std::max(1.0, d.maxCoeff()));

    // free-variable gradient test: ignore components pushing into an active bound
    double gmax = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      const bool at_lo = x(k) <= lower(k) && g(k) > 0.0;
      const bool at_hi = x(k) >= upper(k) && g(k) < 0.0;
      if (!at_lo && !at_hi) gmax = std::max(gmax, std::abs(g(k)) / std::sqrt(d(k)));
    }
    if (gmax <= opt.gtol * std::max(std::sqrt(cost), 1e-300)) {
      res.converged = true;
      res.message = "gradient below tolerance";
      break;
    }

    bool accepted = false;
    bool small_step = false;
    for (int inner = 0; inner < 40; ++inner) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += lambda * d;
      Eigen::VectorXd step = a.ldlt().solve(-g);
      Eigen::VectorXd xt = x + step;
      for (Eigen::Index k = 0; k < n; ++k) xt(k) = std::clamp(xt(k), lower(k), upper(k));
      step = xt - x;
      if (step.norm() <= opt.xtol * (x.norm() + opt.xtol)) {
        small_step = true;
        break;
      }
      const Eigen::VectorXd rt = f(xt);
      const double ct = rt.allFinite() ? rt.squaredNorm() : std::numeric_limits<double>::infinity();
      if (ct < cost) {
        const double drop = (cost - ct) / std::max(cost, 1e-300);
        x = xt;
        r = rt;
        cost = ct;
        j = jac(x);
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (step.norm() <= opt.xtol * (x.norm() + opt.xtol) || drop <= opt.ftol) small_step = true;
        break;
      }
      lambda *= 4.0;
      if (lambda > 1e16) break;
    }
    if (small_step) {
      res.converged = true;
      res.message = "parameter step below tolerance";
      ++it;
      break;
    }
    if (!accepted) {
      // no descent direction left at any damping: a (possibly constrained) minimum
      res.converged = true;
      res.message = "no further decrease";
      ++it;
      break;
    }
  }
  if (!res.converged) res.message = "iteration limit reached";
  res.x = x;
  res.residual = r;
  res.jacobian = j;
  res.cost = cost;
  res.iterations = it;
  return res;
}

}  // namespace acz
