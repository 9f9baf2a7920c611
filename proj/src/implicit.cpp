#include "bilevel/implicit.hpp"

#include <cmath>
#include <sstream>

namespace bilevel {

GradientReport implicit_gradient(const SmoothedProblem& sp, const Vec& theta, const Vec& xstar,
                                 const LossGrads& loss, double tol, int max_solve_iters) {
  if (!(tol > 0.0)) throw InvalidInput("implicit_gradient: tol must be positive");
  const int max_iters =
      max_solve_iters > 0 ? max_solve_iters : 10 * static_cast<int>(sp.dim);

  // Conjugate directions on H v = xi (H symmetric positive definite).
  const Vec& xi = loss.wrt_x;
  Vec v = Vec::Zero(sp.dim);
  Vec r = xi;  // xi - H*0
  Vec d = r;
  double rr = r.squaredNorm();
  double residual = std::sqrt(rr);
  int used = 0;
  bool converged = residual <= tol;
  while (!converged && used < max_iters) {
    const Vec Hd = sp.hess(xstar, theta, d);
    const double dHd = d.dot(Hd);
    if (!(dHd > 0.0)) {
      std::ostringstream msg;
      msg << "implicit_gradient: curvature d^T H d = " << dHd
          << " not positive (Hessian not SPD at xstar)";
      throw Error(msg.str());
    }
    const double step = rr / dHd;
    v += step * d;
    r -= step * Hd;
    const double rr_next = r.squaredNorm();
    d = r + (rr_next / rr) * d;
    rr = rr_next;
    residual = std::sqrt(rr);
    ++used;
    converged = residual <= tol;
  }

  GradientReport report;
  report.estimator = "smoothed-implicit";
  report.gradient = -sp.mixed_jtv(xstar, theta, v) + loss.wrt_theta;
  report.solve_residual = residual;
  report.solve_iterations = used;
  report.converged = converged;
  report.stationarity = sp.grad(xstar, theta).norm();
  if (!converged) {
    std::ostringstream msg;
    msg << "implicit_gradient: conjugate-direction residual " << residual << " above tol "
        << tol << " after " << used << " iterations";
    report.warnings.push_back(msg.str());
    throw NonConvergedSolve(msg.str(), std::move(report));
  }
  return report;
}

double toy_barrier_minimize(double theta, double lambda, double b, double mu, double tol) {
  if (!(mu > 0.0)) throw InvalidInput("toy_barrier_minimize: mu must be positive");
  if (!(tol > 0.0)) throw InvalidInput("toy_barrier_minimize: tol must be positive");
  const auto dq = [&](double x) {
    return lambda * theta * (theta * x - b) + x - mu / x;  // E_mu'
  };
  const auto d2q = [&](double x) {
    return lambda * theta * theta + 1.0 + mu / (x * x);  // E_mu'' > 0
  };

  // Bracket the unique positive root of the increasing derivative.
  double lo = std::sqrt(mu) * 1e-8;
  while (dq(lo) > 0.0) lo *= 0.5;
  double hi = std::max(1.0, std::max(lambda * theta * b, 0.0) / (1.0 + lambda * theta * theta)) +
              std::sqrt(mu) + 1.0;
  while (dq(hi) < 0.0) hi *= 2.0;

  double x = std::max(std::sqrt(mu), std::max(lambda * theta * b, 0.0) /
                                         (1.0 + lambda * theta * theta));
  if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
  for (int k = 0; k < 200; ++k) {
    const double q = dq(x);
    if (std::abs(q) <= tol) return x;
    if (q > 0.0) hi = x;
    else lo = x;
    double next = x - q / d2q(x);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);  // bisection safeguard
    x = next;
  }
  if (std::abs(dq(x)) <= tol) return x;
  std::ostringstream msg;
  msg << "toy_barrier_minimize: residual " << dq(x) << " above tol " << tol;
  throw Error(msg.str());
}

}  // namespace bilevel
