#pragma once

// Smoothed-implicit differentiation.  The nonsmooth lower-level problem is
// replaced by a twice-differentiable surrogate (a log-barrier for the
// nonnegativity constraint), whose minimizer obeys the implicit-function
// theorem; the parameter gradient is
//
//   dL/dtheta = -[ (dL/dx) H^{-1} ] (d^2 E / dtheta dx) + dL/dtheta,
//
// with the bracket evaluated first: solve H v = (dL/dx)^T, then apply the
// transposed mixed derivative.  H is symmetric positive definite at a strict
// minimizer, so a matrix-free conjugate-direction solve is used.

#include "bilevel/hypergrad.hpp"
#include "bilevel/types.hpp"

#include <functional>

namespace bilevel {

// Twice-differentiable surrogate energy E_mu(x; theta).
struct SmoothedProblem {
  Index dim = 0;
  Index param_dim = 0;
  std::function<double(const Vec& x, const Vec& theta)> energy;  // optional
  std::function<Vec(const Vec& x, const Vec& theta)> grad;
  // Hessian-vector product (d^2 E / dx^2) v.
  std::function<Vec(const Vec& x, const Vec& theta, const Vec& v)> hess;
  // (d^2 E / dtheta dx)^T v, mapping a primal cotangent to parameter space.
  std::function<Vec(const Vec& x, const Vec& theta, const Vec& v)> mixed_jtv;
};

// Implicit parameter gradient at an (approximate) stationary point xstar.
// The stationarity norm |grad E(xstar, theta)| is reported, not enforced.
// A conjugate-direction solve above tolerance after max_solve_iters throws
// NonConvergedSolve carrying the report built from the best iterate.
GradientReport implicit_gradient(const SmoothedProblem& sp, const Vec& theta, const Vec& xstar,
                                 const LossGrads& loss, double tol = 1e-10,
                                 int max_solve_iters = -1);

// Minimizer of the barrier surrogate of the 1-D study problem,
//   E_mu(x; theta) = lambda/2 (theta x - b)^2 + x^2/2 - mu log x,  x > 0,
// via safeguarded Newton on the strictly increasing derivative; the returned
// point has |E_mu'(x)| <= tol.
double toy_barrier_minimize(double theta, double lambda, double b, double mu,
                            double tol = 1e-12);

}  // namespace bilevel
