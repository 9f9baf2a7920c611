#pragma once

// Hypergradient estimators: reverse-mode differentiation of an unrolled
// lower-level run, forward-mode directional propagation, and fixed-point
// (truncated Neumann series / implicit adjoint solve) alternatives that reuse
// the same step-map derivatives with every Jacobian frozen at the limit point.
//
// Reverse mode over the abstract update x^{k+1} = A(x^k, theta):
//
//   z <- (dL/dx)^T,  w <- 0
//   for k = N-1 .. N-n_back:
//     w += (dA/dtheta)^T(x^k, theta) z
//     z  = (dA/dx)^T(x^k, theta) z
//   gradient = w + (dL/dtheta)^T
//
// The w updates are running sums of transposed directional products; no step
// Jacobian is ever materialized.

#include "bilevel/bregman.hpp"
#include "bilevel/problem.hpp"
#include "bilevel/solvers.hpp"
#include "bilevel/trace.hpp"

#include <functional>
#include <string>
#include <vector>

namespace bilevel {

struct GradientReport {
  Vec gradient;
  // Euclidean norm of the w increment, one entry per back-iteration (in
  // processing order: entry 0 belongs to the last forward step).
  std::vector<double> contributions;
  std::string estimator;
  int n_forward = 0;
  int n_back = 0;
  // Fixed-point estimators: |xstar - A(xstar)| (reported, not enforced).
  double fixed_point_residual = kNaN;
  // Implicit estimators: final linear-solve residual and iteration count.
  double solve_residual = kNaN;
  int solve_iterations = 0;
  // Smoothed-implicit: |grad_x E(xstar, theta)| (reported, not enforced).
  double stationarity = kNaN;
  bool converged = true;
  // Set when the adjoint norms grew over many consecutive back-iterations
  // (the backward recursion inherits divergence when the step map is not a
  // contraction at the evaluated iterates).
  bool spectral_warning = false;
  std::vector<std::string> warnings;
};

// Thrown when an iterative adjoint solve stops above tolerance.  Carries the
// full report assembled from the best iterate, which remains usable.
struct NonConvergedSolve : Error {
  NonConvergedSolve(const std::string& what, GradientReport report)
      : Error(what), best(std::move(report)) {}
  GradientReport best;
};

// Transposed step-map derivatives for the abstract recursion; k is the step
// index (the step maps x^k to x^{k+1}), so implementations may read any
// recorded quantity of the trace.
struct StepJacobians {
  std::function<Vec(int k, const Vec& v)> x_transpose;      // (dA/dx)^T v at step k
  std::function<Vec(int k, const Vec& v)> theta_transpose;  // (dA/dtheta)^T v at step k
  Index param_dim = 0;
};

// n_back < 0 selects the full sweep.  n_back larger than the recorded step
// count is a ConfigError.
GradientReport reverse_abstract(const IterateTrace& trace, const StepJacobians& jac,
                                const LossGrads& loss, int n_back = -1);

// Reverse mode specialized to a forward-backward trace: the step Jacobians
// factor through the prox kernels evaluated at the recorded iterates, with the
// smooth part entering through Hessian and mixed products.
GradientReport reverse_fbs(const IterateTrace& trace, const LowerProblem& pb,
                           const ProxSpec& prox, const LossGrads& loss, int n_back = -1);

// Reverse mode over a primal-dual trace (three cotangent sequences: primal,
// dual, parameter).  For an ergodic trace, loss.wrt_x is the loss gradient at
// the ergodic average; by linearity the averaged per-iterate accumulation is
// realized by re-seeding the primal cotangent with loss.wrt_x/(n+1) at every
// level.  The level-0 cotangents are never consumed (x^0 does not depend on
// theta).
GradientReport reverse_pd(const IterateTrace& trace, const LowerProblem& pb,
                          const ProxSpec& primal, const ProxSpec& dual,
                          const LossGrads& loss, int n_back = -1);

struct ForwardUnrolled {
  IterateTrace trace;
  // Column j holds (dx^n/dtheta) directions.col(j).
  Mat tangents;
};

// Forward-mode propagation of dx/dtheta * v for each column of `directions`
// alongside the forward-backward iteration (one pass per direction).
ForwardUnrolled forward_unrolled(const LowerProblem& pb, const Vec& theta, const Vec& x0,
                                 int n, const ProxSpec& prox, double alpha,
                                 const Mat& directions);

// Truncated Neumann series: runs the backward recursion for n0 steps with all
// step Jacobians frozen at (xstar, theta).
GradientReport fixedpoint_neumann(const LowerProblem& pb, const Vec& theta, const Vec& xstar,
                                  const ProxSpec& prox, double alpha, const LossGrads& loss,
                                  int n0);

// Same recursion for an abstract frozen step map.
GradientReport fixedpoint_neumann_abstract(const std::function<Vec(const Vec&)>& x_transpose,
                                           const std::function<Vec(const Vec&)>& theta_transpose,
                                           Index param_dim, const LossGrads& loss, int n0);

// Implicit adjoint: solves (I - (dA/dx)^T) z = (dL/dx)^T at (xstar, theta) by
// the plain transposed fixed-point iteration, then assembles
// (dA/dtheta)^T z + (dL/dtheta)^T.  Throws NonConvergedSolve (carrying the
// report built from the best iterate) if the residual stays above tol.
GradientReport fixedpoint_implicit(const LowerProblem& pb, const Vec& theta, const Vec& xstar,
                                   const ProxSpec& prox, double alpha, const LossGrads& loss,
                                   double tol, int max_solve_iters);

}  // namespace bilevel
