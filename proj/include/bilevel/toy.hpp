#pragma once

// One-dimensional nonnegative least-squares study problem
//
//   min_theta  1/2 (x*(theta) - gt)^2
//   s.t.       x*(theta) = argmin_{x >= 0} lambda/2 (theta x - b)^2 + x^2/2
//
// with the closed-form solution map x*(theta) = max(0, lambda theta b /
// (1 + lambda theta^2)), so every gradient estimator can be measured against
// an exact reference.  The loss derivative has a kink at theta = 0; there the
// reference is the ordered interval between 0 and lambda b (x(0) - gt).

#include "bilevel/hypergrad.hpp"
#include "bilevel/problem.hpp"
#include "bilevel/trace.hpp"
#include "bilevel/types.hpp"

#include <string>
#include <vector>

namespace bilevel::toy {

struct ToyConfig {
  double lambda = 1.0;
  double b = 1.0;
  double theta_star = 1.0;  // generates the target gt = x*(theta_star)
  double theta_eval = 0.3;
  int n_forward = 200;
  int n_back = -1;            // -1: as many as recorded forward steps
  double alpha = 0.5;         // Bregman forward-backward step
  double mu = 1e-6;           // barrier parameter (smoothed-implicit only)
  double x0 = 1.0;            // start; must be positive for the Bregman kinds
  double solve_tol = 1e-10;   // adjoint-solve tolerance (implicit kinds)
  int solve_iters = 5000;     // adjoint-solve iteration cap

  // Recomputed from theta_star on every call, never stored.
  double ground_truth() const;
  void validate() const;  // ConfigError on violation
};

enum class EstimatorKind {
  SmoothedImplicit,   // "smoothed-impl"
  ProjGD,             // "proj-gd"
  ProjGD2,            // "proj-gd2"
  BregmanFB,          // "bregman-fb"
  BregmanFB2,         // "bregman-fb2"
  BregmanFBImplicit,  // "bregman-fb-impl"
};

extern const std::vector<EstimatorKind> kAllEstimators;

std::string estimator_name(EstimatorKind kind);
EstimatorKind estimator_from_name(const std::string& name);  // InvalidInput on unknown tag

// x*(theta) = max(0, lambda theta b / (1 + lambda theta^2)).
double analytic_solution_map(double theta, double lambda, double b);

// dL/dtheta.  A point interval for theta != 0 (derivative 0 on the clipped
// branch); at theta = 0 the ordered interval between 0 and
// lambda b (x(0) - gt).
Interval analytic_gradient(double theta, const ToyConfig& cfg);

// Lower-problem callbacks of the smooth part (the nonnegativity constraint
// lives in the solver's generator domain).  lipschitz_f is filled for the
// given evaluation point: L_f(theta) = 1 + lambda theta^2.
LowerProblem toy_problem(const ToyConfig& cfg, double theta);

double toy_loss(const ToyConfig& cfg, double x);
LossGrads toy_loss_grads(const ToyConfig& cfg, double x);

// Step used by the projected-gradient kinds: 1/L_f(theta), which minimizes the
// quadratic exactly in a single iteration.
double projgd_alpha(const ToyConfig& cfg, double theta);

// Forward pass (no differentiation) of an unrolled kind at `theta`, with the
// step size frozen at cfg.theta_eval so the composite matches the one the
// estimators differentiate.  InvalidInput for the smoothed-implicit kind.
IterateTrace run_forward(EstimatorKind kind, const ToyConfig& cfg, double theta);

// Loss of the frozen composite at `theta`: finite-difference reference for
// the estimator checks.  Smoothed-implicit: loss at the barrier minimizer.
double unrolled_loss(EstimatorKind kind, const ToyConfig& cfg, double theta);

// Energy f(x^k) along a recorded forward trace.
std::vector<double> energy_trace(const ToyConfig& cfg, const IterateTrace& trace);

// Full gradient estimate at cfg.theta_eval.  Adjoint solves that stop above
// tolerance are downgraded to the carried best report (converged = false)
// so sweeps can record them.
GradientReport run_estimator(EstimatorKind kind, const ToyConfig& cfg);

struct SweepRow {
  std::string kind;
  double theta = 0.0;
  int n_forward = 0;
  int n_back = 0;
  double estimate = kNaN;
  double reference_lo = kNaN;
  double reference_hi = kNaN;
  double abs_error = kNaN;  // distance to the reference interval (0 inside)
  bool in_interval = false;
  bool failed = false;
  std::string message;                // failure description, empty otherwise
  std::vector<double> contributions;  // per-back-iteration |dw|
  std::vector<double> energies;       // forward energy trace (unrolled kinds)
};

// Full grid kinds x thetas x n_values in that nesting order; each n sets
// n_forward = n_back = n on a copy of `base`.  Failures are recorded per row
// and the sweep continues.  threads <= 1: serial; otherwise rows are
// distributed over that many workers, output order stays grid order.
std::vector<SweepRow> sweep(const ToyConfig& base, const std::vector<EstimatorKind>& kinds,
                            const std::vector<double>& thetas,
                            const std::vector<int>& n_values, int threads = 0);

}  // namespace bilevel::toy
