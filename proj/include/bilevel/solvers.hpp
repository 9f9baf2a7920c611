#pragma once

// Lower-level solvers.  Both record a full-iterate tape (IterateTrace) so the
// reverse-mode accumulators can replay the run.
//
// Forward-backward splitting under a Bregman generator psi:
//
//   x^{k+1} = prox(xbar = x^k, cost = grad f(x^k;theta) + g_cost(theta), alpha)
//
// equivalently the mirror update grad psi(x^k) - alpha c^k followed by the
// generator's inverse map restricted to the domain.
//
// Primal-dual splitting for  min_x f + g + h(Kx)  via the saddle point
//
//   min_x max_p  f(x) + g(x) + <Kx, p> - h*(p)
//
//   u^{k+1} = prox_primal(u^k,  grad f(u^k) + g_cost + K^T p^k,        tau)
//   p^{k+1} = prox_dual  (p^k,  h_cost - K (2 u^{k+1} - u^k),          sigma)
//
// with steps constrained by (1/tau - L_f) (1/sigma) >= |K|^2.

#include "bilevel/bregman.hpp"
#include "bilevel/problem.hpp"
#include "bilevel/trace.hpp"

#include <functional>
#include <utility>

namespace bilevel {

// theta-free matrix-free linear operator view.
struct LinearMap {
  std::function<Vec(const Vec&)> apply;
  std::function<Vec(const Vec&)> apply_adjoint;
  Index rows = 0;
  Index cols = 0;
};

LinearMap at_theta(const ParamLinearOperator& op, const Vec& theta);

// Deterministic power-iteration estimate of the operator norm |K| (largest
// singular value).  The estimate is a lower bound of the true norm; the
// returned value after `iterations` sweeps of K^T K.
double operator_norm_bound(const LinearMap& op, int iterations = 100);

// Mirror map grad psi without the public-surface interior tolerance (iterates
// may sit arbitrarily close to the boundary; they only must be strictly
// inside).
Vec mirror_map_strict(const BregmanGenerator& gen, const Vec& x);

// Default forward-backward step 1/L_f; ConfigError when no Lipschitz constant
// is recorded on the problem.
double fbs_default_alpha(const LowerProblem& pb);

// n update applications of forward-backward splitting from x0; the trace holds
// iterates x^0..x^n and the n mirror points.  Throws DivergenceError (with the
// iteration index) if an iterate leaves the generator's strict interior or
// turns non-finite.  A step larger than 1/L_f only adds a warning.
IterateTrace fbs_run(const LowerProblem& pb, const Vec& theta, const Vec& x0, int n,
                     const ProxSpec& prox, double alpha);

struct PDConfig {
  ProxSpec primal;
  ProxSpec dual;
  double tau = 0.0;
  double sigma = 0.0;
  double K_norm_bound = 0.0;  // bound used to validate the step inequality
  bool ergodic = false;
};

// Largest equal step pair tau = sigma satisfying the step inequality for the
// given constants, scaled by a 0.99 safety factor (1.0 when both vanish).
std::pair<double, double> pd_default_steps(double lipschitz_f, double K_norm);

// n primal-dual updates from (u0, p0); the trace holds u^0..u^n and p^0..p^n
// and, when cfg.ergodic, the running mean of the primal iterates.
IterateTrace pd_run(const LowerProblem& pb, const Vec& theta, const Vec& u0, const Vec& p0,
                    int n, const PDConfig& cfg);

}  // namespace bilevel
