#pragma once

// Lower-level problem description.  The solvers only touch the problem through
// these callbacks, so the same machinery runs the 1-D study problems and the
// grid-structured segmentation energies.
//
// The energy being minimized (or its saddle-point form) is
//
//   E(x, theta) = f(x; theta) + g(x; theta) + h(K(theta) x)      (h optional)
//
// with f smooth, g = <g_cost(theta), x> + indicator (the indicator absorbed by
// the Bregman generator's domain, or a SimpleFunction under the Euclidean
// generator), and h handled through its conjugate in the primal-dual solver.

#include "bilevel/types.hpp"

#include <functional>

namespace bilevel {

// Linear coupling operator K(theta), matrix-free.  theta_jtv is the derivative
// of the bilinear form: theta_jtv(theta, v, w) = d/dtheta <K(theta) v, w>,
// returned in parameter space.  Because the form is bilinear, the same
// callback serves both K v (cotangent w) and K^T w (cotangent v).
struct ParamLinearOperator {
  std::function<Vec(const Vec& theta, const Vec& v)> apply;
  std::function<Vec(const Vec& theta, const Vec& w)> apply_adjoint;
  std::function<Vec(const Vec& theta, const Vec& v, const Vec& w)> theta_jtv;
  Index rows = 0;  // dual dimension
  Index cols = 0;  // primal dimension

  bool present() const { return static_cast<bool>(apply); }
};

struct LowerProblem {
  Index dim = 0;        // primal dimension
  Index param_dim = 0;  // parameter dimension

  // Smooth part f(x; theta).  energy is optional (descent checks, traces).
  std::function<double(const Vec& x, const Vec& theta)> energy;
  std::function<Vec(const Vec& x, const Vec& theta)> smooth_grad;
  // Hessian-vector product (d^2 f / dx^2) v (symmetric).
  std::function<Vec(const Vec& x, const Vec& theta, const Vec& v)> smooth_hess;
  // Mixed second derivatives of f: jtv maps a primal cotangent to parameter
  // space, (d^2 f / dtheta dx)^T v; jvp maps a parameter direction to primal
  // space.  jvp is only needed by forward-mode differentiation.
  std::function<Vec(const Vec& x, const Vec& theta, const Vec& v)> mixed_jtv;
  std::function<Vec(const Vec& x, const Vec& theta, const Vec& v)> mixed_jvp;

  // Linear part of g: cost(theta) plus its derivative products.
  std::function<Vec(const Vec& theta)> g_cost;
  std::function<Vec(const Vec& theta, const Vec& v)> g_cost_jtv;  // primal -> param
  std::function<Vec(const Vec& theta, const Vec& v)> g_cost_jvp;  // param -> primal

  // Saddle-point coupling (primal-dual solver only).
  ParamLinearOperator K;
  // Linear cost inside h^* (usually absent; the ball indicator is the dual
  // generator's domain).
  std::function<Vec(const Vec& theta)> h_cost;
  std::function<Vec(const Vec& theta, const Vec& v)> h_cost_jtv;  // dual -> param

  // Lipschitz constant of grad f (0 when f vanishes or unknown).
  double lipschitz_f = 0.0;

  // --- defaulted evaluation helpers ---------------------------------------
  Vec eval_smooth_grad(const Vec& x, const Vec& theta) const {
    return smooth_grad ? smooth_grad(x, theta) : Vec::Zero(x.size());
  }
  Vec eval_smooth_hess(const Vec& x, const Vec& theta, const Vec& v) const {
    return smooth_hess ? smooth_hess(x, theta, v) : Vec::Zero(v.size());
  }
  Vec eval_mixed_jtv(const Vec& x, const Vec& theta, const Vec& v) const {
    return mixed_jtv ? mixed_jtv(x, theta, v) : Vec::Zero(param_dim);
  }
  Vec eval_mixed_jvp(const Vec& x, const Vec& theta, const Vec& v) const {
    return mixed_jvp ? mixed_jvp(x, theta, v) : Vec::Zero(dim);
  }
  Vec eval_g_cost(const Vec& theta) const {
    return g_cost ? g_cost(theta) : Vec::Zero(dim);
  }
  Vec eval_g_cost_jtv(const Vec& theta, const Vec& v) const {
    return g_cost_jtv ? g_cost_jtv(theta, v) : Vec::Zero(param_dim);
  }
  Vec eval_g_cost_jvp(const Vec& theta, const Vec& v) const {
    return g_cost_jvp ? g_cost_jvp(theta, v) : Vec::Zero(dim);
  }
  Vec eval_h_cost(const Vec& theta) const {
    return h_cost ? h_cost(theta) : Vec::Zero(K.rows);
  }
  Vec eval_h_cost_jtv(const Vec& theta, const Vec& v) const {
    return h_cost_jtv ? h_cost_jtv(theta, v) : Vec::Zero(param_dim);
  }
  Vec eval_K_theta_jtv(const Vec& theta, const Vec& v, const Vec& w) const {
    return K.theta_jtv ? K.theta_jtv(theta, v, w) : Vec::Zero(param_dim);
  }
};

// Gradients of the upper-level loss at the lower-level output.
struct LossGrads {
  Vec wrt_x;      // (dL/dx)^T at (x*, theta)
  Vec wrt_theta;  // (dL/dtheta)^T (zero vector when the loss ignores theta)
};

}  // namespace bilevel
