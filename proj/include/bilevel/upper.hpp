#pragma once

// Upper-level (outer) optimizers driving the parameter vector: the inertial
// proximal step
//
//   theta^{k+1} = prox_{alpha ell}( theta^k - alpha grad + beta (theta^k - theta^{k-1}) )
//
// with ell a simple function (so its prox is a projection), a diagonally
// preconditioned adaptive step (exponential moment estimates with bias
// correction), and a generic outer loop alternating lower-level solve,
// hypergradient estimation, and one step.

#include "bilevel/types.hpp"

#include <functional>
#include <utility>
#include <vector>

namespace bilevel {

// One inertial proximal step; beta = 0 and ell = zero reduce to plain
// gradient descent.
Vec ipiano_step(const Vec& theta, const Vec& theta_prev, const Vec& grad, double rate,
                double beta, const SimpleFunction& ell);

struct AdamConfig {
  double rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Vec m;
  Vec v;
  int t = 0;

  static AdamState init(Index dim) { return {Vec::Zero(dim), Vec::Zero(dim), 0}; }
};

// One bias-corrected adaptive step (state updated in place).
Vec adam_step(AdamState& state, const Vec& theta, const Vec& grad, const AdamConfig& cfg);

enum class OuterMethod { GradientDescent, IPiano, Adam };

struct OuterConfig {
  OuterMethod method = OuterMethod::GradientDescent;
  int iterations = 0;
  double rate = 1e-3;
  double beta = 0.0;                            // iPiano inertia
  SimpleFunction ell = SimpleFunction::zero();  // iPiano regularizer
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

struct OuterLogRow {
  int iter = 0;
  double loss = kNaN;
  double grad_norm = kNaN;
  double seconds = 0.0;  // cumulative wall time after this iteration
};

struct OuterResult {
  std::vector<OuterLogRow> rows;
  Vec theta;
};

// Deterministic outer loop: evaluate(theta) returns the loss and its
// parameter gradient; one optimizer step per iteration, one log row per
// iteration.  iterations = 0 returns theta unchanged with an empty log.
OuterResult run_outer(const std::function<std::pair<double, Vec>(const Vec&)>& evaluate,
                      Vec theta0, const OuterConfig& cfg);

}  // namespace bilevel
