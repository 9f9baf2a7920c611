#include "bilevel/upper.hpp"

#include <chrono>
#include <cmath>

namespace bilevel {

Vec ipiano_step(const Vec& theta, const Vec& theta_prev, const Vec& grad, double rate,
                double beta, const SimpleFunction& ell) {
  if (!(rate > 0.0)) throw InvalidInput("ipiano_step: rate must be positive");
  if (beta < 0.0 || beta >= 1.0) throw InvalidInput("ipiano_step: beta must lie in [0, 1)");
  Vec next = theta - rate * grad + beta * (theta - theta_prev);
  return next.unaryExpr([&](double v) { return project_simple(ell, v); });
}

Vec adam_step(AdamState& state, const Vec& theta, const Vec& grad, const AdamConfig& cfg) {
  if (!(cfg.rate > 0.0)) throw InvalidInput("adam_step: rate must be positive");
  if (state.m.size() != theta.size()) state = AdamState::init(theta.size());
  state.t += 1;
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
  state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
  const double mc = 1.0 - std::pow(cfg.beta1, state.t);
  const double vc = 1.0 - std::pow(cfg.beta2, state.t);
  const Vec mhat = state.m / mc;
  const Vec vhat = state.v / vc;
  return theta - cfg.rate * mhat.cwiseQuotient((vhat.cwiseSqrt().array() + cfg.eps).matrix());
}

OuterResult run_outer(const std::function<std::pair<double, Vec>(const Vec&)>& evaluate,
                      Vec theta0, const OuterConfig& cfg) {
  if (cfg.iterations < 0) throw InvalidInput("run_outer: iterations must be nonnegative");
  OuterResult out;
  out.theta = std::move(theta0);
  out.rows.reserve(static_cast<size_t>(cfg.iterations));

  Vec theta_prev = out.theta;
  AdamState adam = AdamState::init(out.theta.size());
  const AdamConfig adam_cfg{cfg.rate, cfg.beta1, cfg.beta2, cfg.eps};
  const auto start = std::chrono::steady_clock::now();
  for (int k = 0; k < cfg.iterations; ++k) {
    const auto [loss, grad] = evaluate(out.theta);
    Vec next;
    switch (cfg.method) {
      case OuterMethod::GradientDescent:
        next = ipiano_step(out.theta, out.theta, grad, cfg.rate, 0.0, SimpleFunction::zero());
        break;
      case OuterMethod::IPiano:
        next = ipiano_step(out.theta, theta_prev, grad, cfg.rate, cfg.beta, cfg.ell);
        break;
      case OuterMethod::Adam:
        next = adam_step(adam, out.theta, grad, adam_cfg);
        break;
    }
    theta_prev = out.theta;
    out.theta = std::move(next);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.rows.push_back({k, loss, grad.norm(), secs});
  }
  return out;
}

}  // namespace bilevel
