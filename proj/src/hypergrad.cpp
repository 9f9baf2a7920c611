#include "bilevel/hypergrad.hpp"

#include <cmath>
#include <sstream>

namespace bilevel {
namespace {

// Consecutive back-iterations of adjoint-norm growth before flagging.
constexpr int kSpectralWindow = 20;

struct SpectralMonitor {
  double prev = kNaN;
  int streak = 0;

  void observe(double norm, GradientReport& report) {
    if (std::isfinite(prev) && norm > prev) {
      if (++streak >= kSpectralWindow && !report.spectral_warning) {
        report.spectral_warning = true;
        std::ostringstream msg;
        msg << "adjoint norm grew over " << kSpectralWindow
            << " consecutive back-iterations (step map not a contraction here)";
        report.warnings.push_back(msg.str());
      }
    } else {
      streak = 0;
    }
    prev = norm;
  }
};

int resolve_n_back(int n_back, int steps, const char* who) {
  if (n_back < 0) return steps;
  if (n_back > steps) {
    std::ostringstream msg;
    msg << who << ": n_back = " << n_back << " exceeds the " << steps << " recorded steps";
    throw ConfigError(msg.str());
  }
  return n_back;
}

}  // namespace

GradientReport reverse_abstract(const IterateTrace& trace, const StepJacobians& jac,
                                const LossGrads& loss, int n_back) {
  const int N = trace.steps();
  const int nb = resolve_n_back(n_back, N, "reverse_abstract");
  GradientReport report;
  report.estimator = "reverse-abstract";
  report.n_forward = N;
  report.n_back = nb;
  report.contributions.reserve(static_cast<size_t>(nb));

  Vec z = loss.wrt_x;
  Vec w = Vec::Zero(jac.param_dim);
  SpectralMonitor monitor;
  for (int k = N - 1; k >= N - nb; --k) {
    const Vec dw = jac.theta_transpose(k, z);
    w += dw;
    report.contributions.push_back(dw.norm());
    z = jac.x_transpose(k, z);
    monitor.observe(z.norm(), report);
  }
  report.gradient = w + loss.wrt_theta;
  return report;
}

// ---------------------------------------------------------- reverse (FBS) ---

namespace {

// One transposed step of the forward-backward map at anchor x (the recorded
// iterate) with prox output `point` (the next recorded iterate):
//   (dA/dx)^T z     = (dP/dxbar)^T z + H_f (dP/dc)^T z
//   (dA/dtheta)^T z = (d c / dtheta)^T (dP/dc)^T z
struct FbsStepContext {
  const LowerProblem& pb;
  const ProxSpec& prox;
  Vec theta;
  double alpha;

  struct Products {
    Vec z_next;  // (dA/dx)^T z
    Vec dw;      // (dA/dtheta)^T z
  };

  Products transposed(const Vec& x, const Vec& point, const Vec& z) const {
    const Vec c = pb.eval_smooth_grad(x, theta) + pb.eval_g_cost(theta);
    const Vec cv = prox_jtv_cost(prox, x, c, alpha, point, z);
    Products out;
    out.z_next = prox_jtv_point(prox, x, c, alpha, point, z) + pb.eval_smooth_hess(x, theta, cv);
    out.dw = pb.eval_mixed_jtv(x, theta, cv) + pb.eval_g_cost_jtv(theta, cv);
    return out;
  }
};

}  // namespace

GradientReport reverse_fbs(const IterateTrace& trace, const LowerProblem& pb,
                           const ProxSpec& prox, const LossGrads& loss, int n_back) {
  if (trace.kind != TraceKind::ForwardBackward)
    throw InvalidInput("reverse_fbs: expected a forward-backward trace");
  const int N = trace.steps();
  const int nb = resolve_n_back(n_back, N, "reverse_fbs");
  GradientReport report;
  report.estimator = "reverse-fbs";
  report.n_forward = N;
  report.n_back = nb;
  report.contributions.reserve(static_cast<size_t>(nb));

  const FbsStepContext ctx{pb, prox, trace.theta, trace.alpha};
  Vec z = loss.wrt_x;
  Vec w = Vec::Zero(pb.param_dim);
  SpectralMonitor monitor;
  for (int k = N - 1; k >= N - nb; --k) {
    auto prod = ctx.transposed(trace.iterates[static_cast<size_t>(k)],
                               trace.iterates[static_cast<size_t>(k) + 1], z);
    w += prod.dw;
    report.contributions.push_back(prod.dw.norm());
    z = std::move(prod.z_next);
    monitor.observe(z.norm(), report);
  }
  report.gradient = w + loss.wrt_theta;
  return report;
}

// ----------------------------------------------------------- reverse (PD) ---

GradientReport reverse_pd(const IterateTrace& trace, const LowerProblem& pb,
                          const ProxSpec& primal, const ProxSpec& dual,
                          const LossGrads& loss, int n_back) {
  if (trace.kind != TraceKind::PrimalDual)
    throw InvalidInput("reverse_pd: expected a primal-dual trace");
  const int N = trace.steps();
  const int nb = resolve_n_back(n_back, N, "reverse_pd");
  GradientReport report;
  report.estimator = "reverse-pd";
  report.n_forward = N;
  report.n_back = nb;
  report.contributions.reserve(static_cast<size_t>(nb));

  const Vec& theta = trace.theta;
  const double tau = trace.tau, sigma = trace.sigma;
  const bool has_K = pb.K.present();
  const Vec gc = pb.eval_g_cost(theta);
  const Vec hc = pb.eval_h_cost(theta);

  // Ergodic loss: the recorded output is the mean of u^0..u^N, so every level
  // receives the scaled seed.
  const double seed_scale = trace.ergodic ? 1.0 / static_cast<double>(N + 1) : 1.0;
  Vec z = seed_scale * loss.wrt_x;
  Vec q = Vec::Zero(trace.duals.empty() ? 0 : trace.duals.back().size());
  Vec w = Vec::Zero(pb.param_dim);
  SpectralMonitor monitor;

  for (int k = N - 1; k >= N - nb; --k) {
    const Vec& u = trace.iterates[static_cast<size_t>(k)];
    const Vec& unext = trace.iterates[static_cast<size_t>(k) + 1];
    const Vec& p = trace.duals[static_cast<size_t>(k)];
    const Vec& pnext = trace.duals[static_cast<size_t>(k) + 1];
    Vec dw = Vec::Zero(pb.param_dim);

    // Backprop through the dual update p^{k+1} = prox(p^k, hc - K v, sigma),
    // v = 2 u^{k+1} - u^k.  Its v-cotangent completes the level-(k+1) primal
    // cotangent before the primal update is processed.
    const Vec v = 2.0 * unext - u;
    Vec a_p = hc;
    if (has_K) a_p -= pb.K.apply(theta, v);
    const Vec cvp = prox_jtv_cost(dual, p, a_p, sigma, pnext, q);
    Vec q_prev = prox_jtv_point(dual, p, a_p, sigma, pnext, q);
    Vec z_level = z;
    Vec z_prev = Vec::Zero(u.size());
    if (has_K) {
      const Vec Kt_cvp = pb.K.apply_adjoint(theta, cvp);
      z_level -= 2.0 * Kt_cvp;
      z_prev += Kt_cvp;
      dw -= pb.eval_K_theta_jtv(theta, v, cvp);
    }
    dw += pb.eval_h_cost_jtv(theta, cvp);

    // Backprop through the primal update u^{k+1} = prox(u^k, grad f + gc +
    // K^T p^k, tau) with the completed cotangent z_level.
    Vec a_u = pb.eval_smooth_grad(u, theta) + gc;
    if (has_K) a_u += pb.K.apply_adjoint(theta, p);
    const Vec cvu = prox_jtv_cost(primal, u, a_u, tau, unext, z_level);
    z_prev += prox_jtv_point(primal, u, a_u, tau, unext, z_level) +
              pb.eval_smooth_hess(u, theta, cvu);
    if (has_K) {
      q_prev += pb.K.apply(theta, cvu);
      dw += pb.eval_K_theta_jtv(theta, cvu, p);
    }
    dw += pb.eval_mixed_jtv(u, theta, cvu) + pb.eval_g_cost_jtv(theta, cvu);

    w += dw;
    report.contributions.push_back(dw.norm());
    z = std::move(z_prev);
    if (trace.ergodic) z += seed_scale * loss.wrt_x;
    q = std::move(q_prev);
    monitor.observe(std::hypot(z.norm(), q.norm()), report);
  }
  report.gradient = w + loss.wrt_theta;
  return report;
}

// ----------------------------------------------------------- forward mode ---

ForwardUnrolled forward_unrolled(const LowerProblem& pb, const Vec& theta, const Vec& x0,
                                 int n, const ProxSpec& prox, double alpha,
                                 const Mat& directions) {
  if (directions.rows() != pb.param_dim)
    throw InvalidInput("forward_unrolled: directions must have param_dim rows");
  ForwardUnrolled out;
  out.trace = fbs_run(pb, theta, x0, n, prox, alpha);
  out.tangents = Mat::Zero(x0.size(), directions.cols());

  const Vec gc = pb.eval_g_cost(theta);
  for (Index j = 0; j < directions.cols(); ++j) {
    const Vec v = directions.col(j);
    Vec d = Vec::Zero(x0.size());
    for (int k = 0; k < out.trace.steps(); ++k) {
      const Vec& x = out.trace.iterates[static_cast<size_t>(k)];
      const Vec& point = out.trace.iterates[static_cast<size_t>(k) + 1];
      const Vec c = pb.eval_smooth_grad(x, theta) + gc;
      const Vec dc = pb.eval_smooth_hess(x, theta, d) + pb.eval_mixed_jvp(x, theta, v) +
                     pb.eval_g_cost_jvp(theta, v);
      d = prox_jvp_point(prox, x, c, alpha, point, d) +
          prox_jvp_cost(prox, x, c, alpha, point, dc);
    }
    out.tangents.col(j) = d;
  }
  return out;
}

// ------------------------------------------------------------ fixed point ---

GradientReport fixedpoint_neumann_abstract(const std::function<Vec(const Vec&)>& x_transpose,
                                           const std::function<Vec(const Vec&)>& theta_transpose,
                                           Index param_dim, const LossGrads& loss, int n0) {
  if (n0 < 0) throw InvalidInput("fixedpoint_neumann: n0 must be nonnegative");
  GradientReport report;
  report.estimator = "fixedpoint-neumann";
  report.n_back = n0;
  report.contributions.reserve(static_cast<size_t>(n0));

  Vec z = loss.wrt_x;
  Vec w = Vec::Zero(param_dim);
  SpectralMonitor monitor;
  for (int k = 0; k < n0; ++k) {
    const Vec dw = theta_transpose(z);
    w += dw;
    report.contributions.push_back(dw.norm());
    z = x_transpose(z);
    monitor.observe(z.norm(), report);
  }
  report.gradient = w + loss.wrt_theta;
  return report;
}

namespace {

struct FrozenFbsMap {
  FbsStepContext ctx;
  Vec xstar;
  Vec point;  // A(xstar)

  static FrozenFbsMap make(const LowerProblem& pb, const Vec& theta, const Vec& xstar,
                           const ProxSpec& prox, double alpha) {
    FrozenFbsMap m{{pb, prox, theta, alpha}, xstar, Vec()};
    const Vec c = pb.eval_smooth_grad(xstar, theta) + pb.eval_g_cost(theta);
    m.point = prox_apply(prox, xstar, c, alpha);
    return m;
  }

  double residual() const { return (xstar - point).norm(); }
};

}  // namespace

GradientReport fixedpoint_neumann(const LowerProblem& pb, const Vec& theta, const Vec& xstar,
                                  const ProxSpec& prox, double alpha, const LossGrads& loss,
                                  int n0) {
  const auto map = FrozenFbsMap::make(pb, theta, xstar, prox, alpha);
  auto report = fixedpoint_neumann_abstract(
      [&](const Vec& z) { return map.ctx.transposed(map.xstar, map.point, z).z_next; },
      [&](const Vec& z) { return map.ctx.transposed(map.xstar, map.point, z).dw; },
      pb.param_dim, loss, n0);
  report.fixed_point_residual = map.residual();
  return report;
}

GradientReport fixedpoint_implicit(const LowerProblem& pb, const Vec& theta, const Vec& xstar,
                                   const ProxSpec& prox, double alpha, const LossGrads& loss,
                                   double tol, int max_solve_iters) {
  if (!(tol > 0.0)) throw InvalidInput("fixedpoint_implicit: tol must be positive");
  if (max_solve_iters < 1) throw InvalidInput("fixedpoint_implicit: max_solve_iters must be >= 1");
  const auto map = FrozenFbsMap::make(pb, theta, xstar, prox, alpha);

  // Solve (I - M^T) z = xi by z <- M^T z + xi; the iterate increment equals
  // the residual of the previous iterate.
  const Vec& xi = loss.wrt_x;
  Vec z = xi;
  double residual = kNaN;
  int used = 0;
  bool converged = false;
  for (int k = 0; k < max_solve_iters; ++k) {
    Vec znext = map.ctx.transposed(map.xstar, map.point, z).z_next + xi;
    residual = (znext - z).norm();
    z = std::move(znext);
    used = k + 1;
    if (residual <= tol) {
      converged = true;
      break;
    }
  }

  GradientReport report;
  report.estimator = "fixedpoint-implicit";
  report.gradient = map.ctx.transposed(map.xstar, map.point, z).dw + loss.wrt_theta;
  report.fixed_point_residual = map.residual();
  report.solve_residual = residual;
  report.solve_iterations = used;
  report.converged = converged;
  if (!converged) {
    std::ostringstream msg;
    msg << "fixedpoint_implicit: adjoint solve residual " << residual << " above tol " << tol
        << " after " << used << " iterations";
    report.warnings.push_back(msg.str());
    throw NonConvergedSolve(msg.str(), std::move(report));
  }
  return report;
}

}  // namespace bilevel
