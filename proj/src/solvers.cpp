#include "bilevel/solvers.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace bilevel {
namespace {

bool strictly_inside(const BregmanGenerator& gen, const Vec& x) {
  if (!x.allFinite()) return false;
  switch (gen.kind) {
    case GeneratorKind::Euclidean:
      return true;
    case GeneratorKind::EntropyOrthant:
    case GeneratorKind::EntropySimplex:
      return (x.array() > 0.0).all();
    case GeneratorKind::BinaryEntropyInterval:
      return (x.array().abs() < 1.0).all();
  }
  return false;
}

[[noreturn]] void diverged(const char* solver, const char* which, int iter) {
  std::ostringstream msg;
  msg << solver << ": " << which << " iterate left the generator interior at iteration "
      << iter;
  throw DivergenceError(msg.str(), iter);
}

}  // namespace

LinearMap at_theta(const ParamLinearOperator& op, const Vec& theta) {
  LinearMap m;
  m.rows = op.rows;
  m.cols = op.cols;
  if (op.present()) {
    m.apply = [&op, theta](const Vec& v) { return op.apply(theta, v); };
    m.apply_adjoint = [&op, theta](const Vec& w) { return op.apply_adjoint(theta, w); };
  }
  return m;
}

double operator_norm_bound(const LinearMap& op, int iterations) {
  if (!op.apply || op.cols == 0) return 0.0;
  if (iterations < 1) throw InvalidInput("operator_norm_bound: iterations must be >= 1");
  // Fixed-seed generic start vector: deterministic, and with components in
  // every singular direction (structured sign patterns can be orthogonal to
  // the dominant mode of grid operators).
  std::mt19937_64 rng(0x9E3779B97F4A7C15ull);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Vec v(op.cols);
  for (Index i = 0; i < v.size(); ++i) v[i] = unit(rng);
  v.normalize();

  double sigma = 0.0;
  for (int k = 0; k < iterations; ++k) {
    Vec w = op.apply(v);
    sigma = w.norm();
    if (sigma == 0.0) return 0.0;
    v = op.apply_adjoint(w);
    const double nv = v.norm();
    if (nv == 0.0) return sigma;
    v /= nv;
  }
  return (op.apply(v)).norm();
}

Vec mirror_map_strict(const BregmanGenerator& gen, const Vec& x) {
  switch (gen.kind) {
    case GeneratorKind::Euclidean:
      return x;
    case GeneratorKind::EntropyOrthant:
    case GeneratorKind::EntropySimplex:
      return (x.array().log() + 1.0).matrix();
    case GeneratorKind::BinaryEntropyInterval:
      return x.unaryExpr([](double v) { return std::atanh(v); });
  }
  throw InvalidInput("mirror_map_strict: unknown kind");
}

double fbs_default_alpha(const LowerProblem& pb) {
  if (!(pb.lipschitz_f > 0.0))
    throw ConfigError("fbs_default_alpha: no Lipschitz constant recorded; step must be caller-mandated");
  return 1.0 / pb.lipschitz_f;
}

IterateTrace fbs_run(const LowerProblem& pb, const Vec& theta, const Vec& x0, int n,
                     const ProxSpec& prox, double alpha) {
  if (n < 0) throw InvalidInput("fbs_run: n must be nonnegative");
  if (!(alpha > 0.0)) throw InvalidInput("fbs_run: alpha must be positive");
  check_interior(prox.gen, x0, "fbs_run (x0)");

  IterateTrace trace;
  trace.kind = TraceKind::ForwardBackward;
  trace.theta = theta;
  trace.alpha = alpha;
  trace.iterates.reserve(static_cast<size_t>(n) + 1);
  trace.intermediates.reserve(static_cast<size_t>(n));
  trace.iterates.push_back(x0);

  if (pb.lipschitz_f > 0.0 && alpha > 1.0 / pb.lipschitz_f * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "fbs_run: alpha = " << alpha << " exceeds 1/L_f = " << 1.0 / pb.lipschitz_f;
    trace.warnings.push_back(msg.str());
  }

  const Vec gc = pb.eval_g_cost(theta);
  Vec x = x0;
  for (int k = 0; k < n; ++k) {
    const Vec c = pb.eval_smooth_grad(x, theta) + gc;
    trace.intermediates.push_back(mirror_map_strict(prox.gen, x) - alpha * c);
    Vec next = prox_apply(prox, x, c, alpha);
    if (!strictly_inside(prox.gen, next)) diverged("fbs_run", "primal", k + 1);
    trace.iterates.push_back(next);
    x = std::move(next);
  }
  return trace;
}

std::pair<double, double> pd_default_steps(double lipschitz_f, double K_norm) {
  if (lipschitz_f < 0.0 || K_norm < 0.0)
    throw InvalidInput("pd_default_steps: constants must be nonnegative");
  // Largest t with (1/t - L_f)(1/t) = L^2, i.e. 1/t the positive root of
  // r^2 - L_f r - L^2 = 0.
  const double r = 0.5 * (lipschitz_f + std::sqrt(lipschitz_f * lipschitz_f + 4.0 * K_norm * K_norm));
  const double t = (r > 0.0) ? 0.99 / r : 1.0;
  return {t, t};
}

IterateTrace pd_run(const LowerProblem& pb, const Vec& theta, const Vec& u0, const Vec& p0,
                    int n, const PDConfig& cfg) {
  if (n < 0) throw InvalidInput("pd_run: n must be nonnegative");
  if (!(cfg.tau > 0.0) || !(cfg.sigma > 0.0))
    throw InvalidInput("pd_run: steps must be positive");
  check_interior(cfg.primal.gen, u0, "pd_run (u0)");
  check_interior(cfg.dual.gen, p0, "pd_run (p0)");

  const double lhs = (1.0 / cfg.tau - pb.lipschitz_f) * (1.0 / cfg.sigma);
  const double rhs = cfg.K_norm_bound * cfg.K_norm_bound;
  if (!(lhs >= rhs)) {
    std::ostringstream msg;
    msg << "pd_run: step rule violated: (1/tau - L_f)/sigma = " << lhs << " < |K|^2 = " << rhs;
    throw ConfigError(msg.str());
  }

  IterateTrace trace;
  trace.kind = TraceKind::PrimalDual;
  trace.theta = theta;
  trace.tau = cfg.tau;
  trace.sigma = cfg.sigma;
  trace.ergodic = cfg.ergodic;
  trace.iterates.reserve(static_cast<size_t>(n) + 1);
  trace.duals.reserve(static_cast<size_t>(n) + 1);
  trace.iterates.push_back(u0);
  trace.duals.push_back(p0);
  if (cfg.ergodic) trace.ergodic_average = u0;

  const bool has_K = pb.K.present();
  const Vec gc = pb.eval_g_cost(theta);
  const Vec hc = pb.eval_h_cost(theta);
  Vec u = u0, p = p0;
  for (int k = 0; k < n; ++k) {
    Vec a_u = pb.eval_smooth_grad(u, theta) + gc;
    if (has_K) a_u += pb.K.apply_adjoint(theta, p);
    Vec unext = prox_apply(cfg.primal, u, a_u, cfg.tau);
    if (!strictly_inside(cfg.primal.gen, unext)) diverged("pd_run", "primal", k + 1);

    Vec a_p = hc;
    if (has_K) a_p -= pb.K.apply(theta, 2.0 * unext - u);
    Vec pnext = prox_apply(cfg.dual, p, a_p, cfg.sigma);
    if (!strictly_inside(cfg.dual.gen, pnext)) diverged("pd_run", "dual", k + 1);

    trace.iterates.push_back(unext);
    trace.duals.push_back(pnext);
    if (cfg.ergodic)
      trace.ergodic_average += (unext - trace.ergodic_average) / static_cast<double>(k + 2);
    u = std::move(unext);
    p = std::move(pnext);
  }
  return trace;
}

}  // namespace bilevel
