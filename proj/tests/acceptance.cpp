// Acceptance suite: ten end-to-end checks over the toy study problem, the
// prox/solver kernels, and the segmentation pipeline.  Each criterion prints
// exactly one PASS/FAIL line; the exit code is the number of failures.

#include "bilevel/bregman.hpp"
#include "bilevel/hypergrad.hpp"
#include "bilevel/segmentation.hpp"
#include "bilevel/solvers.hpp"
#include "bilevel/toy.hpp"
#include "bilevel/types.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace bilevel;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int g_failures = 0;

void report(int idx, const std::string& name, bool ok, const std::string& detail) {
  std::printf("%s %2d %s: %s\n", ok ? "PASS" : "FAIL", idx, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

void run_criterion(int idx, const std::string& name, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(idx, name, false, std::string("exception: ") + e.what());
  }
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

double rel_gap(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(b), 1e-12);
}

// ---------------------------------------------------------------- 1 ----------

void criterion_analytic() {
  toy::ToyConfig cfg;  // lambda = b = 1, gt = 0.5, alpha = 0.5
  cfg.theta_eval = 0.3;
  cfg.n_forward = 200;
  cfg.n_back = 200;
  const auto t0 = Clock::now();
  const GradientReport rep = toy::run_estimator(toy::EstimatorKind::BregmanFB, cfg);
  const double secs = seconds_since(t0);
  const double ref = toy::analytic_gradient(cfg.theta_eval, cfg).midpoint();
  const double err = std::abs(rep.gradient(0) - ref);
  report(1, "analytic agreement (bregman-fb 200/200)",
         err <= 1e-4 && secs < 1.0,
         "abs_error=" + fmt(err) + " ref=" + fmt(ref) + " time=" + fmt(secs) + "s");
}

// ---------------------------------------------------------------- 2 ----------

void criterion_unrolled_exactness() {
  toy::ToyConfig cfg;
  cfg.theta_eval = 0.3;
  cfg.n_forward = 200;  // mu = 1e-6 and solve_tol = 1e-10 are the defaults
  bool ok = true;
  std::string detail;
  for (const toy::EstimatorKind kind : toy::kAllEstimators) {
    const bool exact =
        kind == toy::EstimatorKind::ProjGD || kind == toy::EstimatorKind::BregmanFB;
    const double est = toy::run_estimator(kind, cfg).gradient(0);
    const double h = exact ? 1e-6 : 1e-5;
    const double fd = (toy::unrolled_loss(kind, cfg, cfg.theta_eval + h) -
                       toy::unrolled_loss(kind, cfg, cfg.theta_eval - h)) /
                      (2.0 * h);
    const double rel = rel_gap(est, fd);
    const double tol = exact ? 1e-6 : 1e-2;
    if (rel > tol) ok = false;
    if (!detail.empty()) detail += " ";
    detail += toy::estimator_name(kind) + "=" + fmt(rel);
  }
  report(2, "unrolled gradients match finite differences", ok, detail);
}

// ---------------------------------------------------------------- 3 ----------

void criterion_kink_containment() {
  toy::ToyConfig cfg;
  cfg.theta_eval = 0.0;
  cfg.n_forward = 200;
  const Interval ref = toy::analytic_gradient(0.0, cfg);
  bool ok = !ref.is_point();
  double worst = 0.0;
  for (const toy::EstimatorKind kind : toy::kAllEstimators) {
    const double est = toy::run_estimator(kind, cfg).gradient(0);
    const double dist = ref.distance(est);
    worst = std::max(worst, dist);
    if (dist != 0.0) ok = false;
  }
  report(3, "containment in the derivative interval at the kink", ok,
         "interval=[" + fmt(ref.lo) + "," + fmt(ref.hi) + "] max_distance=" + fmt(worst));
}

// ---------------------------------------------------------------- 4 ----------

void criterion_backiter_monotone() {
  const std::vector<int> backs = {5, 10, 20, 50, 100, 200};
  bool ok = true;
  std::string detail;
  for (const toy::EstimatorKind kind :
       {toy::EstimatorKind::ProjGD, toy::EstimatorKind::BregmanFB}) {
    toy::ToyConfig cfg;
    cfg.theta_eval = 0.3;
    cfg.n_forward = 200;
    const Interval ref = toy::analytic_gradient(cfg.theta_eval, cfg);
    double prev = kNaN;
    double last = kNaN;
    for (const int nb : backs) {
      cfg.n_back = nb;
      const double err = ref.distance(toy::run_estimator(kind, cfg).gradient(0));
      // non-increasing, modulo rounding noise at the accuracy floor
      if (std::isfinite(prev) && err > prev + 1e-15) ok = false;
      prev = err;
      last = err;
    }
    if (!detail.empty()) detail += " ";
    detail += toy::estimator_name(kind) + ":err(200)=" + fmt(last);
  }
  report(4, "error non-increasing in back-iterations", ok, detail);
}

// ---------------------------------------------------------------- 5 ----------

void criterion_contribution_decay() {
  toy::ToyConfig cfg;
  cfg.theta_eval = 0.3;
  cfg.n_forward = 200;
  cfg.n_back = 200;
  const GradientReport rep = toy::run_estimator(toy::EstimatorKind::BregmanFB, cfg);
  const size_t n = rep.contributions.size();
  bool ok = n == 200;
  // final 100 back-iterations = the last 100 recorded contributions
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (size_t i = n >= 100 ? n - 100 : 0; i < n; ++i) {
    const double c = rep.contributions[i];
    if (!(c > 0.0)) {
      ok = false;
      break;
    }
    const double x = static_cast<double>(m);
    const double y = std::log(c);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  double ratio = kNaN;
  if (ok && m > 1) {
    const double slope = (sxy - sx * sy / m) / (sxx - sx * sx / m);
    ratio = std::exp(slope);
    ok = ratio < 1.0;
  }
  report(5, "geometric decay of back-iteration contributions", ok, "fitted_ratio=" + fmt(ratio));
}

// ---------------------------------------------------------------- 6 ----------

void criterion_forward_reverse() {
  bool ok = true;
  double worst = 0.0;
  for (const toy::EstimatorKind kind :
       {toy::EstimatorKind::BregmanFB, toy::EstimatorKind::ProjGD}) {
    for (const double theta : {-0.4, 0.0, 0.3, 1.2}) {
      toy::ToyConfig cfg;
      cfg.theta_eval = theta;
      cfg.n_forward = 100;
      const double reverse = toy::run_estimator(kind, cfg).gradient(0);

      const LowerProblem pb = toy::toy_problem(cfg, theta);
      ProxSpec prox;
      double alpha = cfg.alpha;
      if (kind == toy::EstimatorKind::ProjGD) {
        prox.gen = BregmanGenerator::euclidean(1);
        prox.fn = SimpleFunction::nonnegative();
        alpha = toy::projgd_alpha(cfg, theta);
      } else {
        prox.gen = BregmanGenerator::entropy_orthant(1);
      }
      const ForwardUnrolled fw =
          forward_unrolled(pb, Vec::Constant(1, theta), Vec::Constant(1, cfg.x0),
                           cfg.n_forward, prox, alpha, Mat::Ones(1, 1));
      const LossGrads lg = toy::toy_loss_grads(cfg, fw.trace.final_iterate()(0));
      const double forward = lg.wrt_x(0) * fw.tangents(0, 0) + lg.wrt_theta(0);

      const double rel =
          std::abs(forward - reverse) / std::max({std::abs(forward), std::abs(reverse), 1e-12});
      worst = std::max(worst, rel);
      if (rel > 1e-12) ok = false;
    }
  }
  report(6, "forward mode agrees with reverse mode", ok, "max_rel=" + fmt(worst));
}

// ---------------------------------------------------------------- 7 ----------

struct ProxCheckStats {
  double residual = 0.0;
  double jac_rel = 0.0;

  void take(const ProxCheckStats& o) {
    residual = std::max(residual, o.residual);
    jac_rel = std::max(jac_rel, o.jac_rel);
  }
};

double directional_rel(const Mat& J, const Vec& v, const std::function<Vec(const Vec&)>& map,
                       const Vec& at, double h) {
  const Vec fd = (map(at + h * v) - map(at - h * v)) / (2.0 * h);
  const Vec jv = J * v;
  return (jv - fd).norm() / std::max(fd.norm(), 1e-8);
}

void criterion_prox() {
  std::mt19937_64 rng(411);
  auto uni = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  auto uvec = [&](Index d, double lo, double hi) {
    Vec v(d);
    for (Index i = 0; i < d; ++i) v(i) = uni(lo, hi);
    return v;
  };
  const double h = 1e-6;

  ProxCheckStats orthant, simplex, interval, euclid;
  for (int trial = 0; trial < 100; ++trial) {
    {  // entropy / nonnegative orthant
      const Vec xb = uvec(3, 0.3, 2.0), c = uvec(3, -1.0, 1.0);
      const double a = uni(0.2, 0.8);
      const ProxResult r = prox_entropy_orthant(xb, c, a);
      ProxCheckStats s;
      s.residual = (r.point.array().log() - xb.array().log() + a * c.array()).abs().maxCoeff();
      const Vec v = uvec(3, -1.0, 1.0);
      s.jac_rel = directional_rel(
          r.jacobian_wrt_point, v,
          [&](const Vec& x) { return prox_entropy_orthant(x, c, a).point; }, xb, h);
      s.jac_rel = std::max(
          s.jac_rel, directional_rel(
                         r.jacobian_wrt_cost, v,
                         [&](const Vec& cc) { return prox_entropy_orthant(xb, cc, a).point; }, c,
                         h));
      orthant.take(s);
    }
    {  // entropy / unit simplex
      Vec xb = uvec(4, 0.2, 1.2);
      xb /= xb.sum();
      const Vec c = uvec(4, -1.0, 1.0);
      const double a = uni(0.2, 0.8);
      const ProxResult r = prox_entropy_simplex(xb, c, a);
      ProxCheckStats s;
      const Vec g = (r.point.array().log() - xb.array().log()).matrix() + a * c;
      s.residual = (g.array() - g.mean()).abs().maxCoeff();
      Vec v = uvec(4, -1.0, 1.0);
      v.array() -= v.mean();  // tangent to the simplex, so the probe stays feasible
      s.jac_rel = directional_rel(
          r.jacobian_wrt_point, v,
          [&](const Vec& x) { return prox_entropy_simplex(x, c, a).point; }, xb, h);
      const Vec vc = uvec(4, -1.0, 1.0);
      s.jac_rel = std::max(
          s.jac_rel, directional_rel(
                         r.jacobian_wrt_cost, vc,
                         [&](const Vec& cc) { return prox_entropy_simplex(xb, cc, a).point; }, c,
                         h));
      simplex.take(s);
    }
    {  // binary entropy / [-1,1] box
      const Vec xb = uvec(3, -0.7, 0.7), c = uvec(3, -1.0, 1.0);
      const double a = uni(0.2, 0.8);
      const ProxResult r = prox_binary_entropy_interval(xb, c, a);
      ProxCheckStats s;
      for (Index i = 0; i < 3; ++i)
        s.residual = std::max(s.residual, std::abs(std::atanh(r.point(i)) -
                                                   std::atanh(xb(i)) + a * c(i)));
      const Vec v = uvec(3, -1.0, 1.0);
      s.jac_rel = directional_rel(
          r.jacobian_wrt_point, v,
          [&](const Vec& x) { return prox_binary_entropy_interval(x, c, a).point; }, xb, h);
      s.jac_rel = std::max(
          s.jac_rel,
          directional_rel(
              r.jacobian_wrt_cost, v,
              [&](const Vec& cc) { return prox_binary_entropy_interval(xb, cc, a).point; }, c,
              h));
      interval.take(s);
    }
    {  // euclidean projection, cost folded into the anchor, away from the kink
      const Vec xb = uvec(3, 0.5, 1.5), c = uvec(3, -0.3, 0.3);
      const double a = 0.4;
      const SimpleFunction fn = SimpleFunction::nonnegative();
      const Vec anchor = xb - a * c;
      const ProxResult r = prox_euclidean(anchor, fn, a);
      ProxCheckStats s;
      s.residual = (r.point - anchor).lpNorm<Eigen::Infinity>();  // interior: identity
      const Vec v = uvec(3, -1.0, 1.0);
      s.jac_rel = directional_rel(
          r.jacobian_wrt_point, v, [&](const Vec& x) { return prox_euclidean(x, fn, a).point; },
          anchor, h);
      s.jac_rel = std::max(
          s.jac_rel,
          directional_rel(
              r.jacobian_wrt_cost, v,
              [&](const Vec& cc) { return prox_euclidean(xb - a * cc, fn, a).point; }, c, h));
      euclid.take(s);
    }
  }

  ProxCheckStats all;
  all.take(orthant);
  all.take(simplex);
  all.take(interval);
  all.take(euclid);
  report(7, "prox optimality and derivatives (100 samples/family)",
         all.residual <= 1e-10 && all.jac_rel <= 1e-5,
         "max_residual=" + fmt(all.residual) + " max_jac_rel=" + fmt(all.jac_rel));
}

// ---------------------------------------------------------------- 8 ----------

void criterion_pd_feasibility() {
  const Index K = 3;
  const seg::SegInstance inst = seg::checker_instance(16, 16, K);
  seg::LinearUnaryModel model = seg::checker_model(K);
  model.log_smoothness = 0.0;  // unit smoothness scale, so |K| <= sqrt(8)
  const Vec theta = model.flatten();
  const seg::SolveResult sol = seg::solve_instance(inst, K, theta, 150);

  const Index npix = inst.grid.npix();
  double simplex_viol = 0.0;
  for (const Vec& u : sol.trace.iterates) {
    const Eigen::Map<const Mat> um(u.data(), npix, K);
    simplex_viol = std::max(simplex_viol, std::max(0.0, -um.minCoeff()));
    simplex_viol = std::max(
        simplex_viol, (um.rowwise().sum().array() - 1.0).abs().maxCoeff());
  }
  double dual_excess = 0.0;
  for (const Vec& p : sol.trace.duals)
    dual_excess = std::max(dual_excess, p.lpNorm<Eigen::Infinity>() - 1.0);

  const LowerProblem pb = seg::instance_problem(inst, K);
  const LinearMap Kmap = at_theta(pb.K, theta);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Vec v(Kmap.cols), w(Kmap.rows);
  for (Index i = 0; i < v.size(); ++i) v(i) = d(rng);
  for (Index i = 0; i < w.size(); ++i) w(i) = d(rng);
  const double a = Kmap.apply(v).dot(w);
  const double b = v.dot(Kmap.apply_adjoint(w));
  const double adjoint_gap = std::abs(a - b) / std::max(1.0, std::abs(a));

  const double norm_est = operator_norm_bound(Kmap);
  const double bound = std::sqrt(8.0);

  report(8, "primal-dual feasibility and adjointness (16x16, 3 labels)",
         simplex_viol <= 1e-10 && dual_excess <= 1e-15 && adjoint_gap <= 1e-12 &&
             norm_est <= bound,
         "simplex_viol=" + fmt(simplex_viol) + " dual_excess=" + fmt(dual_excess) +
             " adjoint_gap=" + fmt(adjoint_gap) + " norm_est=" + fmt(norm_est) + "<=" +
             fmt(bound));
}

// ---------------------------------------------------------------- 9 ----------

void criterion_segmentation_gradient() {
  const auto t0 = Clock::now();
  const Index K = 2;
  const int n_inner = 10;
  const seg::SegInstance inst = seg::checker_instance(4, 4, K);
  const seg::LinearUnaryModel model = seg::checker_model(K);
  const Vec theta0 = model.flatten();
  const seg::BatchEval ev = seg::evaluate_batch({inst}, model, n_inner);

  // The steps are run constants: probe the composite with them held fixed.
  const seg::SolveResult sol0 = seg::solve_instance(inst, K, theta0, n_inner);
  auto probe = [&](const Vec& th) {
    const seg::SolveResult s = seg::solve_instance(inst, K, th, n_inner, sol0.tau, sol0.sigma);
    return seg::softmax_loss(s.state.u, inst.gt).value;
  };
  double worst = 0.0;
  for (Index c = 0; c < theta0.size(); ++c) {
    const double h = 1e-6 * std::max(1.0, std::abs(theta0(c)));
    Vec tp = theta0, tm = theta0;
    tp(c) += h;
    tm(c) -= h;
    const double fd = (probe(tp) - probe(tm)) / (2.0 * h);
    worst = std::max(worst, rel_gap(ev.gradient(c), fd));
  }
  const double secs = seconds_since(t0);
  report(9, "segmentation gradient matches finite differences (4x4, 2 labels)",
         worst <= 1e-4 && secs < 10.0, "max_rel=" + fmt(worst) + " time=" + fmt(secs) + "s");
}

// --------------------------------------------------------------- 10 ----------

void criterion_training() {
  const std::vector<seg::SegInstance> ds = seg::synthetic_dataset(32, 32, 4);
  const seg::LinearUnaryModel init = seg::synthetic_init(3, 3);
  seg::TrainConfig tc;
  tc.outer.method = OuterMethod::Adam;
  tc.outer.iterations = 200;
  tc.outer.rate = 1e-3;
  tc.n_inner = 100;

  const auto t0 = Clock::now();
  const seg::TrainResult res = seg::train(ds, init, tc);
  const double secs = seconds_since(t0);
  const double first = res.rows.front().loss;
  const double last = res.rows.back().loss;
  const double reduction = 1.0 - last / first;
  const double acc = res.rows.back().pixel_acc;

  seg::TrainConfig tc10 = tc;
  tc10.n_inner = 10;
  const seg::TrainResult res10 = seg::train(ds, init, tc10);
  const double last10 = res10.rows.back().loss;
  const bool ordinal = last <= 1.05 * last10;

  report(10, "synthetic training (200 adam iterations, n_inner=100)",
         reduction >= 0.5 && acc >= 0.95 && secs < 300.0 && ordinal,
         "loss_reduction=" + fmt(reduction) + " pixel_acc=" + fmt(acc) + " time=" + fmt(secs) +
             "s inner100_vs_inner10=" + fmt(last) + "/" + fmt(last10));
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");
  run_criterion(1, "analytic agreement (bregman-fb 200/200)", criterion_analytic);
  run_criterion(2, "unrolled gradients match finite differences", criterion_unrolled_exactness);
  run_criterion(3, "containment in the derivative interval at the kink",
                criterion_kink_containment);
  run_criterion(4, "error non-increasing in back-iterations", criterion_backiter_monotone);
  run_criterion(5, "geometric decay of back-iteration contributions",
                criterion_contribution_decay);
  run_criterion(6, "forward mode agrees with reverse mode", criterion_forward_reverse);
  run_criterion(7, "prox optimality and derivatives (100 samples/family)", criterion_prox);
  run_criterion(8, "primal-dual feasibility and adjointness (16x16, 3 labels)",
                criterion_pd_feasibility);
  run_criterion(9, "segmentation gradient matches finite differences (4x4, 2 labels)",
                criterion_segmentation_gradient);
  run_criterion(10, "synthetic training (200 adam iterations, n_inner=100)", criterion_training);
  std::printf("acceptance: %d/10 passed\n", 10 - g_failures);
  return g_failures == 0 ? 0 : 1;
}
