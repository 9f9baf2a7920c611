#include "bilevel/toy.hpp"

#include "bilevel/bregman.hpp"
#include "bilevel/implicit.hpp"
#include "bilevel/solvers.hpp"

#include <cmath>
#include <sstream>
#include <thread>
#include <utility>

namespace bilevel::toy {

namespace {

ProxSpec projgd_prox() {
  return ProxSpec{BregmanGenerator::euclidean(1), SimpleFunction::nonnegative()};
}

ProxSpec bregman_prox() {
  return ProxSpec{BregmanGenerator::entropy_orthant(1), SimpleFunction::zero()};
}

bool is_bregman(EstimatorKind kind) {
  return kind == EstimatorKind::BregmanFB || kind == EstimatorKind::BregmanFB2 ||
         kind == EstimatorKind::BregmanFBImplicit;
}

int resolve_back(const ToyConfig& cfg) {
  return cfg.n_back < 0 ? cfg.n_forward : cfg.n_back;
}

}  // namespace

// ------------------------------------------------------------- config --------

double ToyConfig::ground_truth() const {
  return analytic_solution_map(theta_star, lambda, b);
}

void ToyConfig::validate() const {
  std::ostringstream msg;
  if (!(lambda > 0.0)) {
    msg << "ToyConfig: lambda = " << lambda << " must be positive";
    throw ConfigError(msg.str());
  }
  if (n_forward < 1) {
    msg << "ToyConfig: n_forward = " << n_forward << " must be at least 1";
    throw ConfigError(msg.str());
  }
  if (n_back > n_forward) {
    msg << "ToyConfig: n_back = " << n_back << " exceeds n_forward = " << n_forward;
    throw ConfigError(msg.str());
  }
  if (!(alpha > 0.0)) {
    msg << "ToyConfig: alpha = " << alpha << " must be positive";
    throw ConfigError(msg.str());
  }
  if (!(x0 > 0.0)) {
    msg << "ToyConfig: x0 = " << x0 << " must be positive (Bregman kinds start interior)";
    throw ConfigError(msg.str());
  }
  if (!(mu > 0.0)) {
    msg << "ToyConfig: mu = " << mu << " must be positive";
    throw ConfigError(msg.str());
  }
  if (!(solve_tol > 0.0) || solve_iters < 1)
    throw ConfigError("ToyConfig: solve_tol must be positive and solve_iters at least 1");
  if (!std::isfinite(b) || !std::isfinite(theta_star) || !std::isfinite(theta_eval) ||
      !std::isfinite(x0))
    throw ConfigError("ToyConfig: non-finite entry");
}

// ---------------------------------------------------------- estimators -------

const std::vector<EstimatorKind> kAllEstimators = {
    EstimatorKind::SmoothedImplicit, EstimatorKind::ProjGD,
    EstimatorKind::ProjGD2,          EstimatorKind::BregmanFB,
    EstimatorKind::BregmanFB2,       EstimatorKind::BregmanFBImplicit,
};

std::string estimator_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::SmoothedImplicit: return "smoothed-impl";
    case EstimatorKind::ProjGD: return "proj-gd";
    case EstimatorKind::ProjGD2: return "proj-gd2";
    case EstimatorKind::BregmanFB: return "bregman-fb";
    case EstimatorKind::BregmanFB2: return "bregman-fb2";
    case EstimatorKind::BregmanFBImplicit: return "bregman-fb-impl";
  }
  throw InvalidInput("estimator_name: unknown kind");
}

EstimatorKind estimator_from_name(const std::string& name) {
  for (EstimatorKind kind : kAllEstimators)
    if (estimator_name(kind) == name) return kind;
  throw InvalidInput("estimator_from_name: unknown estimator '" + name + "'");
}

// ------------------------------------------------------ closed forms ---------

double analytic_solution_map(double theta, double lambda, double b) {
  if (!(lambda > 0.0)) throw InvalidInput("analytic_solution_map: lambda must be positive");
  const double v = lambda * theta * b / (1.0 + lambda * theta * theta);
  return v > 0.0 ? v : 0.0;
}

Interval analytic_gradient(double theta, const ToyConfig& cfg) {
  const double gt = cfg.ground_truth();
  const double x = analytic_solution_map(theta, cfg.lambda, cfg.b);
  if (theta == 0.0) {
    // Subdifferential of the solution map at the kink is [0, lambda b] (or
    // its reflection for lambda b < 0); chained with dL/dx = x(0) - gt.
    const double end = cfg.lambda * cfg.b * (x - gt);
    return end < 0.0 ? Interval{end, 0.0} : Interval{0.0, end};
  }
  double slope = 0.0;
  if (x > 0.0) {
    const double den = 1.0 + cfg.lambda * theta * theta;
    slope = cfg.lambda * cfg.b * (1.0 - cfg.lambda * theta * theta) / (den * den);
  }
  const double value = slope * (x - gt);
  return Interval{value, value};
}

// ----------------------------------------------------- problem callbacks -----

LowerProblem toy_problem(const ToyConfig& cfg, double theta) {
  cfg.validate();
  const double lambda = cfg.lambda;
  const double b = cfg.b;

  LowerProblem pb;
  pb.dim = 1;
  pb.param_dim = 1;
  pb.lipschitz_f = 1.0 + lambda * theta * theta;
  pb.energy = [lambda, b](const Vec& x, const Vec& th) {
    const double r = th[0] * x[0] - b;
    return 0.5 * lambda * r * r + 0.5 * x[0] * x[0];
  };
  pb.smooth_grad = [lambda, b](const Vec& x, const Vec& th) {
    return Vec::Constant(1, lambda * th[0] * (th[0] * x[0] - b) + x[0]);
  };
  pb.smooth_hess = [lambda](const Vec&, const Vec& th, const Vec& v) {
    return Vec::Constant(1, (1.0 + lambda * th[0] * th[0]) * v[0]);
  };
  pb.mixed_jtv = [lambda, b](const Vec& x, const Vec& th, const Vec& v) {
    return Vec::Constant(1, (2.0 * lambda * th[0] * x[0] - lambda * b) * v[0]);
  };
  pb.mixed_jvp = pb.mixed_jtv;  // 1-D: the mixed block is symmetric in shape
  return pb;
}

double toy_loss(const ToyConfig& cfg, double x) {
  const double d = x - cfg.ground_truth();
  return 0.5 * d * d;
}

LossGrads toy_loss_grads(const ToyConfig& cfg, double x) {
  LossGrads g;
  g.wrt_x = Vec::Constant(1, x - cfg.ground_truth());
  g.wrt_theta = Vec::Zero(1);
  return g;
}

double projgd_alpha(const ToyConfig& cfg, double theta) {
  return 1.0 / (1.0 + cfg.lambda * theta * theta);
}

// ----------------------------------------------------------- forward ---------

IterateTrace run_forward(EstimatorKind kind, const ToyConfig& cfg, double theta) {
  cfg.validate();
  if (kind == EstimatorKind::SmoothedImplicit)
    throw InvalidInput("run_forward: the smoothed-implicit kind records no iterate trace");
  const LowerProblem pb = toy_problem(cfg, theta);
  const Vec th = Vec::Constant(1, theta);
  const Vec x0 = Vec::Constant(1, cfg.x0);
  if (is_bregman(kind)) {
    if (!(cfg.x0 > 0.0)) throw ConfigError("run_forward: Bregman kinds need x0 > 0");
    return fbs_run(pb, th, x0, cfg.n_forward, bregman_prox(), cfg.alpha);
  }
  if (cfg.x0 < 0.0) throw ConfigError("run_forward: projected kinds need x0 >= 0");
  // Step frozen at the evaluation point so differentiating the composite and
  // probing it at nearby theta see the same map.
  return fbs_run(pb, th, x0, cfg.n_forward, projgd_prox(), projgd_alpha(cfg, cfg.theta_eval));
}

double unrolled_loss(EstimatorKind kind, const ToyConfig& cfg, double theta) {
  if (kind == EstimatorKind::SmoothedImplicit) {
    const double x = toy_barrier_minimize(theta, cfg.lambda, cfg.b, cfg.mu);
    return toy_loss(cfg, x);
  }
  const IterateTrace trace = run_forward(kind, cfg, theta);
  return toy_loss(cfg, trace.output()[0]);
}

std::vector<double> energy_trace(const ToyConfig& cfg, const IterateTrace& trace) {
  const LowerProblem pb = toy_problem(cfg, trace.theta[0]);
  std::vector<double> energies;
  energies.reserve(trace.iterates.size());
  for (const Vec& x : trace.iterates) energies.push_back(pb.energy(x, trace.theta));
  return energies;
}

// ---------------------------------------------------------- estimation -------

GradientReport run_estimator(EstimatorKind kind, const ToyConfig& cfg) {
  cfg.validate();
  const double theta = cfg.theta_eval;
  const Vec th = Vec::Constant(1, theta);

  GradientReport report;
  if (kind == EstimatorKind::SmoothedImplicit) {
    const double lambda = cfg.lambda;
    const double b = cfg.b;
    const double mu = cfg.mu;
    SmoothedProblem sp;
    sp.dim = 1;
    sp.param_dim = 1;
    sp.energy = [lambda, b, mu](const Vec& x, const Vec& t) {
      const double r = t[0] * x[0] - b;
      return 0.5 * lambda * r * r + 0.5 * x[0] * x[0] - mu * std::log(x[0]);
    };
    sp.grad = [lambda, b, mu](const Vec& x, const Vec& t) {
      return Vec::Constant(1, lambda * t[0] * (t[0] * x[0] - b) + x[0] - mu / x[0]);
    };
    sp.hess = [lambda, mu](const Vec& x, const Vec& t, const Vec& v) {
      return Vec::Constant(1, (1.0 + lambda * t[0] * t[0] + mu / (x[0] * x[0])) * v[0]);
    };
    sp.mixed_jtv = [lambda, b](const Vec& x, const Vec& t, const Vec& v) {
      return Vec::Constant(1, (2.0 * lambda * t[0] * x[0] - lambda * b) * v[0]);
    };
    const double xs = toy_barrier_minimize(theta, cfg.lambda, cfg.b, cfg.mu);
    const Vec xstar = Vec::Constant(1, xs);
    try {
      report = implicit_gradient(sp, th, xstar, toy_loss_grads(cfg, xs), cfg.solve_tol,
                                 cfg.solve_iters);
    } catch (const NonConvergedSolve& e) {
      report = e.best;
    }
  } else {
    const LowerProblem pb = toy_problem(cfg, theta);
    const ProxSpec prox = is_bregman(kind) ? bregman_prox() : projgd_prox();
    const double alpha = is_bregman(kind) ? cfg.alpha : projgd_alpha(cfg, theta);
    const IterateTrace trace = run_forward(kind, cfg, theta);

    if (kind == EstimatorKind::ProjGD || kind == EstimatorKind::BregmanFB) {
      report = reverse_fbs(trace, pb, prox, toy_loss_grads(cfg, trace.output()[0]), cfg.n_back);
    } else {
      const Vec xstar = trace.final_iterate();
      const LossGrads loss = toy_loss_grads(cfg, xstar[0]);
      if (kind == EstimatorKind::BregmanFBImplicit) {
        try {
          report = fixedpoint_implicit(pb, th, xstar, prox, alpha, loss, cfg.solve_tol,
                                       cfg.solve_iters);
        } catch (const NonConvergedSolve& e) {
          report = e.best;
        }
      } else {
        report = fixedpoint_neumann(pb, th, xstar, prox, alpha, loss, resolve_back(cfg));
      }
      report.n_forward = cfg.n_forward;
    }
  }
  report.estimator = estimator_name(kind);
  return report;
}

// --------------------------------------------------------------- sweep -------

namespace {

SweepRow run_row(const ToyConfig& base, EstimatorKind kind, double theta, int n) {
  ToyConfig cfg = base;
  cfg.theta_eval = theta;
  cfg.n_forward = n;
  cfg.n_back = n;

  SweepRow row;
  row.kind = estimator_name(kind);
  row.theta = theta;
  row.n_forward = n;
  row.n_back = n;
  try {
    const GradientReport report = run_estimator(kind, cfg);
    const Interval ref = analytic_gradient(theta, cfg);
    row.estimate = report.gradient[0];
    row.reference_lo = ref.lo;
    row.reference_hi = ref.hi;
    row.abs_error = ref.distance(row.estimate);
    row.in_interval = ref.contains(row.estimate);
    row.contributions = report.contributions;
    if (kind != EstimatorKind::SmoothedImplicit)
      row.energies = energy_trace(cfg, run_forward(kind, cfg, theta));
    if (!report.converged) row.message = "adjoint solve stopped above tolerance";
  } catch (const Error& e) {
    row.failed = true;
    row.message = e.what();
  }
  return row;
}

}  // namespace

std::vector<SweepRow> sweep(const ToyConfig& base, const std::vector<EstimatorKind>& kinds,
                            const std::vector<double>& thetas,
                            const std::vector<int>& n_values, int threads) {
  struct Cell {
    EstimatorKind kind;
    double theta;
    int n;
  };
  std::vector<Cell> grid;
  for (EstimatorKind kind : kinds)
    for (double theta : thetas)
      for (int n : n_values) grid.push_back({kind, theta, n});

  std::vector<SweepRow> rows(grid.size());
  auto work = [&](size_t first, size_t stride) {
    for (size_t i = first; i < grid.size(); i += stride)
      rows[i] = run_row(base, grid[i].kind, grid[i].theta, grid[i].n);
  };
  if (threads <= 1 || grid.size() <= 1) {
    work(0, 1);
  } else {
    const size_t nw = std::min<size_t>(static_cast<size_t>(threads), grid.size());
    std::vector<std::thread> pool;
    pool.reserve(nw);
    for (size_t t = 0; t < nw; ++t) pool.emplace_back(work, t, nw);
    for (std::thread& th : pool) th.join();
  }
  return rows;
}

}  // namespace bilevel::toy
