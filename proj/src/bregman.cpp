#include "bilevel/bregman.hpp"

#include <cmath>
#include <sstream>

namespace bilevel {
namespace {

[[noreturn]] void reject(const char* who, Index i, double value, const char* why) {
  std::ostringstream msg;
  msg << who << ": x[" << i << "] = " << value << " " << why;
  throw InvalidInput(msg.str());
}

void check_simplex_sums(const BregmanGenerator& gen, const Vec& x, const char* who) {
  const Index g = gen.groups, k = gen.group_size();
  Eigen::Map<const Mat> m(x.data(), g, k);
  for (Index i = 0; i < g; ++i) {
    const double s = m.row(i).sum();
    if (std::abs(s - 1.0) > kSimplexSumTol) {
      std::ostringstream msg;
      msg << who << ": simplex block " << i << " sums to " << s
          << " (|sum - 1| exceeds " << kSimplexSumTol << "); refusing to renormalize";
      throw InvalidInput(msg.str());
    }
  }
}

// Shared scan: returns index of first coordinate violating the bound, or -1.
template <class Pred>
Index first_violation(const Vec& x, Pred bad) {
  for (Index i = 0; i < x.size(); ++i)
    if (bad(x[i])) return i;
  return -1;
}

double xlogx(double v) { return v > 0.0 ? v * std::log(v) : 0.0; }

}  // namespace

std::string to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::Euclidean: return "euclidean";
    case GeneratorKind::EntropyOrthant: return "entropy-orthant";
    case GeneratorKind::EntropySimplex: return "entropy-simplex";
    case GeneratorKind::BinaryEntropyInterval: return "binary-entropy-interval";
  }
  return "?";
}

BregmanGenerator BregmanGenerator::make(GeneratorKind kind, Index d, Index groups) {
  if (d <= 0) throw InvalidInput("BregmanGenerator: dimension must be positive");
  if (groups <= 0 || d % groups != 0)
    throw InvalidInput("BregmanGenerator: groups must divide the dimension");
  BregmanGenerator gen;
  gen.kind = kind;
  gen.dimension = d;
  gen.groups = groups;
  return gen;
}

void check_domain(const BregmanGenerator& gen, const Vec& x, const char* who) {
  if (x.size() != gen.dimension) throw InvalidInput(std::string(who) + ": dimension mismatch");
  Index i = -1;
  switch (gen.kind) {
    case GeneratorKind::Euclidean:
      break;
    case GeneratorKind::EntropyOrthant:
      i = first_violation(x, [](double v) { return !(v >= 0.0); });
      if (i >= 0) reject(who, i, x[i], "outside the nonnegative orthant");
      break;
    case GeneratorKind::EntropySimplex:
      i = first_violation(x, [](double v) { return !(v >= 0.0); });
      if (i >= 0) reject(who, i, x[i], "outside the unit simplex (negative)");
      check_simplex_sums(gen, x, who);
      break;
    case GeneratorKind::BinaryEntropyInterval:
      i = first_violation(x, [](double v) { return !(std::abs(v) <= 1.0); });
      if (i >= 0) reject(who, i, x[i], "outside the interval [-1, 1]");
      break;
  }
}

void check_interior(const BregmanGenerator& gen, const Vec& x, const char* who) {
  if (x.size() != gen.dimension) throw InvalidInput(std::string(who) + ": dimension mismatch");
  Index i = -1;
  switch (gen.kind) {
    case GeneratorKind::Euclidean:
      break;
    case GeneratorKind::EntropyOrthant:
      i = first_violation(x, [](double v) { return !(v > kInteriorTol); });
      if (i >= 0) reject(who, i, x[i], "within tolerance of the orthant boundary");
      break;
    case GeneratorKind::EntropySimplex:
      i = first_violation(x, [](double v) { return !(v > kInteriorTol); });
      if (i >= 0) reject(who, i, x[i], "within tolerance of the simplex boundary");
      check_simplex_sums(gen, x, who);
      break;
    case GeneratorKind::BinaryEntropyInterval:
      i = first_violation(x, [](double v) { return !(std::abs(v) < 1.0 - kInteriorTol); });
      if (i >= 0) reject(who, i, x[i], "within tolerance of the interval boundary");
      break;
  }
}

bool in_domain(const BregmanGenerator& gen, const Vec& x) {
  try {
    check_domain(gen, x, "in_domain");
  } catch (const InvalidInput&) {
    return false;
  }
  return true;
}

bool in_interior(const BregmanGenerator& gen, const Vec& x) {
  try {
    check_interior(gen, x, "in_interior");
  } catch (const InvalidInput&) {
    return false;
  }
  return true;
}

double generator_value(const BregmanGenerator& gen, const Vec& x) {
  check_domain(gen, x, "generator_value");
  switch (gen.kind) {
    case GeneratorKind::Euclidean:
      return 0.5 * x.squaredNorm();
    case GeneratorKind::EntropyOrthant:
    case GeneratorKind::EntropySimplex: {
      double s = 0.0;
      for (Index i = 0; i < x.size(); ++i) s += xlogx(x[i]);
      return s;
    }
    case GeneratorKind::BinaryEntropyInterval: {
      double s = 0.0;
      for (Index i = 0; i < x.size(); ++i) s += 0.5 * (xlogx(1.0 + x[i]) + xlogx(1.0 - x[i]));
      return s;
    }
  }
  throw InvalidInput("generator_value: unknown kind");
}

Vec generator_grad(const BregmanGenerator& gen, const Vec& x) {
  check_interior(gen, x, "generator_grad");
  switch (gen.kind) {
    case GeneratorKind::Euclidean:
      return x;
    case GeneratorKind::EntropyOrthant:
    case GeneratorKind::EntropySimplex:
      return (x.array().log() + 1.0).matrix();
    case GeneratorKind::BinaryEntropyInterval:
      return x.unaryExpr([](double v) { return std::atanh(v); });
  }
  throw InvalidInput("generator_grad: unknown kind");
}

Vec generator_hess_diag(const BregmanGenerator& gen, const Vec& x) {
  check_interior(gen, x, "generator_hess_diag");
  switch (gen.kind) {
    case GeneratorKind::Euclidean:
      return Vec::Ones(x.size());
    case GeneratorKind::EntropyOrthant:
    case GeneratorKind::EntropySimplex:
      return x.cwiseInverse();
    case GeneratorKind::BinaryEntropyInterval:
      return ((1.0 - x.array()) * (1.0 + x.array())).inverse().matrix();
  }
  throw InvalidInput("generator_hess_diag: unknown kind");
}

double bregman_distance(const BregmanGenerator& gen, const Vec& x, const Vec& xbar) {
  check_domain(gen, x, "bregman_distance (first argument)");
  check_interior(gen, xbar, "bregman_distance (second argument)");
  switch (gen.kind) {
    case GeneratorKind::Euclidean:
      return 0.5 * (x - xbar).squaredNorm();
    case GeneratorKind::EntropyOrthant:
    case GeneratorKind::EntropySimplex: {
      // sum x log(x/xbar) - (x - xbar), with 0 log 0 = 0.
      double s = 0.0;
      for (Index i = 0; i < x.size(); ++i) {
        if (x[i] > 0.0) s += x[i] * std::log(x[i] / xbar[i]);
        s += xbar[i] - x[i];
      }
      return s;
    }
    case GeneratorKind::BinaryEntropyInterval: {
      double s = 0.0;
      for (Index i = 0; i < x.size(); ++i) {
        const double p = 1.0 + x[i], m = 1.0 - x[i];
        if (p > 0.0) s += 0.5 * p * std::log(p / (1.0 + xbar[i]));
        if (m > 0.0) s += 0.5 * m * std::log(m / (1.0 - xbar[i]));
      }
      return s;
    }
  }
  throw InvalidInput("bregman_distance: unknown kind");
}

// ----------------------------------------------------------- prox family ----

namespace {

void check_prox_args(const Vec& xbar, const Vec& cost, double alpha, const char* who) {
  if (cost.size() != xbar.size()) throw InvalidInput(std::string(who) + ": cost dimension mismatch");
  if (!(alpha > 0.0)) throw InvalidInput(std::string(who) + ": alpha must be positive");
}

// Cap on the binary-entropy mirror variable.  tanh rounds to exactly 1.0 in
// double arithmetic near |t| ~ 19, which would park a persistently driven dual
// on the ball boundary and kill the next mirror step.  Clamping at 15 keeps
// iterates strictly interior (1 - tanh(15) ~ 1.8e-13, well above the interior
// tolerance); a clamped coordinate sits on a flat piece of the map, so its
// derivatives vanish.
constexpr double kMirrorCap = 15.0;

double interval_mirror(double xbar, double cost, double alpha) {
  return std::atanh(xbar) - alpha * cost;
}

bool mirror_capped(double t) { return std::abs(t) >= kMirrorCap; }

double capped_tanh(double t) {
  return std::tanh(std::clamp(t, -kMirrorCap, kMirrorCap));
}

}  // namespace

ProxResult prox_entropy_orthant(const Vec& xbar, const Vec& cost, double alpha) {
  check_prox_args(xbar, cost, alpha, "prox_entropy_orthant");
  const auto gen = BregmanGenerator::entropy_orthant(xbar.size());
  check_interior(gen, xbar, "prox_entropy_orthant");
  ProxResult r;
  const Vec factor = (-alpha * cost.array()).exp().matrix();
  r.point = xbar.cwiseProduct(factor);
  r.jacobian_wrt_point = factor.asDiagonal();
  r.jacobian_wrt_cost = (-alpha * r.point).eval().asDiagonal();
  return r;
}

ProxResult prox_entropy_simplex(const Vec& xbar, const Vec& cost, double alpha) {
  check_prox_args(xbar, cost, alpha, "prox_entropy_simplex");
  const auto gen = BregmanGenerator::entropy_simplex(xbar.size());
  check_interior(gen, xbar, "prox_entropy_simplex");
  // Max-subtracted normalized exponential of log(xbar) - alpha*cost.
  Vec t = (xbar.array().log() - alpha * cost.array()).matrix();
  const double m = t.maxCoeff();
  Vec e = (t.array() - m).exp().matrix();
  const double S = e.sum();
  ProxResult r;
  r.point = e / S;
  // dP_i/dxbar_j = delta_ij P_i/xbar_i - P_i P_j/xbar_j,
  // dP_i/dc_j    = -alpha (delta_ij P_i - P_i P_j).
  const Vec q = r.point.cwiseQuotient(xbar);
  r.jacobian_wrt_point = Mat(q.asDiagonal()) - r.point * q.transpose();
  r.jacobian_wrt_cost =
      -alpha * (Mat(r.point.asDiagonal()) - r.point * r.point.transpose());
  return r;
}

ProxResult prox_binary_entropy_interval(const Vec& xbar, const Vec& cost, double alpha) {
  check_prox_args(xbar, cost, alpha, "prox_binary_entropy_interval");
  const auto gen = BregmanGenerator::binary_entropy_interval(xbar.size());
  check_interior(gen, xbar, "prox_binary_entropy_interval");
  ProxResult r;
  Vec t(xbar.size()), active(xbar.size());
  for (Index i = 0; i < xbar.size(); ++i) {
    t[i] = interval_mirror(xbar[i], cost[i], alpha);
    active[i] = mirror_capped(t[i]) ? 0.0 : 1.0;
  }
  r.point = t.unaryExpr([](double v) { return capped_tanh(v); });
  const Vec one_minus_p2 =
      ((1.0 - r.point.array()) * (1.0 + r.point.array())).matrix();
  const Vec one_minus_b2 = ((1.0 - xbar.array()) * (1.0 + xbar.array())).matrix();
  r.jacobian_wrt_point =
      active.cwiseProduct(one_minus_p2.cwiseQuotient(one_minus_b2)).asDiagonal();
  r.jacobian_wrt_cost = (-alpha * active.cwiseProduct(one_minus_p2)).eval().asDiagonal();
  return r;
}

ProxResult prox_euclidean(const Vec& xbar, const SimpleFunction& g, double alpha) {
  if (!(alpha > 0.0)) throw InvalidInput("prox_euclidean: alpha must be positive");
  ProxResult r;
  r.point = xbar.unaryExpr([&](double v) { return project_simple(g, v); });
  const Vec mask = xbar.unaryExpr([&](double v) { return project_simple_derivative(g, v); });
  r.jacobian_wrt_point = mask.asDiagonal();
  r.jacobian_wrt_cost = (-alpha * mask).eval().asDiagonal();
  return r;
}

// ------------------------------------------------------- solver kernels -----

namespace {

// Solver-side feasibility: iterates only need to be strictly inside (they may
// come arbitrarily close to the boundary late in a run).
void check_strict(const BregmanGenerator& gen, const Vec& xbar, const char* who) {
  Index i = -1;
  switch (gen.kind) {
    case GeneratorKind::Euclidean:
      return;
    case GeneratorKind::EntropyOrthant:
    case GeneratorKind::EntropySimplex:
      i = first_violation(xbar, [](double v) { return !(v > 0.0); });
      if (i >= 0) reject(who, i, xbar[i], "not strictly positive");
      return;
    case GeneratorKind::BinaryEntropyInterval:
      i = first_violation(xbar, [](double v) { return !(std::abs(v) < 1.0); });
      if (i >= 0) reject(who, i, xbar[i], "not strictly inside [-1, 1]");
      return;
  }
}

using GroupView = Eigen::Map<const Mat>;

}  // namespace

Vec prox_apply(const ProxSpec& spec, const Vec& xbar, const Vec& cost, double alpha) {
  const auto& gen = spec.gen;
  if (xbar.size() != gen.dimension || cost.size() != gen.dimension)
    throw InvalidInput("prox_apply: dimension mismatch");
  if (!(alpha > 0.0)) throw InvalidInput("prox_apply: alpha must be positive");
  check_strict(gen, xbar, "prox_apply");
  switch (gen.kind) {
    case GeneratorKind::Euclidean:
      return (xbar - alpha * cost)
          .unaryExpr([&](double v) { return project_simple(spec.fn, v); });
    case GeneratorKind::EntropyOrthant:
      return xbar.array() * (-alpha * cost.array()).exp();
    case GeneratorKind::EntropySimplex: {
      const Index g = gen.groups, k = gen.group_size();
      GroupView xb(xbar.data(), g, k), c(cost.data(), g, k);
      Mat t = xb.array().log().matrix() - alpha * c;
      Vec m = t.rowwise().maxCoeff();
      Mat e = (t.colwise() - m).array().exp().matrix();
      Vec s = e.rowwise().sum();
      Mat p = e.array().colwise() / s.array();
      return Eigen::Map<Vec>(p.data(), gen.dimension);
    }
    case GeneratorKind::BinaryEntropyInterval: {
      Vec out(gen.dimension);
      for (Index i = 0; i < gen.dimension; ++i)
        out[i] = capped_tanh(interval_mirror(xbar[i], cost[i], alpha));
      return out;
    }
  }
  throw InvalidInput("prox_apply: unknown kind");
}

namespace {

// Simplex directional products, shared by jvp/jtv.  With P the prox point and
// q = P / xbar (elementwise):
//   (dP/dxbar)   d = P .* (d ./ xbar) - P <P, d ./ xbar>   per group
//   (dP/dxbar)^T z = q .* (z - <P, z>)                     per group
//   (dP/dc)      e = -alpha (P .* e - P <P, e>)            (symmetric in e/z)
Vec simplex_point_jvp(const BregmanGenerator& gen, const Vec& xbar, const Vec& point,
                      const Vec& d) {
  const Index g = gen.groups, k = gen.group_size();
  GroupView xb(xbar.data(), g, k), p(point.data(), g, k), dd(d.data(), g, k);
  Mat r = dd.cwiseQuotient(xb);
  Vec dot = (p.array() * r.array()).rowwise().sum();
  Mat out = p.array() * (r.colwise() - dot).array();
  return Eigen::Map<Vec>(out.data(), gen.dimension);
}

Vec simplex_point_jtv(const BregmanGenerator& gen, const Vec& xbar, const Vec& point,
                      const Vec& z) {
  const Index g = gen.groups, k = gen.group_size();
  GroupView xb(xbar.data(), g, k), p(point.data(), g, k), zz(z.data(), g, k);
  Vec dot = (p.array() * zz.array()).rowwise().sum();
  Mat out = p.cwiseQuotient(xb).array() * (zz.colwise() - dot).array();
  return Eigen::Map<Vec>(out.data(), gen.dimension);
}

Vec simplex_cost_product(const BregmanGenerator& gen, const Vec& point, double alpha,
                         const Vec& v) {
  const Index g = gen.groups, k = gen.group_size();
  GroupView p(point.data(), g, k), vv(v.data(), g, k);
  Vec dot = (p.array() * vv.array()).rowwise().sum();
  Mat out = -alpha * (p.array() * (vv.colwise() - dot).array());
  return Eigen::Map<Vec>(out.data(), gen.dimension);
}

Vec euclid_mask(const SimpleFunction& fn, const Vec& xbar, const Vec& cost, double alpha) {
  return (xbar - alpha * cost)
      .unaryExpr([&](double v) { return project_simple_derivative(fn, v); });
}

Vec interval_scale(const Vec& point) {  // 1 - point^2, factored for accuracy
  return ((1.0 - point.array()) * (1.0 + point.array())).matrix();
}

// 0/1 mask of uncapped coordinates of the binary-entropy mirror step.
Vec interval_active(const Vec& xbar, const Vec& cost, double alpha) {
  Vec m(xbar.size());
  for (Index i = 0; i < xbar.size(); ++i)
    m[i] = mirror_capped(interval_mirror(xbar[i], cost[i], alpha)) ? 0.0 : 1.0;
  return m;
}

}  // namespace

Vec prox_jvp_point(const ProxSpec& spec, const Vec& xbar, const Vec& cost, double alpha,
                   const Vec& point, const Vec& d) {
  switch (spec.gen.kind) {
    case GeneratorKind::Euclidean:
      return euclid_mask(spec.fn, xbar, cost, alpha).cwiseProduct(d);
    case GeneratorKind::EntropyOrthant:
      return point.cwiseQuotient(xbar).cwiseProduct(d);
    case GeneratorKind::EntropySimplex:
      return simplex_point_jvp(spec.gen, xbar, point, d);
    case GeneratorKind::BinaryEntropyInterval: {
      const Vec s = interval_active(xbar, cost, alpha)
                        .cwiseProduct(interval_scale(point))
                        .cwiseQuotient(interval_scale(xbar));
      return s.cwiseProduct(d);
    }
  }
  throw InvalidInput("prox_jvp_point: unknown kind");
}

Vec prox_jtv_point(const ProxSpec& spec, const Vec& xbar, const Vec& cost, double alpha,
                   const Vec& point, const Vec& z) {
  if (spec.gen.kind == GeneratorKind::EntropySimplex)
    return simplex_point_jtv(spec.gen, xbar, point, z);
  // The remaining families have diagonal point-Jacobians.
  return prox_jvp_point(spec, xbar, cost, alpha, point, z);
}

Vec prox_jvp_cost(const ProxSpec& spec, const Vec& xbar, const Vec& cost, double alpha,
                  const Vec& point, const Vec& e) {
  switch (spec.gen.kind) {
    case GeneratorKind::Euclidean:
      return (-alpha) * euclid_mask(spec.fn, xbar, cost, alpha).cwiseProduct(e);
    case GeneratorKind::EntropyOrthant:
      return (-alpha) * point.cwiseProduct(e);
    case GeneratorKind::EntropySimplex:
      return simplex_cost_product(spec.gen, point, alpha, e);
    case GeneratorKind::BinaryEntropyInterval:
      return (-alpha) * interval_active(xbar, cost, alpha)
                            .cwiseProduct(interval_scale(point))
                            .cwiseProduct(e);
  }
  throw InvalidInput("prox_jvp_cost: unknown kind");
}

Vec prox_jtv_cost(const ProxSpec& spec, const Vec& xbar, const Vec& cost, double alpha,
                  const Vec& point, const Vec& z) {
  // The cost-Jacobian is symmetric for every family (diagonal or
  // -alpha (diag P - P P^T) per simplex group).
  return prox_jvp_cost(spec, xbar, cost, alpha, point, z);
}

}  // namespace bilevel
