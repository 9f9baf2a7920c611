#pragma once

// Bregman generators (distance-generating functions) and the associated
// proximal maps with linear cost, in closed form:
//
//   prox(xbar, c, alpha) = argmin_x  <c, x> + g(x) + (1/alpha) D_psi(x, xbar)
//
// where the indicator part of g is absorbed by the generator's domain.  Each
// family also exposes the derivatives of the prox point with respect to the
// anchor xbar and the cost c, both as assembled matrices (small problems) and
// as matrix-free (transposed) directional products used by the solvers.

#include "bilevel/types.hpp"

#include <cmath>
#include <string>

namespace bilevel {

// Inputs closer than this to the boundary of an entropy-type domain are
// rejected by the public operations (not clamped).
inline constexpr double kInteriorTol = 1e-14;
// Tolerance on |sum(x) - 1| for unit-simplex membership.
inline constexpr double kSimplexSumTol = 1e-12;

enum class GeneratorKind {
  Euclidean,              // psi(x) = 0.5 |x|^2 on R^d
  EntropyOrthant,         // psi(x) = sum x_i log x_i on [x >= 0]
  EntropySimplex,         // same psi restricted to (a product of) unit simplices
  BinaryEntropyInterval,  // psi(x) = 0.5 sum (1+x)log(1+x) + (1-x)log(1-x) on [-1,1]^d
};

std::string to_string(GeneratorKind kind);

struct BregmanGenerator {
  GeneratorKind kind = GeneratorKind::Euclidean;
  Index dimension = 0;
  // EntropySimplex only: the vector is viewed as a (groups x dimension/groups)
  // column-major matrix whose rows are independent unit simplices.  groups = 1
  // means a single simplex over the whole vector.
  Index groups = 1;

  Index group_size() const { return dimension / groups; }

  static BregmanGenerator euclidean(Index d) { return make(GeneratorKind::Euclidean, d, 1); }
  static BregmanGenerator entropy_orthant(Index d) {
    return make(GeneratorKind::EntropyOrthant, d, 1);
  }
  static BregmanGenerator entropy_simplex(Index d) {
    return make(GeneratorKind::EntropySimplex, d, 1);
  }
  static BregmanGenerator entropy_simplex_grid(Index groups, Index size) {
    return make(GeneratorKind::EntropySimplex, groups * size, groups);
  }
  static BregmanGenerator binary_entropy_interval(Index d) {
    return make(GeneratorKind::BinaryEntropyInterval, d, 1);
  }

 private:
  static BregmanGenerator make(GeneratorKind kind, Index d, Index groups);
};

// ------------------------------------------------------- domain handling ----

// Throw InvalidInput naming the first offending coordinate if x is not in the
// generator's domain / strict interior (interior uses kInteriorTol).
void check_domain(const BregmanGenerator& gen, const Vec& x, const char* who);
void check_interior(const BregmanGenerator& gen, const Vec& x, const char* who);
bool in_domain(const BregmanGenerator& gen, const Vec& x);
bool in_interior(const BregmanGenerator& gen, const Vec& x);

// ---------------------------------------------------- generator calculus ----

// psi(x); x must lie in the domain.
double generator_value(const BregmanGenerator& gen, const Vec& x);
// grad psi(x); x must lie in the interior.
Vec generator_grad(const BregmanGenerator& gen, const Vec& x);
// diag of hess psi(x) (all supported generators are separable).
Vec generator_hess_diag(const BregmanGenerator& gen, const Vec& x);

// D_psi(x, xbar) = psi(x) - psi(xbar) - <grad psi(xbar), x - xbar>.
// x must lie in the domain, xbar in the interior.
double bregman_distance(const BregmanGenerator& gen, const Vec& x, const Vec& xbar);

// ----------------------------------------------------------- prox family ----

struct ProxResult {
  Vec point;                // the minimizer
  Mat jacobian_wrt_point;   // d point / d xbar (diagonal for separable families)
  Mat jacobian_wrt_cost;    // d point / d cost
};

// Closed-form prox with linear cost under each generator.  xbar must be
// strictly interior (tolerance kInteriorTol); simplex membership is checked to
// kSimplexSumTol and violations are rejected, never renormalized.
ProxResult prox_entropy_orthant(const Vec& xbar, const Vec& cost, double alpha);
ProxResult prox_entropy_simplex(const Vec& xbar, const Vec& cost, double alpha);
ProxResult prox_binary_entropy_interval(const Vec& xbar, const Vec& cost, double alpha);
// Euclidean prox of a simple function (no linear cost; fold it into xbar).
// At a projection kink the derivative selection is 0.
ProxResult prox_euclidean(const Vec& xbar, const SimpleFunction& g, double alpha);

// ------------------------------------------------------- solver kernels -----

// Prox structure used by the lower-level solvers: the generator fixes the
// domain/geometry; fn is the simple-function part for the Euclidean kind
// (ignored by the entropy kinds, whose domain is the constraint).
struct ProxSpec {
  BregmanGenerator gen;
  SimpleFunction fn = SimpleFunction::zero();
};

// These bypass the public-operation interior tolerance (iterates may come
// arbitrarily close to the boundary during a run; they only must stay strictly
// inside) and support the grouped-simplex layout.  `point` is the prox output
// at (xbar, cost, alpha), which the solvers already hold in the trace.
Vec prox_apply(const ProxSpec& spec, const Vec& xbar, const Vec& cost, double alpha);

// Directional derivatives d_point/d_xbar * d and d_point/d_cost * e.
Vec prox_jvp_point(const ProxSpec& spec, const Vec& xbar, const Vec& cost, double alpha,
                   const Vec& point, const Vec& d);
Vec prox_jvp_cost(const ProxSpec& spec, const Vec& xbar, const Vec& cost, double alpha,
                  const Vec& point, const Vec& e);
// Transposed products (d_point/d_xbar)^T z and (d_point/d_cost)^T z.
Vec prox_jtv_point(const ProxSpec& spec, const Vec& xbar, const Vec& cost, double alpha,
                   const Vec& point, const Vec& z);
Vec prox_jtv_cost(const ProxSpec& spec, const Vec& xbar, const Vec& cost, double alpha,
                  const Vec& point, const Vec& z);

}  // namespace bilevel
