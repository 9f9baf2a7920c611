#pragma once

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace bilevel {

template <class Scalar>
using VecX = Eigen::Vector<Scalar, Eigen::Dynamic>;
template <class Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vec = VecX<double>;
using Mat = MatX<double>;
using Index = Eigen::Index;

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------- errors ----

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Rejected argument (domain violation, malformed descriptor, bad dimension).
struct InvalidInput : Error {
  using Error::Error;
};

// Inconsistent solver/driver configuration (step rule violated, bad counts).
struct ConfigError : Error {
  using Error::Error;
};

// An iterate left the feasible interior (e.g. multiplicative update underflow).
struct DivergenceError : Error {
  DivergenceError(const std::string& what, int iter) : Error(what), iteration(iter) {}
  int iteration = -1;
};

// An iterative linear solve stopped above tolerance. Carries the best iterate
// so the caller may still use it.
struct SolveError : Error {
  SolveError(const std::string& what, Vec best_iterate, double res, int iters)
      : Error(what), best(std::move(best_iterate)), residual(res), iterations(iters) {}
  Vec best;
  double residual = kNaN;
  int iterations = 0;
};

// ------------------------------------------------- simple functions ----------

// Descriptor for the handful of "simple" convex functions used as the
// nonsmooth part under the Euclidean generator and as the outer regularizer:
// the zero function, the nonnegativity indicator, and a box indicator.
// Their Euclidean proximal map is the identity / a projection.
struct SimpleFunction {
  enum class Kind { Zero, Nonnegative, Box };

  Kind kind = Kind::Zero;
  double lo = 0.0;
  double hi = 0.0;

  static SimpleFunction zero() { return {Kind::Zero, 0.0, 0.0}; }
  static SimpleFunction nonnegative() { return {Kind::Nonnegative, 0.0, 0.0}; }
  static SimpleFunction box(double lo, double hi) {
    if (!(lo < hi)) throw InvalidInput("SimpleFunction::box: requires lo < hi");
    return {Kind::Box, lo, hi};
  }
};

// Euclidean projection onto the set described by `fn` (identity for Zero).
inline double project_simple(const SimpleFunction& fn, double v) {
  switch (fn.kind) {
    case SimpleFunction::Kind::Zero: return v;
    case SimpleFunction::Kind::Nonnegative: return v < 0.0 ? 0.0 : v;
    case SimpleFunction::Kind::Box: return v < fn.lo ? fn.lo : (v > fn.hi ? fn.hi : v);
  }
  throw InvalidInput("project_simple: unknown kind");
}

// Derivative of the projection; at a kink the subgradient selection is 0.
inline double project_simple_derivative(const SimpleFunction& fn, double v) {
  switch (fn.kind) {
    case SimpleFunction::Kind::Zero: return 1.0;
    case SimpleFunction::Kind::Nonnegative: return v > 0.0 ? 1.0 : 0.0;
    case SimpleFunction::Kind::Box: return (v > fn.lo && v < fn.hi) ? 1.0 : 0.0;
  }
  throw InvalidInput("project_simple_derivative: unknown kind");
}

// --------------------------------------------------------------- interval ----

// Closed interval [lo, hi]; collapses to a point when lo == hi.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool is_point() const { return lo == hi; }
  bool contains(double v) const { return lo <= v && v <= hi; }
  double distance(double v) const {
    if (v < lo) return lo - v;
    if (v > hi) return v - hi;
    return 0.0;
  }
  double midpoint() const { return 0.5 * (lo + hi); }
};

}  // namespace bilevel
