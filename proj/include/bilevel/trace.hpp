#pragma once

// Full-iterate tape recorded by the lower-level solvers and consumed by the
// reverse-mode accumulators.  Memory is cheap at the target scales, so every
// iterate is kept; no checkpointing.

#include "bilevel/types.hpp"

#include <string>
#include <vector>

namespace bilevel {

enum class TraceKind { ForwardBackward, PrimalDual };

struct IterateTrace {
  TraceKind kind = TraceKind::ForwardBackward;

  // x^0 .. x^n (primal u^0 .. u^n for the primal-dual solver).
  std::vector<Vec> iterates;
  // Forward-backward only: mirror points y^k = grad psi(x^k) - alpha c^k
  // feeding iterate k+1 (n entries).
  std::vector<Vec> intermediates;
  // Primal-dual only: p^0 .. p^n.
  std::vector<Vec> duals;

  Vec theta;  // parameter vector the run was evaluated at

  double alpha = 0.0;  // forward-backward step
  double tau = 0.0;    // primal-dual primal step
  double sigma = 0.0;  // primal-dual dual step

  bool ergodic = false;
  Vec ergodic_average;  // running mean of iterates (maintained when ergodic)

  std::vector<std::string> warnings;

  // Number of update applications recorded.
  int steps() const { return static_cast<int>(iterates.size()) - 1; }
  const Vec& final_iterate() const { return iterates.back(); }
  // Solver output fed to the upper-level loss.
  const Vec& output() const { return ergodic ? ergodic_average : iterates.back(); }
};

}  // namespace bilevel
