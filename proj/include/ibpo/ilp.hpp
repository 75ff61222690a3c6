#pragma once

#include <stdexcept>

#include "ibpo/core.hpp"
#include "ibpo/selection.hpp"

namespace ibpo {

struct IubSolution {
  SelectionMatrix selection;
  double objective_value = 0.0;
  Rational budget_lhs{0, 1};
  bool optimal = true;
};

// Thrown when an instance exceeds the brute-force enumeration guard.
struct OracleSizeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Exact optimum of an IuB program. The budget row is the only coupling
// constraint, so after clearing denominators a dynamic program over
// (row, accumulated integer weight) solves the instance exactly; accumulated
// weights live on a small lattice because each row contributes one of at most
// m+1 values. Ties in objective value are resolved by the program's tie
// policy, identically to brute_force_oracle.
IubSolution solve_exact(const IubProgram& program);

// Exhaustive enumeration over all per-row choices (one feasible column or
// none). Guarded by (m+1)^n <= 1e7; throws OracleSizeError beyond that.
IubSolution brute_force_oracle(const IubProgram& program);

}  // namespace ibpo
