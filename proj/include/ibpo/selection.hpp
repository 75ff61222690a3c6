#pragma once

#include <cstdint>
#include <vector>

#include "ibpo/core.hpp"
#include "ibpo/rewards.hpp"

namespace ibpo {

// Entry (i,j) = 1 iff response (i,j) is correct and its KL point estimate is
// within the configured threshold.
struct FeasibilityMask {
  BinaryMatrix entries;

  bool feasible(std::size_t i, std::size_t j) const { return entries.at(i, j) != 0; }
  std::size_t rows() const { return entries.rows(); }
  std::size_t cols() const { return entries.cols(); }
};

// How the budget row is formed.
//   Relative: sum over selected of (1{Extended} - q_plus) <= 0, i.e. the
//             Extended share of accepted responses is capped at q_plus.
//   Absolute: sum over selected of 1{Extended} <= round(q_plus * n * m),
//             a fixed head-count cap (round half to even).
enum class BudgetMode { Relative, Absolute };

// Tie resolution among objective-optimal solutions of an IuB program.
struct TiePolicy {
  enum class Kind { PreferMoreSelectionsThenLexicographic, SeededRandom };
  Kind kind = Kind::PreferMoreSelectionsThenLexicographic;
  std::uint64_t seed = 0;

  static TiePolicy lexicographic() { return {}; }
  static TiePolicy seeded_random(std::uint64_t seed) { return {Kind::SeededRandom, seed}; }

  bool operator==(const TiePolicy&) const = default;
};

// Explicit 0/1 program: maximize sum(objective * x) subject to x within the
// mask, at most one selection per row, and one global budget row
// sum(budget_weight * x) <= budget_rhs in exact rationals.
struct IubProgram {
  std::size_t n = 0;
  std::size_t m = 0;
  RealMatrix objective;
  BinaryMatrix mask;
  std::vector<Rational> budget_weight;  // row-major n*m
  Rational budget_rhs{0, 1};
  TiePolicy tie_policy;

  const Rational& weight(std::size_t i, std::size_t j) const { return budget_weight[i * m + j]; }
};

// Signed point estimate log pi(y|x) - log pi_ref(y|x). Throws
// std::domain_error on non-finite input.
double kl_point_estimate(double log_prob, double ref_log_prob);

FeasibilityMask feasible_mask(const Batch& batch, double kl_max);

// Best-of-n over the feasible entries of each row: picks one maximal-reward
// feasible response per row (seeded uniform tie break), none when the row has
// no feasible entry.
SelectionMatrix solve_cgpo(const Batch& batch, const FeasibilityMask& mask,
                           const RealMatrix& rewards, std::uint64_t rng_seed);

IubProgram build_iub_program(const Batch& batch, const FeasibilityMask& mask,
                             const MarginMatrix& margins, const BudgetConfig& budget,
                             TiePolicy tie_policy = {}, BudgetMode mode = BudgetMode::Relative);

// Exact budget row value of a selection under the program's weights.
Rational budget_lhs_of(const IubProgram& program, const SelectionMatrix& selection);

}  // namespace ibpo
