#include "ibpo/selection.hpp"

#include <cmath>
#include <stdexcept>

#include "ibpo/rng.hpp"

namespace ibpo {

double kl_point_estimate(double log_prob, double ref_log_prob) {
  if (!std::isfinite(log_prob) || !std::isfinite(ref_log_prob)) {
    throw std::domain_error("kl_point_estimate: non-finite log-probability");
  }
  return log_prob - ref_log_prob;
}

FeasibilityMask feasible_mask(const Batch& batch, double kl_max) {
  if (!(kl_max >= 0.0)) {
    throw std::invalid_argument("feasible_mask: kl_max must be nonnegative");
  }
  BinaryMatrix entries(batch.size(), batch.responses_per_prompt(), 0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (std::size_t j = 0; j < batch.responses_per_prompt(); ++j) {
      const ResponseRecord& r = batch.response(i, j);
      if (r.correct && kl_point_estimate(r.log_prob, r.ref_log_prob) <= kl_max) {
        entries.at(i, j) = 1;
      }
    }
  }
  return FeasibilityMask{std::move(entries)};
}

SelectionMatrix solve_cgpo(const Batch& batch, const FeasibilityMask& mask,
                           const RealMatrix& rewards, std::uint64_t rng_seed) {
  const std::size_t n = batch.size();
  const std::size_t m = batch.responses_per_prompt();
  if (mask.rows() != n || mask.cols() != m || rewards.rows() != n || rewards.cols() != m) {
    throw std::invalid_argument("solve_cgpo: shape mismatch");
  }
  Rng rng(rng_seed);
  std::vector<std::int32_t> choice(n, -1);
  std::vector<std::size_t> best;
  for (std::size_t i = 0; i < n; ++i) {
    best.clear();
    double best_reward = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (!mask.feasible(i, j)) {
        continue;
      }
      const double r = rewards.at(i, j);
      if (!std::isfinite(r)) {
        throw std::invalid_argument("solve_cgpo: non-finite reward");
      }
      if (best.empty() || r > best_reward) {
        best.assign(1, j);
        best_reward = r;
      } else if (r == best_reward) {
        best.push_back(j);
      }
    }
    if (!best.empty()) {
      choice[i] = static_cast<std::int32_t>(best[rng.uniform_index(best.size())]);
    }
  }
  return SelectionMatrix::from_choices(std::move(choice), m, mask.entries);
}

namespace {

// Round half to even, exact on rationals.
std::int64_t round_half_even(std::int64_t num, std::int64_t den) {
  const bool negative = num < 0;
  const std::int64_t a = negative ? -num : num;
  std::int64_t q = a / den;
  const std::int64_t r = a % den;
  if (2 * r > den || (2 * r == den && (q % 2) == 1)) {
    ++q;
  }
  return negative ? -q : q;
}

}  // namespace

IubProgram build_iub_program(const Batch& batch, const FeasibilityMask& mask,
                             const MarginMatrix& margins, const BudgetConfig& budget,
                             TiePolicy tie_policy, BudgetMode mode) {
  const std::size_t n = batch.size();
  const std::size_t m = batch.responses_per_prompt();
  if (mask.rows() != n || mask.cols() != m || margins.rows() != n || margins.cols() != m) {
    throw std::invalid_argument("build_iub_program: shape mismatch");
  }
  IubProgram program;
  program.n = n;
  program.m = m;
  program.objective = margins;
  program.mask = mask.entries;
  program.tie_policy = tie_policy;
  program.budget_weight.resize(n * m);

  const Rational q = budget.q_plus;
  const Rational extended_weight =
      mode == BudgetMode::Relative ? make_rational(q.den - q.num, q.den) : make_rational(1);
  const Rational standard_weight =
      mode == BudgetMode::Relative ? make_rational(-q.num, q.den) : make_rational(0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const bool extended = batch.response(i, j).group == GroupLabel::Extended;
      program.budget_weight[i * m + j] = extended ? extended_weight : standard_weight;
    }
  }
  if (mode == BudgetMode::Relative) {
    program.budget_rhs = make_rational(0);
  } else {
    const std::int64_t cells = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(m);
    program.budget_rhs = make_rational(round_half_even(q.num * cells, q.den));
  }
  return program;
}

Rational budget_lhs_of(const IubProgram& program, const SelectionMatrix& selection) {
  if (selection.rows() != program.n || selection.cols() != program.m) {
    throw std::invalid_argument("budget_lhs_of: shape mismatch");
  }
  Rational lhs = make_rational(0);
  for (std::size_t i = 0; i < program.n; ++i) {
    const std::int32_t c = selection.choice(i);
    if (c >= 0) {
      lhs = add(lhs, program.weight(i, static_cast<std::size_t>(c)));
    }
  }
  return lhs;
}

}  // namespace ibpo
