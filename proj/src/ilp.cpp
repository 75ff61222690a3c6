#include "ibpo/ilp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <unordered_map>
#include <vector>

#include "ibpo/rng.hpp"

namespace ibpo {

namespace {

// Objective sums are ratios of small integers; true gaps are orders of
// magnitude above this, accumulated float error orders of magnitude below.
constexpr double kObjectiveTie = 1e-9;

struct ScaledBudget {
  std::vector<std::int64_t> weight;  // n*m
  std::int64_t rhs = 0;
};

ScaledBudget scale_budget(const IubProgram& program) {
  std::int64_t lcm = program.budget_rhs.den;
  for (const Rational& w : program.budget_weight) {
    lcm = std::lcm(lcm, w.den);
    if (lcm > (std::int64_t{1} << 40)) {
      throw std::overflow_error("iub: budget denominators too large to clear exactly");
    }
  }
  ScaledBudget scaled;
  scaled.weight.resize(program.budget_weight.size());
  for (std::size_t k = 0; k < program.budget_weight.size(); ++k) {
    const Rational& w = program.budget_weight[k];
    scaled.weight[k] = w.num * (lcm / w.den);
  }
  scaled.rhs = program.budget_rhs.num * (lcm / program.budget_rhs.den);
  return scaled;
}

// Strict per-row preference order over choices (-1 = none). Lower is better.
std::uint64_t tie_key(const TiePolicy& policy, std::size_t row, std::int32_t choice,
                      std::size_t m) {
  if (policy.kind == TiePolicy::Kind::SeededRandom) {
    return mix_seed(policy.seed, row + 1, static_cast<std::uint64_t>(choice + 2));
  }
  return choice < 0 ? static_cast<std::uint64_t>(m) : static_cast<std::uint64_t>(choice);
}

// Complete-selection comparison shared by both solvers: objective first, then
// the tie policy (selection count only under the default policy, then the
// row-by-row key order).
bool better_complete(double obj_a, std::size_t count_a, std::span<const std::int32_t> choices_a,
                     double obj_b, std::size_t count_b, std::span<const std::int32_t> choices_b,
                     const IubProgram& program) {
  if (obj_a > obj_b + kObjectiveTie) return true;
  if (obj_a < obj_b - kObjectiveTie) return false;
  if (program.tie_policy.kind == TiePolicy::Kind::PreferMoreSelectionsThenLexicographic &&
      count_a != count_b) {
    return count_a > count_b;
  }
  for (std::size_t i = 0; i < choices_a.size(); ++i) {
    const std::uint64_t ka = tie_key(program.tie_policy, i, choices_a[i], program.m);
    const std::uint64_t kb = tie_key(program.tie_policy, i, choices_b[i], program.m);
    if (ka != kb) {
      return ka < kb;
    }
  }
  return false;
}

void validate_program(const IubProgram& program) {
  if (program.n == 0 || program.m == 0) {
    throw std::invalid_argument("iub: empty program");
  }
  if (program.objective.rows() != program.n || program.objective.cols() != program.m ||
      program.mask.rows() != program.n || program.mask.cols() != program.m ||
      program.budget_weight.size() != program.n * program.m) {
    throw std::invalid_argument("iub: inconsistent program dimensions");
  }
}

IubSolution finish(const IubProgram& program, std::vector<std::int32_t> choices, double objective) {
  SelectionMatrix selection =
      SelectionMatrix::from_choices(std::move(choices), program.m, program.mask);
  Rational lhs = budget_lhs_of(program, selection);
  return IubSolution{std::move(selection), objective, lhs, true};
}

// One DP node: best partial assignment reaching `weight` after its row.
// `prev_rank`/`key` order candidates lexicographically without materializing
// choice vectors: ranks are assigned per row by sorting on (prev_rank, key),
// which by induction equals the lexicographic order of the prefix key
// sequences.
struct Node {
  std::int64_t weight = 0;
  double obj = 0.0;
  std::int32_t count = 0;
  std::int32_t prev = -1;  // index into the previous row's nodes
  std::int32_t choice = -1;
  std::uint64_t key = 0;
  std::int32_t prev_rank = 0;
  std::int32_t rank = 0;
};

bool better_node(const Node& a, const Node& b, const TiePolicy& policy) {
  if (a.obj > b.obj + kObjectiveTie) return true;
  if (a.obj < b.obj - kObjectiveTie) return false;
  if (policy.kind == TiePolicy::Kind::PreferMoreSelectionsThenLexicographic &&
      a.count != b.count) {
    return a.count > b.count;
  }
  if (a.prev_rank != b.prev_rank) return a.prev_rank < b.prev_rank;
  return a.key < b.key;
}

}  // namespace

IubSolution solve_exact(const IubProgram& program) {
  validate_program(program);
  const std::size_t n = program.n;
  const std::size_t m = program.m;
  const ScaledBudget budget = scale_budget(program);

  // Minimal achievable weight from row i onward ('none' contributes 0);
  // states that cannot return below rhs are dropped early.
  std::vector<std::int64_t> suffix_min(n + 1, 0);
  for (std::size_t i = n; i-- > 0;) {
    std::int64_t row_min = 0;
    for (std::size_t j = 0; j < m; ++j) {
      if (program.mask.at(i, j) != 0) {
        row_min = std::min(row_min, budget.weight[i * m + j]);
      }
    }
    suffix_min[i] = suffix_min[i + 1] + row_min;
  }
  if (suffix_min[0] > budget.rhs) {
    // Unreachable for programs built here (the all-none selection has lhs 0
    // and rhs >= 0), but arbitrary serialized programs could do this.
    throw std::invalid_argument("iub: program infeasible (budget_rhs below empty selection)");
  }

  std::vector<std::vector<Node>> layers(n);
  std::unordered_map<std::int64_t, std::int32_t> index;  // weight -> node slot
  std::vector<std::int32_t> order;

  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Node>& layer = layers[i];
    const std::vector<Node>* prev_layer = i > 0 ? &layers[i - 1] : nullptr;
    const std::size_t prev_count = i > 0 ? prev_layer->size() : 1;
    index.clear();
    index.reserve(prev_count * (m + 2));

    for (std::size_t p = 0; p < prev_count; ++p) {
      const std::int64_t base_weight = prev_layer ? (*prev_layer)[p].weight : 0;
      const double base_obj = prev_layer ? (*prev_layer)[p].obj : 0.0;
      const std::int32_t base_count = prev_layer ? (*prev_layer)[p].count : 0;
      const std::int32_t base_rank = prev_layer ? (*prev_layer)[p].rank : 0;
      for (std::int32_t choice = -1; choice < static_cast<std::int32_t>(m); ++choice) {
        if (choice >= 0 && program.mask.at(i, static_cast<std::size_t>(choice)) == 0) {
          continue;
        }
        Node node;
        node.weight = base_weight;
        node.obj = base_obj;
        node.count = base_count;
        if (choice >= 0) {
          node.weight += budget.weight[i * m + static_cast<std::size_t>(choice)];
          node.obj += program.objective.at(i, static_cast<std::size_t>(choice));
          node.count += 1;
        }
        if (node.weight + suffix_min[i + 1] > budget.rhs) {
          continue;
        }
        node.prev = prev_layer ? static_cast<std::int32_t>(p) : -1;
        node.choice = choice;
        node.key = tie_key(program.tie_policy, i, choice, m);
        node.prev_rank = base_rank;
        const auto [it, inserted] =
            index.try_emplace(node.weight, static_cast<std::int32_t>(layer.size()));
        if (inserted) {
          layer.push_back(node);
        } else if (better_node(node, layer[it->second], program.tie_policy)) {
          layer[it->second] = node;
        }
      }
    }

    // Rank nodes by the lexicographic order of their prefix key sequences.
    order.resize(layer.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&layer](std::int32_t a, std::int32_t b) {
      if (layer[a].prev_rank != layer[b].prev_rank) {
        return layer[a].prev_rank < layer[b].prev_rank;
      }
      return layer[a].key < layer[b].key;
    });
    for (std::size_t r = 0; r < order.size(); ++r) {
      layer[order[r]].rank = static_cast<std::int32_t>(r);
    }
  }

  const std::vector<Node>& last = layers[n - 1];
  std::int32_t best = -1;
  for (std::size_t k = 0; k < last.size(); ++k) {
    if (best < 0 || better_node(last[k], last[best], program.tie_policy)) {
      best = static_cast<std::int32_t>(k);
    }
  }

  std::vector<std::int32_t> choices(n, -1);
  std::int32_t at = best;
  for (std::size_t i = n; i-- > 0;) {
    choices[i] = layers[i][at].choice;
    at = layers[i][at].prev;
  }
  return finish(program, std::move(choices), last[best].obj);
}

IubSolution brute_force_oracle(const IubProgram& program) {
  validate_program(program);
  const std::size_t n = program.n;
  const std::size_t m = program.m;
  if (static_cast<double>(n) * std::log(static_cast<double>(m + 1)) > std::log(1e7)) {
    throw OracleSizeError("oracle: instance too large, (m+1)^n exceeds 1e7");
  }
  const ScaledBudget budget = scale_budget(program);

  std::vector<std::int32_t> current(n, -1);
  std::vector<std::int32_t> best_choices;
  double best_obj = 0.0;
  std::size_t best_count = 0;
  bool have_best = false;

  auto recurse = [&](auto&& self, std::size_t row, std::int64_t weight, double obj,
                     std::size_t count) -> void {
    if (row == n) {
      if (weight > budget.rhs) {
        return;
      }
      if (!have_best || better_complete(obj, count, current, best_obj, best_count, best_choices,
                                        program)) {
        best_choices = current;
        best_obj = obj;
        best_count = count;
        have_best = true;
      }
      return;
    }
    for (std::int32_t choice = -1; choice < static_cast<std::int32_t>(m); ++choice) {
      if (choice >= 0 && program.mask.at(row, static_cast<std::size_t>(choice)) == 0) {
        continue;
      }
      current[row] = choice;
      if (choice < 0) {
        self(self, row + 1, weight, obj, count);
      } else {
        const std::size_t j = static_cast<std::size_t>(choice);
        self(self, row + 1, weight + budget.weight[row * m + j], obj + program.objective.at(row, j),
             count + 1);
      }
    }
    current[row] = -1;
  };
  recurse(recurse, 0, 0, 0.0, 0);

  if (!have_best) {
    throw std::invalid_argument("iub: program infeasible (budget_rhs below empty selection)");
  }
  return finish(program, std::move(best_choices), best_obj);
}

}  // namespace ibpo
