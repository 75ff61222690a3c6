#include "ibpo/voting.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <unordered_map>

#include "ibpo/rewards.hpp"
#include "ibpo/rng.hpp"

namespace ibpo {

namespace {

void validate_config(const SvConfig& config) {
  if (config.consensus_count < 1 || config.consensus_count > config.max_trials) {
    throw std::invalid_argument("sv: need 1 <= consensus_count <= max_trials");
  }
}

struct ScanResult {
  SvOutcome outcome;
  std::size_t consumed = 0;
};

// Shared scan for sv_conclude and build_sv_record. Tracks a running leader so
// the no-consensus fallback is the answer that reached the final plurality
// count first.
ScanResult scan(std::span<const std::string> answers, const SvConfig& config) {
  validate_config(config);
  if (answers.empty()) {
    throw std::invalid_argument("sv: empty answer list");
  }
  const std::size_t consume = std::min(answers.size(), static_cast<std::size_t>(config.max_trials));
  std::unordered_map<std::string_view, int> counts;
  std::string_view leader;
  int leader_count = 0;
  for (std::size_t t = 0; t < consume; ++t) {
    const int c = ++counts[answers[t]];
    if (c > leader_count) {
      leader = answers[t];
      leader_count = c;
    }
    if (c == config.consensus_count) {
      return {SvOutcome{answers[t], static_cast<int>(t) + 1, true}, t + 1};
    }
  }
  return {SvOutcome{std::string(leader), static_cast<int>(consume), false}, consume};
}

}  // namespace

SvOutcome sv_conclude(std::span<const std::string> answers, const SvConfig& config) {
  return scan(answers, config).outcome;
}

SvOutcome build_sv_record(std::span<const std::string> answers, std::string_view gold,
                          const SvConfig& config, std::uint64_t rng_seed) {
  ScanResult result = scan(answers, config);
  if (result.outcome.consensus) {
    return result.outcome;
  }
  std::vector<std::size_t> correct_indices;
  for (std::size_t t = 0; t < result.consumed; ++t) {
    if (match_reward(answers[t], gold) == 1) {
      correct_indices.push_back(t);
    }
  }
  if (!correct_indices.empty()) {
    Rng rng(rng_seed);
    result.outcome.final_answer = answers[correct_indices[rng.uniform_index(correct_indices.size())]];
  }
  // No correct trial at all: keep the plurality answer; callers filter such
  // records by checking it against the gold answer.
  return result.outcome;
}

std::string majority_vote(std::span<const std::string> answers) {
  if (answers.empty()) {
    throw std::invalid_argument("majority_vote: empty answer list");
  }
  std::unordered_map<std::string_view, int> counts;
  std::string_view best;
  int best_count = 0;
  for (const std::string& a : answers) {
    ++counts[a];
  }
  // Earliest first occurrence wins ties, so walk in order and require a
  // strictly larger count to displace the incumbent.
  for (const std::string& a : answers) {
    const auto it = counts.find(a);
    if (it->second > best_count) {
      best = a;
      best_count = it->second;
    }
  }
  return std::string(best);
}

double pass_at_k(const std::vector<std::vector<int>>& per_problem_correct_flags) {
  if (per_problem_correct_flags.empty()) {
    throw std::invalid_argument("pass_at_k: no problems");
  }
  const std::size_t k = per_problem_correct_flags.front().size();
  if (k == 0) {
    throw std::invalid_argument("pass_at_k: k must be >= 1");
  }
  std::size_t solved = 0;
  for (std::size_t i = 0; i < per_problem_correct_flags.size(); ++i) {
    const auto& flags = per_problem_correct_flags[i];
    if (flags.size() != k) {
      throw std::invalid_argument("pass_at_k: ragged input at problem " + std::to_string(i));
    }
    bool any = false;
    for (const int f : flags) {
      if (f != 0 && f != 1) {
        throw std::invalid_argument("pass_at_k: non-binary flag at problem " + std::to_string(i));
      }
      any = any || f == 1;
    }
    solved += any ? 1 : 0;
  }
  return static_cast<double>(solved) / static_cast<double>(per_problem_correct_flags.size());
}

double majority_at_k(const std::vector<std::vector<std::string>>& per_problem_answers,
                     const std::vector<std::string>& golds) {
  if (per_problem_answers.empty() || per_problem_answers.size() != golds.size()) {
    throw std::invalid_argument("majority_at_k: answers/golds size mismatch");
  }
  const std::size_t k = per_problem_answers.front().size();
  if (k == 0) {
    throw std::invalid_argument("majority_at_k: k must be >= 1");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < per_problem_answers.size(); ++i) {
    if (per_problem_answers[i].size() != k) {
      throw std::invalid_argument("majority_at_k: ragged input at problem " + std::to_string(i));
    }
    hits += match_reward(majority_vote(per_problem_answers[i]), golds[i]);
  }
  return static_cast<double>(hits) / static_cast<double>(per_problem_answers.size());
}

namespace {

// Depth-first enumeration over answer sequences. `counts` and the running
// leader mirror the scan() semantics trial by trial.
struct ProfileEnumerator {
  std::span<const double> probs;
  std::size_t correct_index;
  SvConfig config;
  double success = 0.0;
  double trials_weighted = 0.0;

  void walk(std::vector<int>& counts, int trial, int leader, int leader_count, double p) {
    for (std::size_t a = 0; a < probs.size(); ++a) {
      if (probs[a] <= 0.0) {
        continue;
      }
      const double pa = p * probs[a];
      const int c = ++counts[a];
      int new_leader = leader;
      int new_leader_count = leader_count;
      if (c > new_leader_count) {
        new_leader = static_cast<int>(a);
        new_leader_count = c;
      }
      if (c == config.consensus_count) {
        success += (a == correct_index) ? pa : 0.0;
        trials_weighted += pa * (trial + 1);
      } else if (trial + 1 == config.max_trials) {
        success += (static_cast<std::size_t>(new_leader) == correct_index) ? pa : 0.0;
        trials_weighted += pa * config.max_trials;
      } else {
        walk(counts, trial + 1, new_leader, new_leader_count, pa);
      }
      --counts[a];
    }
  }
};

}  // namespace

SvProfile sv_success_profile(std::span<const double> probabilities, std::size_t correct_index,
                             const SvConfig& config) {
  validate_config(config);
  if (probabilities.empty() || correct_index >= probabilities.size()) {
    throw std::invalid_argument("sv_success_profile: bad distribution");
  }
  if (probabilities.size() > 6) {
    throw std::invalid_argument("sv_success_profile: alphabet capped at 6 tokens, got " +
                                std::to_string(probabilities.size()));
  }
  double sum = 0.0;
  for (const double p : probabilities) {
    if (!(p >= 0.0)) {
      throw std::invalid_argument("sv_success_profile: negative probability");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("sv_success_profile: probabilities must sum to 1");
  }
  ProfileEnumerator e{probabilities, correct_index, config, 0.0, 0.0};
  std::vector<int> counts(probabilities.size(), 0);
  e.walk(counts, 0, -1, 0, 1.0);
  return SvProfile{e.success, e.trials_weighted};
}

}  // namespace ibpo
