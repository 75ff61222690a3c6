#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ibpo {

// Sequential-voting stop rule: emit trials until some answer has appeared
// consensus_count times, or max_trials trials have been consumed.
struct SvConfig {
  int max_trials = 8;
  int consensus_count = 3;
};

struct SvOutcome {
  std::string final_answer;
  int trials_used = 0;
  bool consensus = false;
};

// Scans the answers in order and stops at the first prefix where an answer
// reaches consensus_count occurrences. Without consensus, consumes
// min(size, max_trials) trials and falls back to the plurality answer,
// earliest-reached winner on ties. Never reads past the consumed prefix.
SvOutcome sv_conclude(std::span<const std::string> answers, const SvConfig& config);

// sv_conclude, except that a consensus-less scan whose consumed trials contain
// a correct answer concludes with a seeded-uniform pick among the correct
// occurrences. This is the construction used to turn sampled trials into
// fine-tuning records.
SvOutcome build_sv_record(std::span<const std::string> answers, std::string_view gold,
                          const SvConfig& config, std::uint64_t rng_seed);

// Most frequent answer, ties broken by earliest first occurrence.
std::string majority_vote(std::span<const std::string> answers);

// Fraction of problems with at least one correct flag. Inner lists must share
// one length k >= 1 and hold 0/1 values.
double pass_at_k(const std::vector<std::vector<int>>& per_problem_correct_flags);

// Fraction of problems whose majority answer matches the gold answer.
double majority_at_k(const std::vector<std::vector<std::string>>& per_problem_answers,
                     const std::vector<std::string>& golds);

struct SvProfile {
  double success_probability = 0.0;
  double expected_trials = 0.0;
};

// Exact law of the sequential vote under i.i.d. per-trial answer draws:
// enumerates every answer sequence up to max_trials with early stopping.
// probabilities must sum to 1 within 1e-9; the alphabet is capped at 6 so the
// enumeration stays instant.
SvProfile sv_success_profile(std::span<const double> probabilities, std::size_t correct_index,
                             const SvConfig& config);

}  // namespace ibpo
