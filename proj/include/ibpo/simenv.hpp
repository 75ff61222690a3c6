#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "ibpo/core.hpp"
#include "ibpo/rewards.hpp"
#include "ibpo/selection.hpp"
#include "ibpo/voting.hpp"

namespace ibpo {

// Difficulty-stratified synthetic task. Standard responses solve difficulty d
// with probability standard_accuracy[d-1] in one trial; Extended responses run
// a sequential vote over the same per-trial answer distribution, so their
// accuracy and trial counts follow exactly from sv_success_profile.
struct TaskModel {
  int num_difficulties = 0;
  std::vector<double> difficulty_weights;   // sums to 1
  std::vector<double> standard_accuracy;    // per difficulty, in [0,1]
  int answer_alphabet_size = 0;             // correct token + distractors
  SvConfig sv;
  std::vector<double> extended_accuracy;        // derived
  std::vector<double> extended_expected_trials;  // derived
};

// Fills the derived fields by exact enumeration, splitting the wrong-answer
// mass uniformly over the alphabet_size - 1 distractors. Empty
// difficulty_weights means uniform.
TaskModel derive_task(std::vector<double> standard_accuracy, int alphabet_size,
                      const SvConfig& sv = {}, std::vector<double> difficulty_weights = {});

// Same task with replaced difficulty weights (for train/eval distribution
// shift experiments).
TaskModel with_difficulty_weights(TaskModel task, std::vector<double> weights);

// Softmax policy over the two response groups, one logit row per difficulty.
// Stands in for the generation model at desk scale.
class TabularPolicy {
 public:
  TabularPolicy() = default;
  explicit TabularPolicy(int num_difficulties);
  static TabularPolicy from_logits(RealMatrix logits);  // D x 2

  int num_difficulties() const { return static_cast<int>(logits_.rows()); }
  // difficulty is 1-based throughout, matching PromptRecord.
  double logit(int difficulty, GroupLabel g) const;
  void set_logit(int difficulty, GroupLabel g, double value);
  double log_prob(int difficulty, GroupLabel g) const;
  double prob(int difficulty, GroupLabel g) const;
  double prob_extended(int difficulty) const { return prob(difficulty, GroupLabel::Extended); }
  const RealMatrix& logits() const { return logits_; }

  bool operator==(const TabularPolicy&) const = default;

 private:
  RealMatrix logits_;
};

struct StepRecord {
  int step = 0;                    // 1-based
  double voting_ratio_selected = 0.0;
  double voting_ratio_all = 0.0;
  double pass_at_1 = 0.0;
  double budget_lhs = 0.0;
  double objective = 0.0;
  std::vector<double> vr_per_difficulty;  // policy P(Extended | d) after the update
  double avg_trials = 0.0;
  // Diagnostics, not part of the CSV schema.
  std::size_t program_rows = 0;
  std::size_t program_cols = 0;
  bool budget_violated = false;  // exact rational check of the budget row
};

struct TrainingTrace {
  int num_difficulties = 0;
  std::vector<StepRecord> steps;
};

struct EvalOptions {
  std::size_t size = 512;
  std::vector<double> difficulty_weights;  // empty: use the task's
};

struct RunConfig {
  BudgetConfig budget;
  int n = 32;        // prompts per sub-batch
  int m = 8;         // responses per prompt
  double alpha = 0.1;
  int steps = 200;   // optimization steps T
  int k_b = 4;       // prompt-batch accumulation
  int k_r = 1;       // response accumulation
  std::uint64_t seed = 0;
  MarginMode margin_mode = MarginMode::Conditional;
  BudgetMode budget_mode = BudgetMode::Relative;
  TiePolicy tie_policy;
  bool cgpo_baseline = false;  // swap the IuB solver for the CGPO selector
  EvalOptions eval;
};

std::vector<PromptRecord> sample_prompts(const TaskModel& task, std::size_t n, std::uint64_t seed);

// Row-major n*m responses for the given prompts: group from the policy
// softmax, correctness and trial count from a simulated episode (one Bernoulli
// trial for Standard, a full sequential vote for Extended), log-probs from
// policy and reference.
std::vector<ResponseRecord> sample_responses(const TabularPolicy& policy, const TabularPolicy& ref,
                                             const TaskModel& task,
                                             std::span<const PromptRecord> prompts, std::size_t m,
                                             std::uint64_t seed);

Batch sample_batch(const TabularPolicy& policy, const TabularPolicy& ref, const TaskModel& task,
                   std::size_t n, std::size_t m, std::uint64_t seed);

// One ascent step on the selected-response log-likelihood with the selection
// weights held fixed: logits += alpha * sum over selected (i,j) of
// grad log softmax(group_ij | difficulty_i).
TabularPolicy weighted_sft_update(const TabularPolicy& policy, const Batch& batch,
                                  const SelectionMatrix& selection, double alpha);

// T iterations of sample -> mask -> margins -> budgeted selection -> weighted
// SFT, starting from the reference policy.
TrainingTrace run_ibpo(const RunConfig& config, const TaskModel& task, const TabularPolicy& ref);

// Sample-accumulation variant: per step, concatenates k_b prompt sub-batches
// and k_r response draws into one (n*k_b) x (m*k_r) program. With
// k_b = k_r = 1 the trace is identical to run_ibpo under the same seed.
TrainingTrace run_accumulated(const RunConfig& config, const TaskModel& task,
                              const TabularPolicy& ref);

struct EvalReport {
  double pass_at_1 = 0.0;
  double voting_ratio = 0.0;
  std::vector<double> per_difficulty_ratios;
  double avg_trials = 0.0;
};

// One sampled response per evaluation prompt.
EvalReport evaluate(const TabularPolicy& policy, const TaskModel& task, std::size_t eval_size,
                    std::uint64_t seed);

// CSV with columns step,voting_ratio_selected,voting_ratio_all,pass_at_1,
// budget_lhs,objective,vr_d1..vr_dD,avg_trials.
void write_trace_csv(const TrainingTrace& trace, std::ostream& out);

}  // namespace ibpo
