#include "ibpo/simenv.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>

#include "ibpo/ilp.hpp"
#include "ibpo/rng.hpp"

namespace ibpo {

namespace {

// Stream labels for deriving per-step RNG seeds from the run seed.
constexpr std::uint64_t kStepStream = 1;
constexpr std::uint64_t kEvalStream = 2;
constexpr std::uint64_t kCgpoStream = 3;
constexpr std::uint64_t kPromptStream = 11;
constexpr std::uint64_t kResponseStream = 12;

std::vector<double> answer_distribution(const TaskModel& task, int difficulty) {
  const double p = task.standard_accuracy[difficulty - 1];
  std::vector<double> probs(task.answer_alphabet_size, 0.0);
  probs[0] = p;
  const double rest = (1.0 - p) / static_cast<double>(task.answer_alphabet_size - 1);
  for (std::size_t a = 1; a < probs.size(); ++a) {
    probs[a] = rest;
  }
  return probs;
}

std::string answer_token(std::size_t index) { return "a" + std::to_string(index); }

void validate_task(const TaskModel& task) {
  const std::size_t d = static_cast<std::size_t>(task.num_difficulties);
  if (d == 0 || task.difficulty_weights.size() != d || task.standard_accuracy.size() != d ||
      task.extended_accuracy.size() != d || task.extended_expected_trials.size() != d) {
    throw std::invalid_argument("task: inconsistent difficulty dimensions");
  }
}

}  // namespace

TaskModel derive_task(std::vector<double> standard_accuracy, int alphabet_size,
                      const SvConfig& sv, std::vector<double> difficulty_weights) {
  if (standard_accuracy.empty()) {
    throw std::invalid_argument("task: needs at least one difficulty level");
  }
  if (alphabet_size < 2) {
    throw std::invalid_argument("task: answer alphabet needs the correct token plus a distractor");
  }
  for (const double p : standard_accuracy) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("task: accuracies must lie in [0, 1]");
    }
  }
  const std::size_t d = standard_accuracy.size();
  if (difficulty_weights.empty()) {
    difficulty_weights.assign(d, 1.0 / static_cast<double>(d));
  }
  if (difficulty_weights.size() != d) {
    throw std::invalid_argument("task: difficulty_weights size mismatch");
  }
  double sum = 0.0;
  for (const double w : difficulty_weights) {
    if (!(w >= 0.0)) {
      throw std::invalid_argument("task: negative difficulty weight");
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("task: difficulty weights must sum to 1");
  }

  TaskModel task;
  task.num_difficulties = static_cast<int>(d);
  task.difficulty_weights = std::move(difficulty_weights);
  task.standard_accuracy = std::move(standard_accuracy);
  task.answer_alphabet_size = alphabet_size;
  task.sv = sv;
  task.extended_accuracy.resize(d);
  task.extended_expected_trials.resize(d);
  for (std::size_t level = 1; level <= d; ++level) {
    const std::vector<double> probs = answer_distribution(task, static_cast<int>(level));
    const SvProfile profile = sv_success_profile(probs, 0, sv);
    task.extended_accuracy[level - 1] = profile.success_probability;
    task.extended_expected_trials[level - 1] = profile.expected_trials;
  }
  return task;
}

TaskModel with_difficulty_weights(TaskModel task, std::vector<double> weights) {
  if (weights.size() != static_cast<std::size_t>(task.num_difficulties)) {
    throw std::invalid_argument("task: difficulty_weights size mismatch");
  }
  task.difficulty_weights = std::move(weights);
  return task;
}

TabularPolicy::TabularPolicy(int num_difficulties)
    : logits_(static_cast<std::size_t>(num_difficulties), 2, 0.0) {
  if (num_difficulties < 1) {
    throw std::invalid_argument("policy: needs at least one difficulty level");
  }
}

TabularPolicy TabularPolicy::from_logits(RealMatrix logits) {
  if (logits.rows() < 1 || logits.cols() != 2) {
    throw std::invalid_argument("policy: logits must be D x 2");
  }
  TabularPolicy policy;
  policy.logits_ = std::move(logits);
  return policy;
}

namespace {

std::size_t group_column(GroupLabel g) { return g == GroupLabel::Extended ? 1 : 0; }

}  // namespace

double TabularPolicy::logit(int difficulty, GroupLabel g) const {
  return logits_.at(static_cast<std::size_t>(difficulty - 1), group_column(g));
}

void TabularPolicy::set_logit(int difficulty, GroupLabel g, double value) {
  logits_.at(static_cast<std::size_t>(difficulty - 1), group_column(g)) = value;
}

double TabularPolicy::log_prob(int difficulty, GroupLabel g) const {
  const std::size_t row = static_cast<std::size_t>(difficulty - 1);
  const double z0 = logits_.at(row, 0);
  const double z1 = logits_.at(row, 1);
  const double zmax = std::max(z0, z1);
  const double lse = zmax + std::log1p(std::exp(std::min(z0, z1) - zmax));
  return logits_.at(row, group_column(g)) - lse;
}

double TabularPolicy::prob(int difficulty, GroupLabel g) const {
  return std::exp(log_prob(difficulty, g));
}

std::vector<PromptRecord> sample_prompts(const TaskModel& task, std::size_t n,
                                         std::uint64_t seed) {
  validate_task(task);
  Rng rng(seed);
  std::vector<PromptRecord> prompts(n);
  for (std::size_t i = 0; i < n; ++i) {
    prompts[i].id = static_cast<int>(i);
    prompts[i].difficulty = static_cast<int>(rng.categorical(task.difficulty_weights)) + 1;
  }
  return prompts;
}

namespace {

ResponseRecord sample_response(const TabularPolicy& policy, const TabularPolicy& ref,
                               const TaskModel& task, int difficulty, Rng& rng) {
  ResponseRecord r;
  const bool extended = rng.bernoulli(policy.prob_extended(difficulty));
  r.group = extended ? GroupLabel::Extended : GroupLabel::Standard;
  r.log_prob = policy.log_prob(difficulty, r.group);
  r.ref_log_prob = ref.log_prob(difficulty, r.group);

  const std::vector<double> probs = answer_distribution(task, difficulty);
  if (!extended) {
    r.trials = 1;
    r.correct = rng.bernoulli(probs[0]);
    r.answer = r.correct ? answer_token(0)
                         : answer_token(1 + rng.uniform_index(probs.size() - 1));
    return r;
  }

  // A full sequential-voting episode; correctness and trial count stay jointly
  // faithful to the law that derive_task computed in closed form.
  std::vector<int> counts(probs.size(), 0);
  std::size_t leader = 0;
  int leader_count = 0;
  int trial = 0;
  bool consensus = false;
  std::size_t final_answer = 0;
  while (trial < task.sv.max_trials) {
    const std::size_t a = rng.categorical(probs);
    ++trial;
    const int c = ++counts[a];
    if (c > leader_count) {
      leader = a;
      leader_count = c;
    }
    if (c == task.sv.consensus_count) {
      consensus = true;
      final_answer = a;
      break;
    }
  }
  if (!consensus) {
    final_answer = leader;
  }
  r.trials = trial;
  r.correct = final_answer == 0;
  r.answer = answer_token(final_answer);
  return r;
}

}  // namespace

std::vector<ResponseRecord> sample_responses(const TabularPolicy& policy, const TabularPolicy& ref,
                                             const TaskModel& task,
                                             std::span<const PromptRecord> prompts, std::size_t m,
                                             std::uint64_t seed) {
  validate_task(task);
  if (policy.num_difficulties() != task.num_difficulties ||
      ref.num_difficulties() != task.num_difficulties) {
    throw std::invalid_argument("sample_responses: policy/task difficulty mismatch");
  }
  Rng rng(seed);
  std::vector<ResponseRecord> responses;
  responses.reserve(prompts.size() * m);
  for (const PromptRecord& prompt : prompts) {
    for (std::size_t j = 0; j < m; ++j) {
      responses.push_back(sample_response(policy, ref, task, prompt.difficulty, rng));
    }
  }
  return responses;
}

Batch sample_batch(const TabularPolicy& policy, const TabularPolicy& ref, const TaskModel& task,
                   std::size_t n, std::size_t m, std::uint64_t seed) {
  std::vector<PromptRecord> prompts = sample_prompts(task, n, mix_seed(seed, kPromptStream));
  std::vector<ResponseRecord> responses =
      sample_responses(policy, ref, task, prompts, m, mix_seed(seed, kResponseStream, 0));
  return build_batch(std::move(prompts), std::move(responses), m);
}

TabularPolicy weighted_sft_update(const TabularPolicy& policy, const Batch& batch,
                                  const SelectionMatrix& selection, double alpha) {
  if (selection.rows() != batch.size() || selection.cols() != batch.responses_per_prompt()) {
    throw std::invalid_argument("weighted_sft_update: selection/batch shape mismatch");
  }
  RealMatrix gradient(policy.logits().rows(), 2, 0.0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const std::int32_t c = selection.choice(i);
    if (c < 0) {
      continue;
    }
    const int d = batch.prompt(i).difficulty;
    if (d > policy.num_difficulties()) {
      throw std::invalid_argument("weighted_sft_update: difficulty outside the policy table");
    }
    const GroupLabel g = batch.response(i, static_cast<std::size_t>(c)).group;
    const std::size_t row = static_cast<std::size_t>(d - 1);
    const double p_standard = policy.prob(d, GroupLabel::Standard);
    const double p_extended = policy.prob(d, GroupLabel::Extended);
    gradient.at(row, 0) += (g == GroupLabel::Standard ? 1.0 : 0.0) - p_standard;
    gradient.at(row, 1) += (g == GroupLabel::Extended ? 1.0 : 0.0) - p_extended;
  }
  RealMatrix logits = policy.logits();
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    logits.at(r, 0) += alpha * gradient.at(r, 0);
    logits.at(r, 1) += alpha * gradient.at(r, 1);
  }
  return TabularPolicy::from_logits(std::move(logits));
}

namespace {

void validate_run_config(const RunConfig& config) {
  if (config.n < 1 || config.m < 1 || config.k_b < 1 || config.k_r < 1) {
    throw std::invalid_argument("run: n, m, k_b, k_r must be >= 1");
  }
  if (config.steps < 0) {
    throw std::invalid_argument("run: steps must be >= 0");
  }
  if (!(config.alpha > 0.0)) {
    throw std::invalid_argument("run: learning rate must be positive");
  }
  if (config.eval.size < 1) {
    throw std::invalid_argument("run: eval size must be >= 1");
  }
  make_budget(config.budget.q_plus, config.budget.kl_max);
}

// Margin total over the accepted responses; the IuB solver reports this
// directly, the CGPO baseline needs it recomputed for the trace.
double selection_objective(const MarginMatrix& margins, const SelectionMatrix& selection) {
  double total = 0.0;
  for (std::size_t i = 0; i < selection.rows(); ++i) {
    const std::int32_t c = selection.choice(i);
    if (c >= 0) {
      total += margins.at(i, static_cast<std::size_t>(c));
    }
  }
  return total;
}

StepRecord run_step(TabularPolicy& policy, const RunConfig& config, const TaskModel& task,
                    const TaskModel& eval_task, const Batch& batch, int step_index) {
  const MarginMatrix margins = margin_rewards(batch, config.margin_mode);
  const FeasibilityMask mask = feasible_mask(batch, config.budget.kl_max);
  const IubProgram program = build_iub_program(batch, mask, margins, config.budget,
                                               config.tie_policy, config.budget_mode);

  SelectionMatrix selection = SelectionMatrix::none(batch.size(), batch.responses_per_prompt());
  double objective = 0.0;
  if (config.cgpo_baseline) {
    selection = solve_cgpo(batch, mask, correctness_rewards(batch),
                           mix_seed(config.seed, kCgpoStream, static_cast<std::uint64_t>(step_index)));
    objective = selection_objective(margins, selection);
  } else {
    IubSolution solution = solve_exact(program);
    objective = solution.objective_value;
    selection = std::move(solution.selection);
  }
  const Rational lhs = budget_lhs_of(program, selection);

  std::size_t selected = 0;
  std::size_t selected_extended = 0;
  std::size_t all_extended = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (std::size_t j = 0; j < batch.responses_per_prompt(); ++j) {
      all_extended += batch.response(i, j).group == GroupLabel::Extended ? 1 : 0;
    }
    const std::int32_t c = selection.choice(i);
    if (c >= 0) {
      ++selected;
      selected_extended +=
          batch.response(i, static_cast<std::size_t>(c)).group == GroupLabel::Extended ? 1 : 0;
    }
  }

  policy = weighted_sft_update(policy, batch, selection, config.alpha);
  const EvalReport eval =
      evaluate(policy, eval_task, config.eval.size,
               mix_seed(config.seed, kEvalStream, static_cast<std::uint64_t>(step_index)));

  StepRecord record;
  record.step = step_index;
  record.voting_ratio_selected =
      selected > 0 ? static_cast<double>(selected_extended) / static_cast<double>(selected) : 0.0;
  record.voting_ratio_all = static_cast<double>(all_extended) /
                            static_cast<double>(batch.size() * batch.responses_per_prompt());
  record.pass_at_1 = eval.pass_at_1;
  record.budget_lhs = to_double(lhs);
  record.objective = objective;
  record.vr_per_difficulty.resize(task.num_difficulties);
  for (int d = 1; d <= task.num_difficulties; ++d) {
    record.vr_per_difficulty[d - 1] = policy.prob_extended(d);
  }
  record.avg_trials = eval.avg_trials;
  record.program_rows = program.n;
  record.program_cols = program.m;
  record.budget_violated = compare(lhs, program.budget_rhs) > 0;
  return record;
}

TaskModel eval_task_for(const RunConfig& config, const TaskModel& task) {
  if (config.eval.difficulty_weights.empty()) {
    return task;
  }
  return with_difficulty_weights(task, config.eval.difficulty_weights);
}

}  // namespace

TrainingTrace run_ibpo(const RunConfig& config, const TaskModel& task, const TabularPolicy& ref) {
  validate_run_config(config);
  validate_task(task);
  const TaskModel eval_task = eval_task_for(config, task);
  TabularPolicy policy = ref;
  TrainingTrace trace;
  trace.num_difficulties = task.num_difficulties;
  trace.steps.reserve(config.steps);
  for (int t = 1; t <= config.steps; ++t) {
    const Batch batch =
        sample_batch(policy, ref, task, config.n, config.m,
                     mix_seed(config.seed, kStepStream, static_cast<std::uint64_t>(t), 0));
    trace.steps.push_back(run_step(policy, config, task, eval_task, batch, t));
  }
  return trace;
}

TrainingTrace run_accumulated(const RunConfig& config, const TaskModel& task,
                              const TabularPolicy& ref) {
  validate_run_config(config);
  validate_task(task);
  const TaskModel eval_task = eval_task_for(config, task);
  const std::size_t n = config.n;
  const std::size_t m = config.m;
  TabularPolicy policy = ref;
  TrainingTrace trace;
  trace.num_difficulties = task.num_difficulties;
  trace.steps.reserve(config.steps);
  for (int t = 1; t <= config.steps; ++t) {
    std::vector<PromptRecord> prompts;
    prompts.reserve(n * config.k_b);
    std::vector<ResponseRecord> responses;
    responses.reserve(n * config.k_b * m * config.k_r);
    for (int b = 0; b < config.k_b; ++b) {
      const std::uint64_t block_seed = mix_seed(config.seed, kStepStream,
                                                static_cast<std::uint64_t>(t),
                                                static_cast<std::uint64_t>(b));
      std::vector<PromptRecord> block_prompts =
          sample_prompts(task, n, mix_seed(block_seed, kPromptStream));
      // k_r response draws for the same prompts, laid side by side so each
      // super-row holds m * k_r responses of one prompt.
      std::vector<std::vector<ResponseRecord>> draws(config.k_r);
      for (int r = 0; r < config.k_r; ++r) {
        draws[r] = sample_responses(policy, ref, task, block_prompts, m,
                                    mix_seed(block_seed, kResponseStream,
                                             static_cast<std::uint64_t>(r)));
      }
      for (std::size_t i = 0; i < n; ++i) {
        block_prompts[i].id = static_cast<int>(b * n + i);
        prompts.push_back(block_prompts[i]);
        for (int r = 0; r < config.k_r; ++r) {
          for (std::size_t j = 0; j < m; ++j) {
            responses.push_back(draws[r][i * m + j]);
          }
        }
      }
    }
    const Batch batch = build_batch(std::move(prompts), std::move(responses), m * config.k_r);
    trace.steps.push_back(run_step(policy, config, task, eval_task, batch, t));
  }
  return trace;
}

EvalReport evaluate(const TabularPolicy& policy, const TaskModel& task, std::size_t eval_size,
                    std::uint64_t seed) {
  validate_task(task);
  if (eval_size < 1) {
    throw std::invalid_argument("evaluate: eval_size must be >= 1");
  }
  // One reference is enough here: log-probs are not used by the metrics.
  const TabularPolicy& ref = policy;
  Rng rng(seed);
  std::size_t correct = 0;
  std::size_t extended = 0;
  double trials = 0.0;
  std::vector<std::size_t> extended_per_d(task.num_difficulties, 0);
  std::vector<std::size_t> total_per_d(task.num_difficulties, 0);
  for (std::size_t e = 0; e < eval_size; ++e) {
    const int d = static_cast<int>(rng.categorical(task.difficulty_weights)) + 1;
    const ResponseRecord r = sample_response(policy, ref, task, d, rng);
    correct += r.correct ? 1 : 0;
    extended += r.group == GroupLabel::Extended ? 1 : 0;
    extended_per_d[d - 1] += r.group == GroupLabel::Extended ? 1 : 0;
    total_per_d[d - 1] += 1;
    trials += r.trials;
  }
  EvalReport report;
  report.pass_at_1 = static_cast<double>(correct) / static_cast<double>(eval_size);
  report.voting_ratio = static_cast<double>(extended) / static_cast<double>(eval_size);
  report.per_difficulty_ratios.resize(task.num_difficulties, 0.0);
  for (int d = 0; d < task.num_difficulties; ++d) {
    if (total_per_d[d] > 0) {
      report.per_difficulty_ratios[d] =
          static_cast<double>(extended_per_d[d]) / static_cast<double>(total_per_d[d]);
    }
  }
  report.avg_trials = trials / static_cast<double>(eval_size);
  return report;
}

void write_trace_csv(const TrainingTrace& trace, std::ostream& out) {
  out << "step,voting_ratio_selected,voting_ratio_all,pass_at_1,budget_lhs,objective";
  for (int d = 1; d <= trace.num_difficulties; ++d) {
    out << ",vr_d" << d;
  }
  out << ",avg_trials\n";
  char buffer[64];
  const auto put = [&](double v) {
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    out << ',' << buffer;
  };
  for (const StepRecord& s : trace.steps) {
    out << s.step;
    put(s.voting_ratio_selected);
    put(s.voting_ratio_all);
    put(s.pass_at_1);
    put(s.budget_lhs);
    put(s.objective);
    for (const double v : s.vr_per_difficulty) {
      put(v);
    }
    put(s.avg_trials);
    out << '\n';
  }
}

}  // namespace ibpo
