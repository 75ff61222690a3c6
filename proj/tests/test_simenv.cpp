#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <sstream>
#include <vector>

#include "ibpo/ilp.hpp"
#include "ibpo/simenv.hpp"
#include "test_support.hpp"

using namespace ibpo;

namespace {

const std::vector<double> kDefaultAccuracy{0.95, 0.88, 0.80, 0.72, 0.62};

TaskModel default_task() { return derive_task(kDefaultAccuracy, 4); }

RunConfig quick_config(Rational q, std::uint64_t seed, int steps = 20) {
  RunConfig config;
  config.budget = make_budget(q);
  config.n = 8;
  config.m = 6;
  config.steps = steps;
  config.k_b = 1;
  config.k_r = 1;
  config.seed = seed;
  config.eval.size = 128;
  return config;
}

// The loss whose gradient the update must take: total log-likelihood of the
// selected responses' groups.
double selected_log_likelihood(const TabularPolicy& policy, const Batch& batch,
                               const SelectionMatrix& selection) {
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const std::int32_t c = selection.choice(i);
    if (c >= 0) {
      total += policy.log_prob(batch.prompt(i).difficulty,
                               batch.response(i, static_cast<std::size_t>(c)).group);
    }
  }
  return total;
}

}  // namespace

TEST_CASE("derive_task extremes") {
  const TaskModel sure = derive_task({1.0}, 4);
  CHECK(sure.extended_accuracy[0] == doctest::Approx(1.0));
  CHECK(sure.extended_expected_trials[0] == doctest::Approx(3.0));

  const TaskModel hopeless = derive_task({0.0}, 4);
  CHECK(hopeless.extended_accuracy[0] == doctest::Approx(0.0));
}

TEST_CASE("derive_task default profile amplifies every level") {
  const TaskModel task = default_task();
  REQUIRE(task.num_difficulties == 5);
  for (int d = 0; d < 5; ++d) {
    // All default accuracies exceed 1/alphabet, so voting strictly helps.
    CHECK(task.standard_accuracy[d] > 1.0 / task.answer_alphabet_size);
    CHECK(task.extended_accuracy[d] > task.standard_accuracy[d]);
    // Derived columns are exactly the enumeration outputs.
    std::vector<double> probs(task.answer_alphabet_size,
                              (1.0 - task.standard_accuracy[d]) / (task.answer_alphabet_size - 1));
    probs[0] = task.standard_accuracy[d];
    const SvProfile profile = sv_success_profile(probs, 0, task.sv);
    CHECK(task.extended_accuracy[d] == profile.success_probability);
    CHECK(task.extended_expected_trials[d] == profile.expected_trials);
  }
  // Uniform weights by default.
  CHECK(task.difficulty_weights[0] == doctest::Approx(0.2));
}

TEST_CASE("derive_task guards") {
  CHECK_THROWS_AS(derive_task({0.5}, 1), std::invalid_argument);
  CHECK_THROWS_AS(derive_task({0.5}, 7), std::invalid_argument);  // profile alphabet cap
  CHECK_THROWS_AS(derive_task({1.5}, 4), std::invalid_argument);
  CHECK_THROWS_AS(derive_task({}, 4), std::invalid_argument);
  CHECK_THROWS_AS(derive_task({0.5, 0.5}, 4, {}, {0.9, 0.2}), std::invalid_argument);
}

TEST_CASE("tabular policy softmax") {
  TabularPolicy policy(3);
  policy.set_logit(2, GroupLabel::Extended, 1.25);
  for (int d = 1; d <= 3; ++d) {
    CHECK(policy.prob(d, GroupLabel::Standard) + policy.prob(d, GroupLabel::Extended) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(policy.prob_extended(1) == doctest::Approx(0.5));
  CHECK(policy.prob_extended(2) == doctest::Approx(1.0 / (1.0 + std::exp(-1.25))));
  CHECK(policy.log_prob(2, GroupLabel::Extended) ==
        doctest::Approx(std::log(policy.prob_extended(2))).epsilon(1e-12));
}

TEST_CASE("sample_batch saturates under a large logit gap") {
  const TaskModel task = default_task();
  TabularPolicy policy(5);
  for (int d = 1; d <= 5; ++d) {
    policy.set_logit(d, GroupLabel::Standard, 50.0);
  }
  const Batch batch = sample_batch(policy, policy, task, 64, 8, 99);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (std::size_t j = 0; j < batch.responses_per_prompt(); ++j) {
      CHECK(batch.response(i, j).group == GroupLabel::Standard);
      CHECK(batch.response(i, j).trials == 1);
    }
  }
}

TEST_CASE("sampling from the reference policy gives zero KL") {
  const TaskModel task = default_task();
  const TabularPolicy policy(5);
  const Batch batch = sample_batch(policy, policy, task, 16, 8, 7);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (std::size_t j = 0; j < batch.responses_per_prompt(); ++j) {
      CHECK(batch.response(i, j).log_prob == batch.response(i, j).ref_log_prob);
    }
  }
}

TEST_CASE("sampled group frequencies match the softmax") {
  const TaskModel task = derive_task({0.7}, 4);
  TabularPolicy policy(1);
  policy.set_logit(1, GroupLabel::Extended, 0.5);
  const double p = policy.prob_extended(1);
  const std::size_t total = 100000;
  const Batch batch = sample_batch(policy, policy, task, 125, 800, 2024);
  std::size_t extended = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (std::size_t j = 0; j < batch.responses_per_prompt(); ++j) {
      extended += batch.response(i, j).group == GroupLabel::Extended ? 1 : 0;
    }
  }
  const double se = std::sqrt(p * (1.0 - p) / total);
  CHECK(std::abs(double(extended) / total - p) <= 3.0 * se);
}

TEST_CASE("extended responses follow the derived law") {
  // All-extended policy at one difficulty: empirical accuracy and mean trials
  // must match the enumeration-derived columns.
  const TaskModel task = derive_task({0.5}, 4);
  TabularPolicy policy(1);
  policy.set_logit(1, GroupLabel::Extended, 50.0);
  const std::size_t total = 60000;
  const Batch batch = sample_batch(policy, policy, task, 100, 600, 555);
  double correct = 0.0, trials = 0.0, trials_sq = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (std::size_t j = 0; j < batch.responses_per_prompt(); ++j) {
      const ResponseRecord& r = batch.response(i, j);
      REQUIRE(r.group == GroupLabel::Extended);
      CHECK(r.trials >= task.sv.consensus_count);
      CHECK(r.trials <= task.sv.max_trials);
      correct += r.correct;
      trials += r.trials;
      trials_sq += double(r.trials) * r.trials;
    }
  }
  const double acc = correct / total;
  const double acc_se = std::sqrt(task.extended_accuracy[0] * (1 - task.extended_accuracy[0]) / total);
  CHECK(std::abs(acc - task.extended_accuracy[0]) <= 3.0 * acc_se);
  const double mean_trials = trials / total;
  const double var = trials_sq / total - mean_trials * mean_trials;
  CHECK(std::abs(mean_trials - task.extended_expected_trials[0]) <= 3.0 * std::sqrt(var / total));
}

TEST_CASE("weighted update leaves the policy unchanged on an empty selection") {
  const TaskModel task = default_task();
  const TabularPolicy policy(5);
  const Batch batch = sample_batch(policy, policy, task, 4, 4, 1);
  const SelectionMatrix none = SelectionMatrix::none(4, 4);
  const TabularPolicy updated = weighted_sft_update(policy, batch, none, 0.1);
  CHECK(updated == policy);
}

TEST_CASE("one selected extended response raises its difficulty only") {
  const TaskModel task = default_task();
  TabularPolicy policy(5);
  Batch batch = sample_batch(policy, policy, task, 6, 4, 12);
  // Find a prompt and an extended response to select.
  std::int32_t col = -1;
  std::size_t row = 0;
  for (std::size_t i = 0; i < batch.size() && col < 0; ++i) {
    for (std::size_t j = 0; j < batch.responses_per_prompt(); ++j) {
      if (batch.response(i, j).group == GroupLabel::Extended) {
        row = i;
        col = static_cast<std::int32_t>(j);
        break;
      }
    }
  }
  REQUIRE(col >= 0);
  const int d = batch.prompt(row).difficulty;
  BinaryMatrix mask(batch.size(), batch.responses_per_prompt(), 1);
  std::vector<std::int32_t> choices(batch.size(), -1);
  choices[row] = col;
  const SelectionMatrix selection =
      SelectionMatrix::from_choices(choices, batch.responses_per_prompt(), mask);
  const TabularPolicy updated = weighted_sft_update(policy, batch, selection, 0.1);
  CHECK(updated.prob_extended(d) > policy.prob_extended(d));
  for (int other = 1; other <= 5; ++other) {
    if (other == d) continue;
    CHECK(updated.logit(other, GroupLabel::Standard) == policy.logit(other, GroupLabel::Standard));
    CHECK(updated.logit(other, GroupLabel::Extended) == policy.logit(other, GroupLabel::Extended));
  }
}

TEST_CASE("update equals one finite-difference gradient step") {
  const TaskModel task = default_task();
  Rng rng(777);
  for (int iter = 0; iter < 10; ++iter) {
    RealMatrix logits(5, 2, 0.0);
    for (std::size_t r = 0; r < 5; ++r) {
      logits.at(r, 0) = (rng.uniform01() - 0.5) * 4.0;
      logits.at(r, 1) = (rng.uniform01() - 0.5) * 4.0;
    }
    const TabularPolicy policy = TabularPolicy::from_logits(logits);
    const Batch batch = sample_batch(policy, policy, task, 8, 4, rng.next_u64());
    BinaryMatrix mask(8, 4, 1);
    std::vector<std::int32_t> choices(8);
    for (auto& c : choices) {
      c = static_cast<std::int32_t>(rng.uniform_index(5)) - 1;  // -1..3
    }
    const SelectionMatrix selection = SelectionMatrix::from_choices(choices, 4, mask);

    const double alpha = 0.37;
    const TabularPolicy updated = weighted_sft_update(policy, batch, selection, alpha);
    const double eps = 1e-5;
    for (std::size_t r = 0; r < 5; ++r) {
      for (std::size_t c = 0; c < 2; ++c) {
        const double gradient = (updated.logits().at(r, c) - policy.logits().at(r, c)) / alpha;
        RealMatrix up = policy.logits(), down = policy.logits();
        up.at(r, c) += eps;
        down.at(r, c) -= eps;
        const double fd = (selected_log_likelihood(TabularPolicy::from_logits(up), batch, selection) -
                           selected_log_likelihood(TabularPolicy::from_logits(down), batch, selection)) /
                          (2.0 * eps);
        CHECK(std::abs(gradient - fd) / std::max(1.0, std::abs(fd)) < 1e-6);
      }
    }
  }
}

TEST_CASE("run_ibpo with zero steps returns an empty trace") {
  const TaskModel task = default_task();
  const TrainingTrace trace = run_ibpo(quick_config({1, 2}, 5, 0), task, TabularPolicy(5));
  CHECK(trace.steps.empty());
  CHECK(trace.num_difficulties == 5);
}

TEST_CASE("zero budget forbids extended selections and never raises extended mass") {
  const TaskModel task = default_task();
  const TrainingTrace trace = run_ibpo(quick_config({0, 1}, 21), task, TabularPolicy(5));
  REQUIRE(trace.steps.size() == 20);
  std::vector<double> previous(5, 0.5);
  for (const StepRecord& s : trace.steps) {
    CHECK(s.voting_ratio_selected == 0.0);
    CHECK(s.budget_lhs <= 0.0);
    CHECK_FALSE(s.budget_violated);
    for (int d = 0; d < 5; ++d) {
      CHECK(s.vr_per_difficulty[d] <= previous[d] + 1e-12);
      previous[d] = s.vr_per_difficulty[d];
    }
  }
}

TEST_CASE("budget holds at every step for q = 1/2") {
  const TaskModel task = default_task();
  const TrainingTrace trace = run_ibpo(quick_config({1, 2}, 31), task, TabularPolicy(5));
  for (const StepRecord& s : trace.steps) {
    CHECK_FALSE(s.budget_violated);
    CHECK(s.voting_ratio_selected <= 0.5 + 1e-12);
    CHECK(s.program_rows == 8);
    CHECK(s.program_cols == 6);
  }
}

TEST_CASE("identical configs give identical traces") {
  const TaskModel task = default_task();
  const RunConfig config = quick_config({1, 2}, 77, 10);
  const TrainingTrace a = run_ibpo(config, task, TabularPolicy(5));
  const TrainingTrace b = run_ibpo(config, task, TabularPolicy(5));
  REQUIRE(a.steps.size() == b.steps.size());
  for (std::size_t t = 0; t < a.steps.size(); ++t) {
    CHECK(a.steps[t].pass_at_1 == b.steps[t].pass_at_1);
    CHECK(a.steps[t].objective == b.steps[t].objective);
    CHECK(a.steps[t].vr_per_difficulty == b.steps[t].vr_per_difficulty);
  }
}

TEST_CASE("accumulated run with k_b = k_r = 1 reproduces the plain loop exactly") {
  const TaskModel task = default_task();
  const RunConfig config = quick_config({1, 2}, 919, 12);
  const TrainingTrace plain = run_ibpo(config, task, TabularPolicy(5));
  const TrainingTrace accumulated = run_accumulated(config, task, TabularPolicy(5));
  REQUIRE(plain.steps.size() == accumulated.steps.size());
  for (std::size_t t = 0; t < plain.steps.size(); ++t) {
    const StepRecord& a = plain.steps[t];
    const StepRecord& b = accumulated.steps[t];
    CHECK(a.voting_ratio_selected == b.voting_ratio_selected);
    CHECK(a.voting_ratio_all == b.voting_ratio_all);
    CHECK(a.pass_at_1 == b.pass_at_1);
    CHECK(a.budget_lhs == b.budget_lhs);
    CHECK(a.objective == b.objective);
    CHECK(a.vr_per_difficulty == b.vr_per_difficulty);
    CHECK(a.avg_trials == b.avg_trials);
  }
}

TEST_CASE("accumulation factors set the per-step program dimensions") {
  const TaskModel task = default_task();
  RunConfig config = quick_config({1, 2}, 5, 2);
  config.k_b = 4;
  config.k_r = 1;
  TrainingTrace trace = run_accumulated(config, task, TabularPolicy(5));
  CHECK(trace.steps[0].program_rows == 4 * 8);
  CHECK(trace.steps[0].program_cols == 6);

  config.k_b = 2;
  config.k_r = 2;
  trace = run_accumulated(config, task, TabularPolicy(5));
  CHECK(trace.steps[0].program_rows == 2 * 8);
  CHECK(trace.steps[0].program_cols == 2 * 6);
}

TEST_CASE("cgpo baseline runs and can overspend the budget") {
  const TaskModel task = default_task();
  RunConfig config = quick_config({0, 1}, 6, 12);
  config.cgpo_baseline = true;
  const TrainingTrace trace = run_ibpo(config, task, TabularPolicy(5));
  // With q = 0 any extended selection violates; best-of-n ignores the budget,
  // so at least one step should overspend at a 50/50 initial policy.
  bool violated = false;
  for (const StepRecord& s : trace.steps) {
    violated = violated || s.budget_violated;
  }
  CHECK(violated);
}

TEST_CASE("evaluate reports the analytic mixture for pure policies") {
  const TaskModel task = default_task();

  TabularPolicy all_standard(5);
  for (int d = 1; d <= 5; ++d) {
    all_standard.set_logit(d, GroupLabel::Standard, 50.0);
  }
  const EvalReport standard_report = evaluate(all_standard, task, 20000, 17);
  CHECK(standard_report.avg_trials == 1.0);
  CHECK(standard_report.voting_ratio == 0.0);
  double expected = 0.0;
  for (int d = 0; d < 5; ++d) {
    expected += task.difficulty_weights[d] * task.standard_accuracy[d];
  }
  const double se = std::sqrt(expected * (1 - expected) / 20000);
  CHECK(std::abs(standard_report.pass_at_1 - expected) <= 3.0 * se);

  // All-extended on a task that always answers correctly: consensus at trial 3.
  const TaskModel sure = derive_task({1.0, 1.0}, 4);
  TabularPolicy all_extended(2);
  for (int d = 1; d <= 2; ++d) {
    all_extended.set_logit(d, GroupLabel::Extended, 50.0);
  }
  const EvalReport extended_report = evaluate(all_extended, sure, 500, 18);
  CHECK(extended_report.avg_trials == 3.0);
  CHECK(extended_report.pass_at_1 == 1.0);
  CHECK(extended_report.voting_ratio == 1.0);

  // 50/50 policy.
  const EvalReport half = evaluate(TabularPolicy(5), task, 20000, 19);
  CHECK(std::abs(half.voting_ratio - 0.5) <= 3.0 * std::sqrt(0.25 / 20000));
}

TEST_CASE("trace csv has the exact column layout") {
  const TaskModel task = default_task();
  const TrainingTrace trace = run_ibpo(quick_config({1, 2}, 3, 2), task, TabularPolicy(5));
  std::ostringstream out;
  write_trace_csv(trace, out);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  CHECK(header ==
        "step,voting_ratio_selected,voting_ratio_all,pass_at_1,budget_lhs,objective,"
        "vr_d1,vr_d2,vr_d3,vr_d4,vr_d5,avg_trials");
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    rows += line.empty() ? 0 : 1;
  }
  CHECK(rows == 2);
}
