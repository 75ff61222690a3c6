#include "ibpo/experiment.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ibpo/rng.hpp"

namespace ibpo {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<double> parse_double_list(const std::string& value, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) {
      throw std::invalid_argument("config: empty element in list for '" + key + "'");
    }
    out.push_back(std::stod(item));
  }
  if (out.empty()) {
    throw std::invalid_argument("config: empty list for '" + key + "'");
  }
  return out;
}

int parse_int(const std::string& value, const std::string& key) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(value, &used);
    if (used != value.size()) {
      throw std::invalid_argument(value);
    }
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: '" + key + "' expects an integer, got '" + value + "'");
  }
}

bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw std::invalid_argument("config: '" + key + "' expects true/false, got '" + value + "'");
}

MarginMode parse_margin_mode(const std::string& value) {
  if (value == "paper") return MarginMode::Conditional;
  if (value == "appendix_snippet") return MarginMode::Unconditional;
  throw std::invalid_argument("config: margin_mode must be paper|appendix_snippet, got '" + value +
                              "'");
}

BudgetMode parse_budget_mode(const std::string& value) {
  if (value == "relative") return BudgetMode::Relative;
  if (value == "absolute") return BudgetMode::Absolute;
  throw std::invalid_argument("config: budget_mode must be relative|absolute, got '" + value +
                              "'");
}

TiePolicy parse_tie_policy(const std::string& value, std::uint64_t default_seed) {
  if (value == "lexicographic" || value == "default") {
    return TiePolicy::lexicographic();
  }
  if (value == "seeded") {
    return TiePolicy::seeded_random(default_seed);
  }
  if (value.rfind("seeded:", 0) == 0) {
    return TiePolicy::seeded_random(std::stoull(value.substr(7)));
  }
  throw std::invalid_argument("config: tie_policy must be lexicographic|seeded[:<seed>], got '" +
                              value + "'");
}

}  // namespace

ExperimentConfig parse_experiment_config(std::istream& in) {
  ExperimentConfig config;
  int declared_difficulties = -1;
  bool tie_policy_seen = false;
  std::string tie_policy_value;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": empty key or value");
    }

    if (key == "run.q_plus") {
      config.run.budget.q_plus = parse_rational(value);
    } else if (key == "run.kl_max") {
      config.run.budget.kl_max = std::stod(value);
    } else if (key == "run.n") {
      config.run.n = parse_int(value, key);
    } else if (key == "run.m") {
      config.run.m = parse_int(value, key);
    } else if (key == "run.alpha") {
      config.run.alpha = std::stod(value);
    } else if (key == "run.T") {
      config.run.steps = parse_int(value, key);
    } else if (key == "run.k_b") {
      config.run.k_b = parse_int(value, key);
    } else if (key == "run.k_r") {
      config.run.k_r = parse_int(value, key);
    } else if (key == "run.seed") {
      config.run.seed = std::stoull(value);
    } else if (key == "run.margin_mode") {
      config.run.margin_mode = parse_margin_mode(value);
    } else if (key == "run.budget_mode") {
      config.run.budget_mode = parse_budget_mode(value);
    } else if (key == "run.tie_policy") {
      tie_policy_seen = true;
      tie_policy_value = value;
    } else if (key == "run.cgpo_baseline") {
      config.run.cgpo_baseline = parse_bool(value, key);
    } else if (key == "task.num_difficulties") {
      declared_difficulties = parse_int(value, key);
    } else if (key == "task.standard_accuracy") {
      config.standard_accuracy = parse_double_list(value, key);
    } else if (key == "task.difficulty_weights") {
      config.task_difficulty_weights = parse_double_list(value, key);
    } else if (key == "task.alphabet_size") {
      config.alphabet_size = parse_int(value, key);
    } else if (key == "task.sv_max_trials") {
      config.sv.max_trials = parse_int(value, key);
    } else if (key == "task.sv_consensus_count") {
      config.sv.consensus_count = parse_int(value, key);
    } else if (key == "eval.size") {
      config.run.eval.size = static_cast<std::size_t>(parse_int(value, key));
    } else if (key == "eval.difficulty_weights") {
      config.run.eval.difficulty_weights = parse_double_list(value, key);
    } else if (key == "output.dir") {
      config.output_dir = value;
    } else {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": unknown key '" +
                                  key + "'");
    }
  }

  // tie_policy may reference the run seed, so resolve it after everything.
  if (tie_policy_seen) {
    config.run.tie_policy = parse_tie_policy(tie_policy_value, config.run.seed);
  }
  if (declared_difficulties >= 0 &&
      declared_difficulties != static_cast<int>(config.standard_accuracy.size())) {
    throw std::invalid_argument("config: task.num_difficulties disagrees with the accuracy list");
  }
  return config;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("config: cannot open '" + path + "'");
  }
  return parse_experiment_config(in);
}

TaskModel task_from_config(const ExperimentConfig& config) {
  return derive_task(config.standard_accuracy, config.alphabet_size, config.sv,
                     config.task_difficulty_weights);
}

namespace {

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write '" + path.string() + "'");
  }
  out << content;
}

std::string format_double(double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

}  // namespace

SimulationResult run_simulation(const ExperimentConfig& config, const std::string& out_dir) {
  const TaskModel task = task_from_config(config);
  const TabularPolicy ref(task.num_difficulties);
  const TrainingTrace trace = run_accumulated(config.run, task, ref);

  SimulationResult result;
  result.trace = trace;
  for (const StepRecord& s : trace.steps) {
    result.constraint_violations += s.budget_violated ? 1 : 0;
  }
  if (!trace.steps.empty()) {
    const StepRecord& last = trace.steps.back();
    result.final_pass_at_1 = last.pass_at_1;
    result.final_avg_trials = last.avg_trials;
    result.final_vr_per_difficulty = last.vr_per_difficulty;
    result.final_voting_ratio_selected = last.voting_ratio_selected;
    result.final_voting_ratio_all = last.voting_ratio_all;
  } else {
    // No steps taken: report the initial (= reference) policy.
    const TaskModel eval_task = config.run.eval.difficulty_weights.empty()
                                    ? task
                                    : with_difficulty_weights(task, config.run.eval.difficulty_weights);
    const EvalReport eval = evaluate(ref, eval_task, config.run.eval.size,
                                     mix_seed(config.run.seed, 2, 0));
    result.final_pass_at_1 = eval.pass_at_1;
    result.final_avg_trials = eval.avg_trials;
    result.final_voting_ratio_all = eval.voting_ratio;
    result.final_vr_per_difficulty.resize(task.num_difficulties);
    for (int d = 1; d <= task.num_difficulties; ++d) {
      result.final_vr_per_difficulty[d - 1] = ref.prob_extended(d);
    }
  }

  const std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);
  {
    std::ofstream csv(dir / "trace.csv");
    if (!csv) {
      throw std::runtime_error("cannot write '" + (dir / "trace.csv").string() + "'");
    }
    write_trace_csv(trace, csv);
  }
  nlohmann::json summary{{"steps", trace.steps.size()},
                         {"final_pass_at_1", result.final_pass_at_1},
                         {"final_avg_trials", result.final_avg_trials},
                         {"final_vr_per_difficulty", result.final_vr_per_difficulty},
                         {"final_voting_ratio_selected", result.final_voting_ratio_selected},
                         {"final_voting_ratio_all", result.final_voting_ratio_all},
                         {"constraint_violations", result.constraint_violations}};
  write_text_file(dir / "summary.json", summary.dump(2) + "\n");
  return result;
}

void run_sweep(const ExperimentConfig& config, const std::vector<Rational>& q_plus_values,
               const std::string& out_dir) {
  if (q_plus_values.empty()) {
    throw std::invalid_argument("sweep: needs at least one q_plus value");
  }
  const std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);
  std::string combined = "q_plus,final_pass_at_1,final_avg_trials\n";
  for (std::size_t i = 0; i < q_plus_values.size(); ++i) {
    ExperimentConfig point = config;
    point.run.budget.q_plus = q_plus_values[i];
    point.run.seed = config.run.seed + i;
    const std::string name =
        "q_" + std::to_string(q_plus_values[i].num) + "_" + std::to_string(q_plus_values[i].den);
    const SimulationResult result = run_simulation(point, (dir / name).string());
    combined += format_double(to_double(q_plus_values[i])) + "," +
                format_double(result.final_pass_at_1) + "," +
                format_double(result.final_avg_trials) + "\n";
  }
  write_text_file(dir / "sweep.csv", combined);
}

}  // namespace ibpo
