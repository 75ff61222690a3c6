#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ibpo/simenv.hpp"

namespace ibpo {

// Everything a simulate/sweep run needs, parsed from a flat key-value file
// with dotted keys (run.*, task.*, eval.*, output.dir). See README for the
// key list; unknown keys are rejected.
struct ExperimentConfig {
  RunConfig run;
  std::vector<double> standard_accuracy{0.95, 0.88, 0.80, 0.72, 0.62};
  std::vector<double> task_difficulty_weights;  // empty = uniform
  int alphabet_size = 4;
  SvConfig sv;
  std::string output_dir = ".";
};

ExperimentConfig parse_experiment_config(std::istream& in);
ExperimentConfig load_experiment_config(const std::string& path);

TaskModel task_from_config(const ExperimentConfig& config);

struct SimulationResult {
  TrainingTrace trace;
  double final_pass_at_1 = 0.0;
  double final_avg_trials = 0.0;
  std::vector<double> final_vr_per_difficulty;
  double final_voting_ratio_selected = 0.0;
  double final_voting_ratio_all = 0.0;
  std::size_t constraint_violations = 0;
};

// Runs the accumulated trainer and writes trace.csv plus summary.json into
// out_dir (created if missing).
SimulationResult run_simulation(const ExperimentConfig& config, const std::string& out_dir);

// One simulation per q_plus value with deterministically offset seeds, each in
// its own subdirectory, plus a combined sweep.csv of
// (q_plus, final_pass_at_1, final_avg_trials).
void run_sweep(const ExperimentConfig& config, const std::vector<Rational>& q_plus_values,
               const std::string& out_dir);

}  // namespace ibpo
