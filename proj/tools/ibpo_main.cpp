// Command-line front end: solve/oracle for standalone programs, simulate/sweep
// for training runs. Exit codes: 0 ok, 1 solver disagreement, 2 input error.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "ibpo/experiment.hpp"
#include "ibpo/ilp.hpp"
#include "ibpo/serialization.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitMismatch = 1;
constexpr int kExitInputError = 2;

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open '" + path + "'");
  }
  return nlohmann::json::parse(in);
}

struct SolveOptions {
  std::string input_path;
  bool program_input = false;
  std::string q_plus = "1/2";
  double kl_max = 1024.0;
  std::string margin_mode = "paper";
  std::string budget_mode = "relative";
  bool cgpo_baseline = false;
  std::uint64_t seed = 0;
  std::string out_path;
};

ibpo::MarginMode margin_mode_from(const std::string& s) {
  if (s == "paper") return ibpo::MarginMode::Conditional;
  if (s == "appendix_snippet") return ibpo::MarginMode::Unconditional;
  throw std::invalid_argument("--margin-mode must be paper|appendix_snippet");
}

ibpo::BudgetMode budget_mode_from(const std::string& s) {
  if (s == "relative") return ibpo::BudgetMode::Relative;
  if (s == "absolute") return ibpo::BudgetMode::Absolute;
  throw std::invalid_argument("--budget-mode must be relative|absolute");
}

int cmd_solve(const SolveOptions& opt) {
  ibpo::IubSolution solution{ibpo::SelectionMatrix::none(0, 0), 0.0, {0, 1}, true};
  const nlohmann::json input = load_json(opt.input_path);
  if (opt.program_input) {
    if (opt.cgpo_baseline) {
      throw std::invalid_argument("--cgpo-baseline needs a batch input (group labels)");
    }
    solution = ibpo::solve_exact(ibpo::program_from_json(input));
  } else {
    const ibpo::Batch batch = ibpo::batch_from_json(input);
    const ibpo::BudgetConfig budget =
        ibpo::make_budget(ibpo::parse_rational(opt.q_plus), opt.kl_max);
    const ibpo::FeasibilityMask mask = ibpo::feasible_mask(batch, budget.kl_max);
    const ibpo::MarginMatrix margins =
        ibpo::margin_rewards(batch, margin_mode_from(opt.margin_mode));
    const ibpo::IubProgram program = ibpo::build_iub_program(
        batch, mask, margins, budget, ibpo::TiePolicy::lexicographic(),
        budget_mode_from(opt.budget_mode));
    if (opt.cgpo_baseline) {
      ibpo::SelectionMatrix selection =
          ibpo::solve_cgpo(batch, mask, ibpo::correctness_rewards(batch), opt.seed);
      double objective = 0.0;
      for (std::size_t i = 0; i < selection.rows(); ++i) {
        if (selection.choice(i) >= 0) {
          objective += margins.at(i, static_cast<std::size_t>(selection.choice(i)));
        }
      }
      const ibpo::Rational lhs = ibpo::budget_lhs_of(program, selection);
      solution = ibpo::IubSolution{std::move(selection), objective, lhs, true};
    } else {
      solution = ibpo::solve_exact(program);
    }
  }
  const std::string text = ibpo::solution_to_json(solution).dump(2) + "\n";
  if (opt.out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(opt.out_path);
    if (!out) {
      throw std::invalid_argument("cannot write '" + opt.out_path + "'");
    }
    out << text;
  }
  return kExitOk;
}

int cmd_oracle(const std::string& input_path) {
  const ibpo::IubProgram program = ibpo::program_from_json(load_json(input_path));

  const auto t0 = std::chrono::steady_clock::now();
  const ibpo::IubSolution exact = ibpo::solve_exact(program);
  const auto t1 = std::chrono::steady_clock::now();
  const ibpo::IubSolution oracle = ibpo::brute_force_oracle(program);
  const auto t2 = std::chrono::steady_clock::now();

  const double exact_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  const double oracle_ms = std::chrono::duration<double, std::milli>(t2 - t1).count();
  const bool objectives_agree =
      std::abs(exact.objective_value - oracle.objective_value) < 1e-12;
  const bool selections_agree = exact.selection == oracle.selection;

  std::cout << "solve_exact:  objective=" << exact.objective_value
            << " budget_lhs=" << ibpo::to_string(exact.budget_lhs) << " wall_ms=" << exact_ms
            << "\n";
  std::cout << "brute_force:  objective=" << oracle.objective_value
            << " budget_lhs=" << ibpo::to_string(oracle.budget_lhs) << " wall_ms=" << oracle_ms
            << "\n";
  std::cout << "agreement:    " << (objectives_agree && selections_agree ? "yes" : "no") << "\n";
  return objectives_agree && selections_agree ? kExitOk : kExitMismatch;
}

std::vector<ibpo::Rational> parse_q_list(const std::string& list) {
  std::vector<ibpo::Rational> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) {
      out.push_back(ibpo::parse_rational(item));
    }
  }
  if (out.empty()) {
    throw std::invalid_argument("--q-plus-list needs at least one rational");
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Budget-constrained response selection and its synthetic training loop"};
  app.require_subcommand(1);

  SolveOptions solve_opt;
  CLI::App* solve = app.add_subcommand("solve", "Solve one selection instance from JSON");
  solve->add_option("input", solve_opt.input_path, "Batch JSON (or program JSON with --program)")
      ->required();
  solve->add_flag("--program", solve_opt.program_input, "Input is a serialized program");
  solve->add_option("--q-plus", solve_opt.q_plus, "Extended-share budget as p/d (default 1/2)");
  solve->add_option("--kl-max", solve_opt.kl_max, "KL feasibility threshold (default 1024)");
  solve->add_option("--margin-mode", solve_opt.margin_mode, "paper|appendix_snippet");
  solve->add_option("--budget-mode", solve_opt.budget_mode, "relative|absolute");
  solve->add_flag("--cgpo-baseline", solve_opt.cgpo_baseline,
                  "Use the best-of-n selector instead of the budgeted program");
  solve->add_option("--seed", solve_opt.seed, "Tie-break seed for --cgpo-baseline");
  solve->add_option("--out", solve_opt.out_path, "Write the solution JSON here instead of stdout");

  std::string oracle_input;
  CLI::App* oracle = app.add_subcommand("oracle", "Differential-test one program JSON");
  oracle->add_option("input", oracle_input, "Program JSON")->required();

  std::string sim_config_path;
  std::string sim_out_override;
  std::uint64_t sim_seed_override = 0;
  bool sim_cgpo_override = false;
  std::string sim_q_override;
  CLI::App* simulate = app.add_subcommand("simulate", "Run one training simulation from a config");
  simulate->add_option("config", sim_config_path, "Key-value config file")->required();
  simulate->add_option("--out", sim_out_override, "Override output.dir");
  CLI::Option* sim_seed_opt = simulate->add_option("--seed", sim_seed_override, "Override run.seed");
  simulate->add_flag("--cgpo-baseline", sim_cgpo_override, "Force the best-of-n baseline solver");
  simulate->add_option("--q-plus", sim_q_override, "Override run.q_plus (p/d)");

  std::string sweep_config_path;
  std::string sweep_q_list;
  std::string sweep_out_override;
  CLI::App* sweep = app.add_subcommand("sweep", "Simulate across a list of q_plus budgets");
  sweep->add_option("config", sweep_config_path, "Key-value config file")->required();
  sweep->add_option("--q-plus-list", sweep_q_list, "Comma-separated rationals, e.g. 1/4,1/2,3/4")
      ->required();
  sweep->add_option("--out", sweep_out_override, "Override output.dir");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (solve->parsed()) {
      return cmd_solve(solve_opt);
    }
    if (oracle->parsed()) {
      return cmd_oracle(oracle_input);
    }
    if (simulate->parsed()) {
      ibpo::ExperimentConfig config = ibpo::load_experiment_config(sim_config_path);
      if (sim_seed_opt->count() > 0) {
        config.run.seed = sim_seed_override;
      }
      if (sim_cgpo_override) {
        config.run.cgpo_baseline = true;
      }
      if (!sim_q_override.empty()) {
        config.run.budget.q_plus = ibpo::parse_rational(sim_q_override);
      }
      const std::string out_dir =
          sim_out_override.empty() ? config.output_dir : sim_out_override;
      ibpo::run_simulation(config, out_dir);
      std::cout << "wrote " << out_dir << "/trace.csv and summary.json\n";
      return kExitOk;
    }
    if (sweep->parsed()) {
      ibpo::ExperimentConfig config = ibpo::load_experiment_config(sweep_config_path);
      const std::string out_dir =
          sweep_out_override.empty() ? config.output_dir : sweep_out_override;
      ibpo::run_sweep(config, parse_q_list(sweep_q_list), out_dir);
      std::cout << "wrote " << out_dir << "/sweep.csv\n";
      return kExitOk;
    }
  } catch (const ibpo::OracleSizeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitInputError;
}
