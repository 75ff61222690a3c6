#include "ibpo/serialization.hpp"

#include <stdexcept>
#include <string>

namespace ibpo {

using nlohmann::json;

namespace {

const json& require(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) {
    throw std::invalid_argument(std::string("json: missing field '") + key + "'");
  }
  return *it;
}

GroupLabel group_from_string(const std::string& s) {
  if (s == "standard") return GroupLabel::Standard;
  if (s == "extended") return GroupLabel::Extended;
  throw std::invalid_argument("json: group must be 'standard' or 'extended', got '" + s + "'");
}

int binary_from_json(const json& j, const char* key) {
  const int v = require(j, key).get<int>();
  if (v != 0 && v != 1) {
    throw std::invalid_argument(std::string("json: '") + key + "' must be 0 or 1");
  }
  return v;
}

json rational_to_json(const Rational& r) { return json{{"num", r.num}, {"den", r.den}}; }

Rational rational_from_json(const json& j) {
  return make_rational(require(j, "num").get<std::int64_t>(),
                       require(j, "den").get<std::int64_t>());
}

template <typename T, typename Fetch>
Grid<T> grid_from_json(const json& rows, Fetch fetch, const char* what) {
  if (!rows.is_array() || rows.empty() || !rows.front().is_array()) {
    throw std::invalid_argument(std::string("json: ") + what + " must be a nested array");
  }
  const std::size_t m = rows.front().size();
  Grid<T> grid(rows.size(), m);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m) {
      throw std::invalid_argument(std::string("json: ragged ") + what + " at row " +
                                  std::to_string(i));
    }
    for (std::size_t j = 0; j < m; ++j) {
      grid.at(i, j) = fetch(rows[i][j]);
    }
  }
  return grid;
}

BinaryMatrix binary_grid_from_json(const json& rows, const char* what) {
  return grid_from_json<std::uint8_t>(
      rows,
      [what](const json& cell) -> std::uint8_t {
        const int v = cell.get<int>();
        if (v != 0 && v != 1) {
          throw std::invalid_argument(std::string("json: ") + what + " entries must be 0 or 1");
        }
        return static_cast<std::uint8_t>(v);
      },
      what);
}

template <typename T>
json grid_to_json(const Grid<T>& grid) {
  json rows = json::array();
  for (std::size_t i = 0; i < grid.rows(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < grid.cols(); ++j) {
      row.push_back(grid.at(i, j));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

json batch_to_json(const Batch& batch) {
  json prompts = json::array();
  for (std::size_t i = 0; i < batch.size(); ++i) {
    prompts.push_back({{"id", batch.prompt(i).id}, {"difficulty", batch.prompt(i).difficulty}});
  }
  json responses = json::array();
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (std::size_t j = 0; j < batch.responses_per_prompt(); ++j) {
      const ResponseRecord& r = batch.response(i, j);
      responses.push_back({{"group", to_string(r.group)},
                           {"correct", r.correct ? 1 : 0},
                           {"log_prob", r.log_prob},
                           {"ref_log_prob", r.ref_log_prob},
                           {"trials", r.trials},
                           {"answer", r.answer}});
    }
  }
  return json{{"prompts", std::move(prompts)}, {"responses", std::move(responses)}};
}

Batch batch_from_json(const json& j) {
  const json& prompts_json = require(j, "prompts");
  const json& responses_json = require(j, "responses");
  if (!prompts_json.is_array() || prompts_json.empty()) {
    throw std::invalid_argument("json: 'prompts' must be a nonempty array");
  }
  if (!responses_json.is_array() || responses_json.size() % prompts_json.size() != 0) {
    throw std::invalid_argument("json: 'responses' must hold n*m row-major records");
  }
  std::vector<PromptRecord> prompts;
  prompts.reserve(prompts_json.size());
  for (const json& p : prompts_json) {
    prompts.push_back({require(p, "id").get<int>(), require(p, "difficulty").get<int>()});
  }
  std::vector<ResponseRecord> responses;
  responses.reserve(responses_json.size());
  for (const json& r : responses_json) {
    ResponseRecord record;
    record.group = group_from_string(require(r, "group").get<std::string>());
    record.correct = binary_from_json(r, "correct") == 1;
    record.log_prob = require(r, "log_prob").get<double>();
    record.ref_log_prob = require(r, "ref_log_prob").get<double>();
    record.trials = require(r, "trials").get<int>();
    record.answer = require(r, "answer").get<std::string>();
    responses.push_back(std::move(record));
  }
  const std::size_t m = responses.size() / prompts.size();
  return build_batch(std::move(prompts), std::move(responses), m);
}

json program_to_json(const IubProgram& program) {
  json weights = json::array();
  for (std::size_t i = 0; i < program.n; ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < program.m; ++j) {
      row.push_back(rational_to_json(program.weight(i, j)));
    }
    weights.push_back(std::move(row));
  }
  json tie;
  if (program.tie_policy.kind == TiePolicy::Kind::SeededRandom) {
    tie = json{{"kind", "seeded_random"}, {"seed", program.tie_policy.seed}};
  } else {
    tie = json{{"kind", "lexicographic"}};
  }
  return json{{"n", program.n},
              {"m", program.m},
              {"objective", grid_to_json(program.objective)},
              {"mask", grid_to_json(program.mask)},
              {"budget_weight", std::move(weights)},
              {"budget_rhs", rational_to_json(program.budget_rhs)},
              {"tie_policy", std::move(tie)}};
}

IubProgram program_from_json(const json& j) {
  IubProgram program;
  program.n = require(j, "n").get<std::size_t>();
  program.m = require(j, "m").get<std::size_t>();
  program.objective = grid_from_json<double>(
      require(j, "objective"), [](const json& cell) { return cell.get<double>(); }, "objective");
  program.mask = binary_grid_from_json(require(j, "mask"), "mask");

  const json& weights = require(j, "budget_weight");
  if (!weights.is_array() || weights.size() != program.n) {
    throw std::invalid_argument("json: budget_weight must have n rows");
  }
  program.budget_weight.reserve(program.n * program.m);
  for (const json& row : weights) {
    if (!row.is_array() || row.size() != program.m) {
      throw std::invalid_argument("json: budget_weight rows must have m entries");
    }
    for (const json& cell : row) {
      program.budget_weight.push_back(rational_from_json(cell));
    }
  }
  program.budget_rhs = rational_from_json(require(j, "budget_rhs"));

  const json& tie = require(j, "tie_policy");
  const std::string kind = require(tie, "kind").get<std::string>();
  if (kind == "lexicographic") {
    program.tie_policy = TiePolicy::lexicographic();
  } else if (kind == "seeded_random") {
    program.tie_policy = TiePolicy::seeded_random(require(tie, "seed").get<std::uint64_t>());
  } else {
    throw std::invalid_argument("json: unknown tie_policy kind '" + kind + "'");
  }

  if (program.objective.rows() != program.n || program.objective.cols() != program.m ||
      program.mask.rows() != program.n || program.mask.cols() != program.m) {
    throw std::invalid_argument("json: program dimensions disagree with n/m");
  }
  return program;
}

json solution_to_json(const IubSolution& solution) {
  return json{{"selection", grid_to_json(solution.selection.entries())},
              {"objective", solution.objective_value},
              {"budget_lhs", rational_to_json(solution.budget_lhs)},
              {"optimal", solution.optimal}};
}

IubSolution solution_from_json(const json& j, const BinaryMatrix* mask) {
  const BinaryMatrix entries = binary_grid_from_json(require(j, "selection"), "selection");
  SelectionMatrix selection = mask != nullptr ? SelectionMatrix::from_entries(entries, *mask)
                                              : SelectionMatrix::from_entries_unmasked(entries);
  IubSolution solution{std::move(selection), require(j, "objective").get<double>(),
                       rational_from_json(require(j, "budget_lhs")),
                       require(j, "optimal").get<bool>()};
  return solution;
}

}  // namespace ibpo
