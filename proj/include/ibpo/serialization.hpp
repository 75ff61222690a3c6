#pragma once

#include <json.hpp>

#include "ibpo/core.hpp"
#include "ibpo/ilp.hpp"
#include "ibpo/selection.hpp"

namespace ibpo {

// Batch wire format: {"prompts": [{"id", "difficulty"}, ...],
// "responses": row-major array of {"group": "standard"|"extended",
// "correct": 0|1, "log_prob", "ref_log_prob", "trials", "answer"}}.
nlohmann::json batch_to_json(const Batch& batch);
Batch batch_from_json(const nlohmann::json& j);

// Program wire format: objective and mask as nested rows, budget weights and
// rhs as {"num", "den"} pairs, tie_policy {"kind": "lexicographic"} or
// {"kind": "seeded_random", "seed": ...}.
nlohmann::json program_to_json(const IubProgram& program);
IubProgram program_from_json(const nlohmann::json& j);

// Solution wire format: {"selection": nested 0/1 rows, "objective",
// "budget_lhs": {"num", "den"}, "optimal"}.
nlohmann::json solution_to_json(const IubSolution& solution);
// With a mask, selections are validated against it; without, only the
// one-per-row invariant is checked.
IubSolution solution_from_json(const nlohmann::json& j, const BinaryMatrix* mask = nullptr);

}  // namespace ibpo
