#pragma once

#include <span>
#include <string_view>

#include "ibpo/core.hpp"

namespace ibpo {

// How per-row group means are computed when forming margins.
//   Conditional:   mean correctness among the responses of that group
//                  (zero when the group is empty in the row).
//   Unconditional: group-correct count divided by all m responses.
// The CLI spells these "paper" and "appendix_snippet".
enum class MarginMode { Conditional, Unconditional };

// Per-response margin r_delta: own-group mean minus other-group mean.
using MarginMatrix = RealMatrix;

// 1 iff the answers are equal after trimming surrounding whitespace.
int match_reward(std::string_view answer, std::string_view gold);

// Fraction of correct responses within `group` for one batch row; 0 when the
// row has no response of that group.
double group_mean_reward(std::span<const ResponseRecord> batch_row, GroupLabel group);

MarginMatrix margin_rewards(const Batch& batch, MarginMode mode = MarginMode::Conditional);

// Correctness bits as doubles, the default reward argument for the CGPO
// best-of-n selector.
RealMatrix correctness_rewards(const Batch& batch);

}  // namespace ibpo
