#include "ibpo/rewards.hpp"

namespace ibpo {

namespace {

std::string_view trim(std::string_view s) {
  constexpr std::string_view kSpace = " \t\n\r\f\v";
  const auto first = s.find_first_not_of(kSpace);
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(kSpace);
  return s.substr(first, last - first + 1);
}

}  // namespace

int match_reward(std::string_view answer, std::string_view gold) {
  return trim(answer) == trim(gold) ? 1 : 0;
}

double group_mean_reward(std::span<const ResponseRecord> batch_row, GroupLabel group) {
  std::size_t total = 0;
  std::size_t correct = 0;
  for (const ResponseRecord& r : batch_row) {
    if (r.group != group) {
      continue;
    }
    ++total;
    correct += r.correct ? 1 : 0;
  }
  if (total == 0) {
    return 0.0;
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

MarginMatrix margin_rewards(const Batch& batch, MarginMode mode) {
  const std::size_t n = batch.size();
  const std::size_t m = batch.responses_per_prompt();
  MarginMatrix margins(n, m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double extended_mean = 0.0;
    double standard_mean = 0.0;
    if (mode == MarginMode::Conditional) {
      extended_mean = group_mean_reward(batch.row(i), GroupLabel::Extended);
      standard_mean = group_mean_reward(batch.row(i), GroupLabel::Standard);
    } else {
      std::size_t extended_correct = 0;
      std::size_t standard_correct = 0;
      for (const ResponseRecord& r : batch.row(i)) {
        if (!r.correct) {
          continue;
        }
        (r.group == GroupLabel::Extended ? extended_correct : standard_correct) += 1;
      }
      extended_mean = static_cast<double>(extended_correct) / static_cast<double>(m);
      standard_mean = static_cast<double>(standard_correct) / static_cast<double>(m);
    }
    for (std::size_t j = 0; j < m; ++j) {
      const bool is_extended = batch.response(i, j).group == GroupLabel::Extended;
      margins.at(i, j) =
          is_extended ? extended_mean - standard_mean : standard_mean - extended_mean;
    }
  }
  return margins;
}

RealMatrix correctness_rewards(const Batch& batch) {
  RealMatrix rewards(batch.size(), batch.responses_per_prompt(), 0.0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (std::size_t j = 0; j < batch.responses_per_prompt(); ++j) {
      rewards.at(i, j) = batch.response(i, j).correct ? 1.0 : 0.0;
    }
  }
  return rewards;
}

}  // namespace ibpo
