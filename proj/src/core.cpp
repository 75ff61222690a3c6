#include "ibpo/core.hpp"

#include <stdexcept>
#include <string>

namespace ibpo {

const char* to_string(GroupLabel g) {
  return g == GroupLabel::Standard ? "standard" : "extended";
}

namespace {

void validate_response(const ResponseRecord& r, std::size_t i, std::size_t j) {
  const std::string where = "response (" + std::to_string(i) + "," + std::to_string(j) + ")";
  if (r.trials < 1) {
    throw std::invalid_argument(where + ": trials must be >= 1, got " + std::to_string(r.trials));
  }
  if (r.group == GroupLabel::Standard && r.trials != 1) {
    throw std::invalid_argument(where + ": standard responses carry exactly one trial, got " +
                                std::to_string(r.trials));
  }
}

void validate_prompt(const PromptRecord& p, std::size_t i) {
  if (p.difficulty < 1) {
    throw std::invalid_argument("prompt " + std::to_string(i) + ": difficulty must be >= 1, got " +
                                std::to_string(p.difficulty));
  }
}

}  // namespace

Batch build_batch(std::vector<PromptRecord> prompts,
                  const std::vector<std::vector<ResponseRecord>>& rows) {
  if (rows.size() != prompts.size()) {
    throw std::invalid_argument("batch: " + std::to_string(prompts.size()) + " prompts but " +
                                std::to_string(rows.size()) + " response rows");
  }
  if (rows.empty()) {
    throw std::invalid_argument("batch: needs at least one prompt");
  }
  const std::size_t m = rows.front().size();
  std::vector<ResponseRecord> flat;
  flat.reserve(prompts.size() * m);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m) {
      throw std::invalid_argument("batch row " + std::to_string(i) + " has " +
                                  std::to_string(rows[i].size()) + " responses, expected " +
                                  std::to_string(m));
    }
    flat.insert(flat.end(), rows[i].begin(), rows[i].end());
  }
  return build_batch(std::move(prompts), std::move(flat), m);
}

Batch build_batch(std::vector<PromptRecord> prompts, std::vector<ResponseRecord> responses,
                  std::size_t responses_per_prompt) {
  if (prompts.empty()) {
    throw std::invalid_argument("batch: needs at least one prompt");
  }
  if (responses_per_prompt < 1) {
    throw std::invalid_argument("batch: needs at least one response per prompt");
  }
  if (responses.size() != prompts.size() * responses_per_prompt) {
    throw std::invalid_argument("batch: expected " +
                                std::to_string(prompts.size() * responses_per_prompt) +
                                " responses, got " + std::to_string(responses.size()));
  }
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    validate_prompt(prompts[i], i);
    for (std::size_t j = 0; j < responses_per_prompt; ++j) {
      validate_response(responses[i * responses_per_prompt + j], i, j);
    }
  }
  Batch batch;
  batch.prompts_ = std::move(prompts);
  batch.responses_ = std::move(responses);
  batch.m_ = responses_per_prompt;
  return batch;
}

SelectionMatrix SelectionMatrix::none(std::size_t rows, std::size_t cols) {
  return SelectionMatrix(std::vector<std::int32_t>(rows, -1), cols);
}

SelectionMatrix SelectionMatrix::from_choices(std::vector<std::int32_t> choice_per_row,
                                              std::size_t cols, const BinaryMatrix& mask) {
  if (mask.rows() != choice_per_row.size() || mask.cols() != cols) {
    throw std::invalid_argument("selection: mask shape mismatch");
  }
  for (std::size_t i = 0; i < choice_per_row.size(); ++i) {
    const std::int32_t c = choice_per_row[i];
    if (c < -1 || c >= static_cast<std::int32_t>(cols)) {
      throw std::invalid_argument("selection row " + std::to_string(i) + ": choice " +
                                  std::to_string(c) + " out of range");
    }
    if (c >= 0 && mask.at(i, static_cast<std::size_t>(c)) == 0) {
      throw std::invalid_argument("selection row " + std::to_string(i) +
                                  ": accepted response outside the feasibility mask");
    }
  }
  return SelectionMatrix(std::move(choice_per_row), cols);
}

namespace {

std::vector<std::int32_t> choices_from_entries(const BinaryMatrix& entries) {
  std::vector<std::int32_t> choice(entries.rows(), -1);
  for (std::size_t i = 0; i < entries.rows(); ++i) {
    for (std::size_t j = 0; j < entries.cols(); ++j) {
      if (entries.at(i, j) == 0) {
        continue;
      }
      if (choice[i] != -1) {
        throw std::invalid_argument("selection row " + std::to_string(i) +
                                    ": more than one accepted response");
      }
      choice[i] = static_cast<std::int32_t>(j);
    }
  }
  return choice;
}

}  // namespace

SelectionMatrix SelectionMatrix::from_entries(const BinaryMatrix& entries,
                                              const BinaryMatrix& mask) {
  return from_choices(choices_from_entries(entries), entries.cols(), mask);
}

SelectionMatrix SelectionMatrix::from_entries_unmasked(const BinaryMatrix& entries) {
  return SelectionMatrix(choices_from_entries(entries), entries.cols());
}

std::size_t SelectionMatrix::selected_count() const {
  std::size_t count = 0;
  for (const std::int32_t c : choice_) {
    count += (c >= 0);
  }
  return count;
}

BinaryMatrix SelectionMatrix::entries() const {
  BinaryMatrix out(rows(), cols(), 0);
  for (std::size_t i = 0; i < rows(); ++i) {
    if (choice_[i] >= 0) {
      out.at(i, static_cast<std::size_t>(choice_[i])) = 1;
    }
  }
  return out;
}

BudgetConfig make_budget(Rational q_plus, double kl_max) {
  q_plus = make_rational(q_plus.num, q_plus.den);
  if (q_plus.num < 0 || compare(q_plus, {1, 1}) > 0) {
    throw std::invalid_argument("budget: q_plus must lie in [0, 1], got " + to_string(q_plus));
  }
  if (!(kl_max >= 0.0)) {
    throw std::invalid_argument("budget: kl_max must be nonnegative");
  }
  return BudgetConfig{q_plus, kl_max};
}

}  // namespace ibpo
