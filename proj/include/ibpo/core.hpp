#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ibpo/rational.hpp"

namespace ibpo {

// Response groups. Standard is the single-trial group, Extended the
// multi-trial (voting) group with the higher inference cost.
enum class GroupLabel : std::uint8_t { Standard, Extended };

const char* to_string(GroupLabel g);

// Dense row-major matrix, just enough for this project.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  T& at(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const T& at(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  std::span<const T> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  const std::vector<T>& data() const { return data_; }
  bool operator==(const Grid&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using RealMatrix = Grid<double>;
using BinaryMatrix = Grid<std::uint8_t>;

// One sampled response. Log-probabilities are natural-log; trials counts the
// solution attempts inside the response (always 1 for Standard).
struct ResponseRecord {
  GroupLabel group = GroupLabel::Standard;
  bool correct = false;
  double log_prob = 0.0;
  double ref_log_prob = 0.0;
  int trials = 1;
  std::string answer;
};

struct PromptRecord {
  int id = 0;
  int difficulty = 1;  // levels start at 1
};

// n prompts with m responses each, immutable once built.
class Batch {
 public:
  std::size_t size() const { return prompts_.size(); }                  // n
  std::size_t responses_per_prompt() const { return m_; }               // m
  const PromptRecord& prompt(std::size_t i) const { return prompts_[i]; }
  const ResponseRecord& response(std::size_t i, std::size_t j) const {
    return responses_[i * m_ + j];
  }
  std::span<const ResponseRecord> row(std::size_t i) const {
    return {responses_.data() + i * m_, m_};
  }

  friend Batch build_batch(std::vector<PromptRecord> prompts,
                           std::vector<ResponseRecord> responses,
                           std::size_t responses_per_prompt);

 private:
  Batch() = default;
  std::vector<PromptRecord> prompts_;
  std::vector<ResponseRecord> responses_;  // row-major n*m
  std::size_t m_ = 0;
};

// Validates and assembles a batch. Throws std::invalid_argument naming the
// offending row/entry on dimension mismatches, trials = 0, Standard responses
// with trials > 1, or difficulty < 1.
Batch build_batch(std::vector<PromptRecord> prompts,
                  const std::vector<std::vector<ResponseRecord>>& rows);
Batch build_batch(std::vector<PromptRecord> prompts, std::vector<ResponseRecord> responses,
                  std::size_t responses_per_prompt);

// Binary acceptance matrix with at most one accepted response per row,
// guaranteed structurally (stored as one choice per row, -1 = none).
class SelectionMatrix {
 public:
  static SelectionMatrix none(std::size_t rows, std::size_t cols);

  // choice_per_row[i] in [-1, cols); every non-none choice must be allowed by
  // the mask. Throws std::invalid_argument otherwise.
  static SelectionMatrix from_choices(std::vector<std::int32_t> choice_per_row, std::size_t cols,
                                      const BinaryMatrix& mask);

  // Validates row sums <= 1 and containment in the mask.
  static SelectionMatrix from_entries(const BinaryMatrix& entries, const BinaryMatrix& mask);

  // Row-sum validation only, for deserialization paths without a mask at hand.
  static SelectionMatrix from_entries_unmasked(const BinaryMatrix& entries);

  std::size_t rows() const { return choice_.size(); }
  std::size_t cols() const { return m_; }
  bool selected(std::size_t i, std::size_t j) const {
    return choice_[i] == static_cast<std::int32_t>(j);
  }
  // -1 when the row has no accepted response.
  std::int32_t choice(std::size_t i) const { return choice_[i]; }
  std::size_t selected_count() const;
  BinaryMatrix entries() const;

  bool operator==(const SelectionMatrix&) const = default;

 private:
  SelectionMatrix(std::vector<std::int32_t> choice, std::size_t cols)
      : choice_(std::move(choice)), m_(cols) {}
  std::vector<std::int32_t> choice_;
  std::size_t m_ = 0;
};

// q_plus caps the Extended share of accepted responses; kept rational so the
// budget row scales to exact integer arithmetic.
struct BudgetConfig {
  Rational q_plus{1, 2};
  double kl_max = 1024.0;
};

// Validates 0 <= q_plus <= 1 and kl_max >= 0.
BudgetConfig make_budget(Rational q_plus, double kl_max = 1024.0);

}  // namespace ibpo
