#include <doctest.h>

#include <algorithm>
#include <vector>

#include "ibpo/rewards.hpp"
#include "ibpo/rng.hpp"
#include "test_support.hpp"

using namespace ibpo;
using test_support::response;

namespace {

// Independent margin oracle: direct counting, no shared code with
// margin_rewards.
double margin_oracle(std::span<const ResponseRecord> row, std::size_t j) {
  int own_total = 0, own_correct = 0, other_total = 0, other_correct = 0;
  const GroupLabel own = row[j].group;
  for (const ResponseRecord& r : row) {
    if (r.group == own) {
      ++own_total;
      own_correct += r.correct;
    } else {
      ++other_total;
      other_correct += r.correct;
    }
  }
  const double own_mean = own_total ? double(own_correct) / own_total : 0.0;
  const double other_mean = other_total ? double(other_correct) / other_total : 0.0;
  return own_mean - other_mean;
}

}  // namespace

TEST_CASE("match_reward trims and compares exactly") {
  CHECK(match_reward("14/3", "14/3") == 1);
  CHECK(match_reward("x", "x") == 1);
  CHECK(match_reward("2", "3") == 0);
  CHECK(match_reward("  14/3\n", "14/3") == 1);
  CHECK(match_reward("14 / 3", "14/3") == 0);
  CHECK(match_reward("", "") == 1);
}

TEST_CASE("group mean rewards on the 2x4 instance") {
  const Batch batch = test_support::golden_batch();
  CHECK(group_mean_reward(batch.row(1), GroupLabel::Standard) == doctest::Approx(0.5));
  CHECK(group_mean_reward(batch.row(1), GroupLabel::Extended) == doctest::Approx(1.0));
  CHECK(group_mean_reward(batch.row(0), GroupLabel::Standard) == doctest::Approx(1.0));
  CHECK(group_mean_reward(batch.row(0), GroupLabel::Extended) == doctest::Approx(1.0));
}

TEST_CASE("group mean reward empty-group convention") {
  const std::vector<ResponseRecord> row{response(GroupLabel::Standard, true),
                                        response(GroupLabel::Standard, false)};
  CHECK(group_mean_reward(row, GroupLabel::Extended) == 0.0);
}

TEST_CASE("margins on the 2x4 instance are 0 and +-0.5 exactly") {
  const MarginMatrix margins = margin_rewards(test_support::golden_batch());
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(margins.at(0, j) == 0.0);
  }
  CHECK(margins.at(1, 0) == -0.5);
  CHECK(margins.at(1, 1) == -0.5);
  CHECK(margins.at(1, 2) == 0.5);
  CHECK(margins.at(1, 3) == 0.5);
}

TEST_CASE("margins match the direct-counting oracle on random rows") {
  Rng rng(7311);
  for (int iter = 0; iter < 300; ++iter) {
    const std::size_t m = 1 + rng.uniform_index(6);
    const Batch batch = test_support::random_batch(rng, 1 + rng.uniform_index(4), m);
    const MarginMatrix margins = margin_rewards(batch);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        CHECK(margins.at(i, j) == doctest::Approx(margin_oracle(batch.row(i), j)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("margin properties: antisymmetry, bounds, permutation invariance") {
  Rng rng(99);
  for (int iter = 0; iter < 100; ++iter) {
    const std::size_t n = 1 + rng.uniform_index(4);
    const std::size_t m = 2 + rng.uniform_index(6);
    const Batch batch = test_support::random_batch(rng, n, m);
    const MarginMatrix margins = margin_rewards(batch);

    for (std::size_t i = 0; i < n; ++i) {
      bool has_standard = false, has_extended = false;
      for (const ResponseRecord& r : batch.row(i)) {
        (r.group == GroupLabel::Standard ? has_standard : has_extended) = true;
      }
      double extended_value = 0.0, standard_value = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        CHECK(margins.at(i, j) >= -1.0);
        CHECK(margins.at(i, j) <= 1.0);
        // Same-group entries of a row are all equal.
        if (batch.response(i, j).group == GroupLabel::Extended) {
          extended_value = margins.at(i, j);
        } else {
          standard_value = margins.at(i, j);
        }
        for (std::size_t k = j + 1; k < m; ++k) {
          if (batch.response(i, j).group == batch.response(i, k).group) {
            CHECK(margins.at(i, j) == margins.at(i, k));
          }
        }
      }
      if (has_standard && has_extended) {
        CHECK(extended_value == doctest::Approx(-standard_value).epsilon(1e-15));
      }
    }

    // Permuting a row permutes its margins identically.
    std::vector<std::size_t> perm(m);
    for (std::size_t j = 0; j < m; ++j) perm[j] = j;
    for (std::size_t j = m; j > 1; --j) {
      std::swap(perm[j - 1], perm[rng.uniform_index(j)]);
    }
    std::vector<PromptRecord> prompts;
    std::vector<std::vector<ResponseRecord>> rows;
    for (std::size_t i = 0; i < n; ++i) {
      prompts.push_back(batch.prompt(i));
      std::vector<ResponseRecord> row;
      for (std::size_t j = 0; j < m; ++j) {
        row.push_back(batch.response(i, perm[j]));
      }
      rows.push_back(std::move(row));
    }
    const MarginMatrix permuted = margin_rewards(build_batch(std::move(prompts), rows));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        CHECK(permuted.at(i, j) == margins.at(i, perm[j]));
      }
    }
  }
}

TEST_CASE("unconditional margin mode divides by m") {
  // One row: standard (correct, wrong), extended (correct, correct).
  const Batch batch = build_batch(
      {{0, 1}}, {{response(GroupLabel::Standard, true), response(GroupLabel::Standard, false),
                  response(GroupLabel::Extended, true), response(GroupLabel::Extended, true)}});
  const MarginMatrix margins = margin_rewards(batch, MarginMode::Unconditional);
  // vote rate 2/4, single-trial rate 1/4.
  CHECK(margins.at(0, 0) == doctest::Approx(-0.25));
  CHECK(margins.at(0, 2) == doctest::Approx(0.25));

  // Conditional mode for contrast: 1.0 - 0.5.
  const MarginMatrix conditional = margin_rewards(batch, MarginMode::Conditional);
  CHECK(conditional.at(0, 2) == doctest::Approx(0.5));
}

TEST_CASE("unconditional margins stay antisymmetric even with one group absent") {
  const Batch batch = build_batch(
      {{0, 1}}, {{response(GroupLabel::Standard, true), response(GroupLabel::Standard, true)}});
  const MarginMatrix margins = margin_rewards(batch, MarginMode::Unconditional);
  CHECK(margins.at(0, 0) == doctest::Approx(1.0));  // 2/2 - 0/2
  const MarginMatrix conditional = margin_rewards(batch, MarginMode::Conditional);
  CHECK(conditional.at(0, 0) == doctest::Approx(1.0));  // empty-group convention
}

TEST_CASE("correctness rewards mirror the correct bits") {
  const Batch batch = test_support::golden_batch();
  const RealMatrix rewards = correctness_rewards(batch);
  CHECK(rewards.at(0, 0) == 1.0);
  CHECK(rewards.at(1, 1) == 0.0);
  CHECK(rewards.at(1, 2) == 1.0);
}
