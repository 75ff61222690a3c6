#include <doctest.h>

#include <stdexcept>

#include "ibpo/core.hpp"
#include "ibpo/rng.hpp"
#include "test_support.hpp"

using namespace ibpo;
using test_support::response;

TEST_CASE("rational normalization and arithmetic") {
  CHECK(make_rational(2, 4) == Rational{1, 2});
  CHECK(make_rational(-2, 4) == Rational{-1, 2});
  CHECK(make_rational(2, -4) == Rational{-1, 2});
  CHECK(make_rational(0, 7) == Rational{0, 1});
  CHECK_THROWS_AS(make_rational(1, 0), std::invalid_argument);

  CHECK(parse_rational("1/2") == Rational{1, 2});
  CHECK(parse_rational("3") == Rational{3, 1});
  CHECK(parse_rational("-2/5") == Rational{-2, 5});
  CHECK_THROWS_AS(parse_rational("abc"), std::invalid_argument);

  CHECK(add({1, 2}, {1, 3}) == Rational{5, 6});
  CHECK(add({1, 2}, {-1, 2}) == Rational{0, 1});
  CHECK(compare({1, 2}, {2, 3}) < 0);
  CHECK(compare({1, 2}, {2, 4}) == 0);
  CHECK(Rational{1, 2} < Rational{3, 4});
  CHECK(to_double({1, 4}) == doctest::Approx(0.25));
  CHECK(to_string(Rational{-1, 2}) == "-1/2");
  CHECK(to_string(Rational{3, 1}) == "3");
}

TEST_CASE("build_batch accepts the 2x4 instance") {
  const Batch batch = test_support::golden_batch();
  CHECK(batch.size() == 2);
  CHECK(batch.responses_per_prompt() == 4);
  CHECK(batch.response(1, 1).correct == false);
  CHECK(batch.response(0, 2).group == GroupLabel::Extended);
}

TEST_CASE("build_batch minimal 1x1") {
  const Batch batch = build_batch({{0, 1}}, {{response(GroupLabel::Standard, true)}});
  CHECK(batch.size() == 1);
  CHECK(batch.responses_per_prompt() == 1);
}

TEST_CASE("build_batch rejects structural violations") {
  const auto std_ok = response(GroupLabel::Standard, true);

  SUBCASE("ragged rows") {
    CHECK_THROWS_WITH_AS(
        build_batch({{0, 1}, {1, 1}}, {{std_ok, std_ok, std_ok}, {std_ok, std_ok, std_ok, std_ok}}),
        doctest::Contains("row 1"), std::invalid_argument);
  }
  SUBCASE("row count mismatch") {
    CHECK_THROWS_AS(build_batch({{0, 1}, {1, 1}}, {{std_ok}}), std::invalid_argument);
  }
  SUBCASE("empty") {
    CHECK_THROWS_AS(build_batch({}, std::vector<std::vector<ResponseRecord>>{}),
                    std::invalid_argument);
  }
  SUBCASE("zero trials") {
    auto bad = response(GroupLabel::Extended, true);
    bad.trials = 0;
    CHECK_THROWS_AS(build_batch({{0, 1}}, {{bad}}), std::invalid_argument);
  }
  SUBCASE("standard with multiple trials") {
    auto bad = std_ok;
    bad.trials = 3;
    CHECK_THROWS_AS(build_batch({{0, 1}}, {{bad}}), std::invalid_argument);
  }
  SUBCASE("difficulty below one") {
    CHECK_THROWS_AS(build_batch({{0, 0}}, {{std_ok}}), std::invalid_argument);
  }
}

TEST_CASE("build_batch rejects random corruptions") {
  Rng rng(20240801);
  for (int iter = 0; iter < 200; ++iter) {
    const std::size_t n = 1 + rng.uniform_index(4);
    const std::size_t m = 1 + rng.uniform_index(5);
    std::vector<PromptRecord> prompts;
    std::vector<std::vector<ResponseRecord>> rows;
    for (std::size_t i = 0; i < n; ++i) {
      prompts.push_back({static_cast<int>(i), 1 + static_cast<int>(rng.uniform_index(5))});
      std::vector<ResponseRecord> row;
      for (std::size_t j = 0; j < m; ++j) {
        const auto group = rng.bernoulli(0.5) ? GroupLabel::Extended : GroupLabel::Standard;
        row.push_back(response(group, rng.bernoulli(0.5)));
      }
      rows.push_back(std::move(row));
    }
    // Sanity: the uncorrupted batch builds.
    CHECK_NOTHROW(build_batch(prompts, rows));

    const std::size_t i = rng.uniform_index(n);
    const std::size_t j = rng.uniform_index(m);
    switch (rng.uniform_index(4)) {
      case 0:
        rows[i][j].trials = 0;
        break;
      case 1:
        rows[i][j].group = GroupLabel::Standard;
        rows[i][j].trials = 2 + static_cast<int>(rng.uniform_index(6));
        break;
      case 2:
        rows[i].push_back(response(GroupLabel::Standard, true));
        if (n == 1) {
          // A single row cannot be ragged; lengthening it just changes m.
          continue;
        }
        break;
      default:
        prompts[i].difficulty = -static_cast<int>(rng.uniform_index(3));
        break;
    }
    CHECK_THROWS_AS(build_batch(prompts, rows), std::invalid_argument);
  }
}

TEST_CASE("selection matrix enforces at most one per row and mask containment") {
  BinaryMatrix mask(2, 3, 0);
  mask.at(0, 1) = 1;
  mask.at(1, 0) = 1;
  mask.at(1, 2) = 1;

  SUBCASE("row sum above one rejected") {
    BinaryMatrix entries(2, 3, 0);
    entries.at(1, 0) = 1;
    entries.at(1, 2) = 1;
    CHECK_THROWS_AS(SelectionMatrix::from_entries(entries, mask), std::invalid_argument);
    CHECK_THROWS_AS(SelectionMatrix::from_entries_unmasked(entries), std::invalid_argument);
  }
  SUBCASE("entry outside mask rejected") {
    BinaryMatrix entries(2, 3, 0);
    entries.at(0, 0) = 1;
    CHECK_THROWS_AS(SelectionMatrix::from_entries(entries, mask), std::invalid_argument);
    CHECK_NOTHROW(SelectionMatrix::from_entries_unmasked(entries));
  }
  SUBCASE("valid selection round-trips through entries()") {
    const SelectionMatrix s = SelectionMatrix::from_choices({1, 2}, 3, mask);
    CHECK(s.selected(0, 1));
    CHECK(s.selected(1, 2));
    CHECK(s.selected_count() == 2);
    const SelectionMatrix again = SelectionMatrix::from_entries(s.entries(), mask);
    CHECK(again == s);
  }
  SUBCASE("unselected rows allowed") {
    const SelectionMatrix s = SelectionMatrix::from_choices({-1, 0}, 3, mask);
    CHECK(s.choice(0) == -1);
    CHECK(s.selected_count() == 1);
  }
  SUBCASE("out of range choice rejected") {
    CHECK_THROWS_AS(SelectionMatrix::from_choices({3, 0}, 3, mask), std::invalid_argument);
  }
}

TEST_CASE("budget config validation") {
  CHECK_NOTHROW(make_budget({0, 1}));
  CHECK_NOTHROW(make_budget({1, 1}));
  CHECK_NOTHROW(make_budget({1, 2}, 0.0));
  CHECK_THROWS_AS(make_budget({-1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(make_budget({5, 4}), std::invalid_argument);
  CHECK_THROWS_AS(make_budget({1, 2}, -1.0), std::invalid_argument);
  CHECK(make_budget({2, 4}).q_plus == Rational{1, 2});
  CHECK(make_budget({1, 2}).kl_max == doctest::Approx(1024.0));
}
