#include <doctest.h>

#include <cmath>

#include "xferlens/errors.hpp"
#include "xferlens/overlap.hpp"
#include "xferlens/random.hpp"

using namespace xferlens;

namespace {

const std::filesystem::path kFixtures = XFERLENS_FIXTURES;

CorrectnessMatrix random_matrix(std::size_t k, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::string> ids;
  std::vector<std::vector<std::uint8_t>> rows(k, std::vector<std::uint8_t>(n));
  for (std::size_t m = 0; m < k; ++m) {
    ids.push_back("m" + std::to_string(m));
    const double acc = 0.2 + 0.7 * rng.uniform();
    for (auto& b : rows[m]) b = rng.uniform() < acc ? 1 : 0;
  }
  return {ids, rows};
}

double total(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

TEST_CASE("hand-enumerated two-model case") {
  const auto c = load_correctness(kFixtures / "correctness" / "hand.json");
  const auto h = overlap_report(c);
  REQUIRE(h.cells() == 4);
  CHECK(h.observed[0b00] == 0.0);
  CHECK(h.observed[0b01] == 0.25);
  CHECK(h.observed[0b10] == 0.25);
  CHECK(h.observed[0b11] == 0.5);
  CHECK(h.accuracies[0] == 0.75);
  CHECK(h.expected[0b01] == 0.1875);
  CHECK(h.expected[0b10] == 0.1875);
  CHECK(h.expected[0b11] == 0.5625);
  CHECK(h.expected[0b00] == 0.0625);
  CHECK(cell_label(h.model_ids, 0) == "none");
  CHECK(cell_label(h.model_ids, 0b11) == "M1+M2");
  CHECK(h.singleton(1) == 0b10);
}

TEST_CASE("degenerate and malformed matrices") {
  const auto one = exclusive_fractions(CorrectnessMatrix({"a"}, {{1, 1, 1}}));
  CHECK(one.observed[1] == 1.0);
  CHECK(one.observed[0] == 0.0);

  const auto same = exclusive_fractions(CorrectnessMatrix({"a", "b", "c"}, {{1, 0, 1}, {1, 0, 1}, {1, 0, 1}}));
  for (std::uint32_t mask = 1; mask < 7; ++mask) CHECK(same.observed[mask] == 0.0);
  CHECK(same.observed[7] == doctest::Approx(2.0 / 3.0));

  const auto perfect = overlap_report(CorrectnessMatrix({"a", "b"}, {{1, 1}, {1, 1}}));
  CHECK(perfect.observed[3] == 1.0);
  CHECK(perfect.expected[3] == 1.0);
  CHECK(perfect.expected == perfect.observed);

  CHECK_THROWS_AS(exclusive_fractions(CorrectnessMatrix({"a"}, {{}})), DegenerateInputError);
  CHECK_THROWS_AS(CorrectnessMatrix({"a", "a"}, {{1}, {0}}), SchemaError);
  CHECK_THROWS_AS(CorrectnessMatrix({"a", "b"}, {{1}, {0, 1}}), SchemaError);
  CHECK_THROWS_AS(CorrectnessMatrix({"a"}, {{2}}), SchemaError);
  std::vector<std::string> many;
  for (int i = 0; i < 17; ++i) many.push_back("m" + std::to_string(i));
  CHECK_THROWS_AS(CorrectnessMatrix(many, std::vector<std::vector<std::uint8_t>>(17, {1})), SchemaError);
}

TEST_CASE("independence baseline") {
  const auto e = expected_independent({{"a", 1.0}, {"b", 0.3}, {"c", 0.6}});
  for (std::uint32_t mask = 0; mask < 8; ++mask)
    if (!(mask & 1)) CHECK(e.expected[mask] == 0.0);
  CHECK(std::abs(total(e.expected) - 1.0) <= 1e-12);
  CHECK_THROWS_AS(expected_independent({{"a", 1.5}}), RangeError);

  SUBCASE("Monte Carlo agrees with the product formula") {
    const auto two = expected_independent({{"a", 0.75}, {"b", 0.75}});
    Rng rng(31);
    std::vector<double> counts(4, 0.0);
    const int n = 1000000;
    for (int i = 0; i < n; ++i) {
      const unsigned mask = (rng.uniform() < 0.75 ? 1u : 0u) | (rng.uniform() < 0.75 ? 2u : 0u);
      counts[mask] += 1.0;
    }
    for (int m = 0; m < 4; ++m) {
      const double p = two.expected[m];
      CHECK(std::abs(counts[m] / n - p) <= 4.0 * std::sqrt(p * (1 - p) / n));
    }
  }
}

TEST_CASE("cell sums, singletons and permutations") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t k = 1 + seed % 5;
    const auto c = random_matrix(k, 300, seed);
    const auto h = overlap_report(c);
    CHECK(std::abs(total(h.observed) - 1.0) <= 1e-12);
    CHECK(std::abs(total(h.expected) - 1.0) <= 1e-12);
    for (std::size_t m = 0; m < k; ++m) CHECK(h.observed[h.singleton(m)] <= h.accuracies[m] + 1e-15);

    // reverse the model order: bit m moves to bit k-1-m
    std::vector<std::string> ids(c.model_ids().rbegin(), c.model_ids().rend());
    std::vector<std::vector<std::uint8_t>> rows;
    for (std::size_t m = k; m-- > 0;) {
      rows.emplace_back();
      for (std::size_t i = 0; i < c.datapoints(); ++i) rows.back().push_back(c.correct(m, i));
    }
    const auto r = overlap_report(CorrectnessMatrix(ids, rows));
    for (std::uint32_t mask = 0; mask < h.cells(); ++mask) {
      std::uint32_t flipped = 0;
      for (std::size_t m = 0; m < k; ++m)
        if (mask & (1u << m)) flipped |= 1u << (k - 1 - m);
      CHECK(r.observed[flipped] == h.observed[mask]);
      CHECK(r.expected[flipped] == doctest::Approx(h.expected[mask]).epsilon(1e-12));
    }
  }
}

TEST_CASE("restriction to a subset marginalizes the cells") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const std::size_t k = 2 + seed % 3;
    const auto c = random_matrix(k, 500, 100 + seed);
    const auto full = exclusive_fractions(c);
    for (std::uint32_t subset = 1; subset < (1u << k); ++subset) {
      std::vector<std::string> ids;
      std::vector<std::vector<std::uint8_t>> rows;
      std::vector<std::size_t> members;
      for (std::size_t m = 0; m < k; ++m)
        if (subset & (1u << m)) {
          members.push_back(m);
          ids.push_back(c.model_ids()[m]);
          rows.emplace_back();
          for (std::size_t i = 0; i < c.datapoints(); ++i) rows.back().push_back(c.correct(m, i));
        }
      const auto part = exclusive_fractions(CorrectnessMatrix(ids, rows));
      std::vector<double> summed(part.cells(), 0.0);
      for (std::uint32_t mask = 0; mask < full.cells(); ++mask) {
        std::uint32_t sub = 0;
        for (std::size_t j = 0; j < members.size(); ++j)
          if (mask & (1u << members[j])) sub |= 1u << j;
        summed[sub] += full.observed[mask];
      }
      for (std::size_t s = 0; s < summed.size(); ++s) CHECK(std::abs(summed[s] - part.observed[s]) <= 1e-12);
    }
  }
}

TEST_CASE("uniquely solved points exceed the independence baseline") {
  // model a alone solves points 0..9 of 100; b and c solve 10..99
  std::vector<std::vector<std::uint8_t>> rows(3, std::vector<std::uint8_t>(100, 0));
  for (int i = 0; i < 10; ++i) rows[0][i] = 1;
  for (int i = 10; i < 100; ++i) rows[1][i] = rows[2][i] = 1;
  const auto h = overlap_report(CorrectnessMatrix({"a", "b", "c"}, rows));
  CHECK(h.observed[h.singleton(0)] == 0.10);
  CHECK(h.expected[h.singleton(0)] < 0.10);
}

TEST_CASE("large independent sample within binomial tolerance") {
  const double acc[3] = {0.8, 0.7, 0.6};
  const std::size_t n = 100000;
  Rng rng(77);
  std::vector<std::vector<std::uint8_t>> rows(3, std::vector<std::uint8_t>(n));
  for (int m = 0; m < 3; ++m)
    for (auto& b : rows[m]) b = rng.uniform() < acc[m] ? 1 : 0;
  const auto h = overlap_report(CorrectnessMatrix({"a", "b", "c"}, rows));
  for (std::uint32_t mask = 0; mask < 8; ++mask) {
    const double p = h.expected[mask];
    CHECK(std::abs(h.observed[mask] - p) <= 3.0 * std::sqrt(p * (1 - p) / n) + 1e-12);
  }
}

TEST_CASE("correctness files") {
  const auto t = load_correctness(kFixtures / "correctness" / "three.tnsr");
  CHECK(t.models() == 3);
  CHECK(t.datapoints() == 400);
  CHECK(std::abs(t.accuracy(0) - 0.8) < 0.08);
  CHECK(t.model_ids()[2] == "random-init");
  CHECK_THROWS_AS(load_correctness(kFixtures / "correctness" / "absent.tnsr"), MissingFileError);
  CHECK_THROWS_AS(parse_correctness(Json::parse(R"({"models":["a"],"correct":[[1,5]]})")), SchemaError);
  CHECK(parse_correctness(Json::parse(R"({"models":["a"],"correct":[[true,false]]})")).accuracy(0) == 0.5);
}
