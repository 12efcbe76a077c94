#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "dendromap/error.hpp"
#include "dendromap/gridify.hpp"
#include "oracles.hpp"

using namespace dendromap;

namespace {

bool is_permutation_of_columns(const LapSolution& s, std::size_t n) {
  const std::set<std::size_t> cols(s.row_to_col.begin(), s.row_to_col.end());
  return s.row_to_col.size() == n && cols.size() == n && (n == 0 || *cols.rbegin() == n - 1);
}

double cost_of(const CostMatrix& m, const LapSolution& s) {
  double total = 0.0;
  for (std::size_t r = 0; r < m.size(); ++r) total += m(r, s.row_to_col[r]);
  return total;
}

}  // namespace

TEST_CASE("three by three example") {
  const CostMatrix m(3, {4, 1, 3, 2, 0, 5, 3, 2, 2});
  const auto s = solve_lap(m);
  CHECK(s.total_cost == 5.0);
  CHECK(s.row_to_col == std::vector<std::size_t>{1, 0, 2});
}

TEST_CASE("trivial sizes") {
  CHECK(solve_lap(CostMatrix(0)).row_to_col.empty());
  const auto one = solve_lap(CostMatrix(1, {7.5}));
  CHECK(one.row_to_col == std::vector<std::size_t>{0});
  CHECK(one.total_cost == 7.5);
}

TEST_CASE("rejects bad costs") {
  CHECK_THROWS_AS(solve_lap(CostMatrix(2, {1, -1, 0, 0})), Error);
  CHECK_THROWS_AS(solve_lap(CostMatrix(1, {std::numeric_limits<double>::quiet_NaN()})), Error);
  CHECK_THROWS_AS(CostMatrix(2, {1, 2, 3}), Error);
}

TEST_CASE("matches brute force on small integer matrices") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + trial % 8;
    const auto m = oracle::random_costs(rng, n, trial % 3 == 0 ? 3 : 100);
    const auto s = solve_lap(m);
    REQUIRE(is_permutation_of_columns(s, n));
    CHECK(s.total_cost == oracle::brute_force_lap(m));
    CHECK(s.total_cost == cost_of(m, s));
  }
}

TEST_CASE("matches the Hungarian method on larger matrices") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> real(0.0, 1000.0);
  for (const std::size_t n : {9, 20, 57, 120}) {
    CostMatrix m(n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) m(r, c) = real(rng);
    const auto s = solve_lap(m);
    REQUIRE(is_permutation_of_columns(s, n));
    CHECK(s.total_cost == doctest::Approx(oracle::hungarian(m)).epsilon(1e-12));
    CHECK(s.total_cost <= oracle::greedy_lap(m) + 1e-9);
  }
}

TEST_CASE("constant and degenerate matrices") {
  CostMatrix zeros(6);
  CHECK(solve_lap(zeros).total_cost == 0.0);
  CostMatrix ties(5);
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t c = 0; c < 5; ++c) ties(r, c) = 1.0;
  const auto s = solve_lap(ties);
  CHECK(is_permutation_of_columns(s, 5));
  CHECK(s.total_cost == 5.0);
}
