#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "doctest.h"
#include "finloc/errors.hpp"
#include "finloc/matching.hpp"
#include "finloc/numeric.hpp"

using namespace finloc;

namespace {

// reference solver: try every way of choosing and ordering min(r, c)
// columns (rows when transposed)
double brute_force_cost(const CostMatrix& m) {
  const bool tall = m.rows > m.cols;
  const std::size_t big = tall ? m.rows : m.cols;
  const std::size_t small = tall ? m.cols : m.rows;
  std::vector<std::size_t> perm(big);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0;
    for (std::size_t i = 0; i < small; ++i) {
      total += tall ? m.at(perm[i], i) : m.at(i, perm[i]);
    }
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

CostMatrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols,
                         bool integer) {
  CostMatrix m = CostMatrix::zeros(rows, cols);
  for (double& v : m.cost) {
    v = integer ? std::floor(uniform_unit(rng) * 20.0) : uniform_unit(rng) * 10.0;
  }
  return m;
}

}  // namespace

TEST_CASE("known 3x3 assignment") {
  CostMatrix m = CostMatrix::zeros(3, 3);
  const double values[9] = {4, 1, 3, 2, 0, 5, 3, 2, 2};
  std::copy(std::begin(values), std::end(values), m.cost.begin());
  const Assignment a = hungarian(m);
  CHECK(a.total_cost == 5.0);
  REQUIRE(a.pairs.size() == 3);
  CHECK(a.pairs[0] == std::pair<std::size_t, std::size_t>{0, 1});
  CHECK(a.pairs[1] == std::pair<std::size_t, std::size_t>{1, 0});
  CHECK(a.pairs[2] == std::pair<std::size_t, std::size_t>{2, 2});
}

TEST_CASE("equal-cost optima break ties lexicographically") {
  // all-equal costs: identity is the lexicographically smallest pairing
  CostMatrix flat = CostMatrix::zeros(4, 4);
  std::fill(flat.cost.begin(), flat.cost.end(), 2.5);
  Assignment a = hungarian(flat);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(a.pairs[i] == std::pair<std::size_t, std::size_t>{i, i});
  }

  // two optimal pairings; (0,0),(1,1) beats (0,1),(1,0)
  CostMatrix two = CostMatrix::zeros(2, 2);
  two.at(0, 0) = 1;
  two.at(0, 1) = 2;
  two.at(1, 0) = 2;
  two.at(1, 1) = 1;
  // make both diagonals tie
  two.at(0, 0) = 1;
  two.at(1, 1) = 3;
  two.at(0, 1) = 2;
  two.at(1, 0) = 2;
  a = hungarian(two);
  CHECK(a.total_cost == 4.0);
  CHECK(a.pairs[0] == std::pair<std::size_t, std::size_t>{0, 0});
  CHECK(a.pairs[1] == std::pair<std::size_t, std::size_t>{1, 1});

  // wide matrix: prediction 0 prefers the lowest column index among ties
  CostMatrix wide = CostMatrix::zeros(1, 3);
  wide.at(0, 0) = 7;
  wide.at(0, 1) = 7;
  wide.at(0, 2) = 7;
  a = hungarian(wide);
  CHECK(a.pairs[0] == std::pair<std::size_t, std::size_t>{0, 0});
}

TEST_CASE("rectangular matrices match min(rows, cols) pairs") {
  std::mt19937_64 rng(7);
  const CostMatrix wide = random_matrix(rng, 3, 6, false);
  Assignment a = hungarian(wide);
  CHECK(a.pairs.size() == 3);
  const CostMatrix tall = random_matrix(rng, 6, 3, false);
  a = hungarian(tall);
  CHECK(a.pairs.size() == 3);
  // pairs are sorted by prediction and hit distinct ground truths
  std::vector<std::size_t> cols;
  for (std::size_t i = 0; i < a.pairs.size(); ++i) {
    if (i > 0) CHECK(a.pairs[i - 1].first < a.pairs[i].first);
    cols.push_back(a.pairs[i].second);
  }
  std::sort(cols.begin(), cols.end());
  CHECK(std::adjacent_find(cols.begin(), cols.end()) == cols.end());
}

TEST_CASE("optimal cost equals exhaustive search on random matrices") {
  std::mt19937_64 rng(13);
  for (int round = 0; round < 60; ++round) {
    const std::size_t rows = 1 + static_cast<std::size_t>(uniform_unit(rng) * 6.0);
    const std::size_t cols = 1 + static_cast<std::size_t>(uniform_unit(rng) * 6.0);
    const CostMatrix m = random_matrix(rng, rows, cols, round % 2 == 0);
    const Assignment a = hungarian(m);
    const double reference = brute_force_cost(m);
    if (round % 2 == 0) {
      CHECK(a.total_cost == reference);  // integer costs: exact
    } else {
      CHECK(a.total_cost == doctest::Approx(reference).epsilon(1e-12));
    }
    // reported total matches the chosen entries
    double sum = 0;
    for (const auto& [r, c] : a.pairs) sum += m.at(r, c);
    CHECK(sum == a.total_cost);
  }
}

TEST_CASE("non-finite costs are rejected") {
  CostMatrix m = CostMatrix::zeros(2, 2);
  m.at(0, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(hungarian(m), InvalidInputError);
  m.at(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(hungarian(m), InvalidInputError);
}

TEST_CASE("matching cost combines confidence, l1 and overlap terms") {
  LayerState layer;
  layer.layer_index = 1;
  layer.boxes = {{10, 10, 20, 20}};
  layer.edge_distances = {to_edge_distances(layer.boxes[0])};
  layer.confidences = {0.7};

  const std::vector<GroundTruth> gts{{{12, 14, 18, 24}, 0}};
  const CostMatrix m = detr_cost(layer, gts, 100.0);
  REQUIRE(m.rows == 1);
  REQUIRE(m.cols == 1);
  CHECK(m.at(0, 0) == doctest::Approx(1.3597619744007576).epsilon(1e-12));

  // custom weights scale each term
  const CostMatrix only_conf = detr_cost(layer, gts, 100.0, {1.0, 0.0, 0.0});
  CHECK(only_conf.at(0, 0) == doctest::Approx(0.3).epsilon(1e-12));
  const CostMatrix only_l1 = detr_cost(layer, gts, 100.0, {0.0, 5.0, 0.0});
  CHECK(only_l1.at(0, 0) == doctest::Approx(0.15).epsilon(1e-12));

  // a perfect, fully confident prediction costs nothing
  LayerState exact = layer;
  exact.boxes = {{12, 14, 18, 24}};
  exact.confidences = {1.0};
  CHECK(detr_cost(exact, gts, 100.0).at(0, 0) == doctest::Approx(0.0).epsilon(1e-12));

  CHECK_THROWS_AS(detr_cost(layer, gts, 0.0), InvalidInputError);
  LayerState bad_conf = layer;
  bad_conf.confidences = {1.5};
  CHECK_THROWS_AS(detr_cost(bad_conf, gts, 100.0), InvalidInputError);
}

TEST_CASE("union of per-layer matches deduplicates and sorts") {
  Assignment l1;
  l1.pairs = {{0, 1}, {2, 0}};
  Assignment l2;
  l2.pairs = {{0, 1}, {3, 0}};
  const std::vector<Assignment> layers{l1, l2};
  const UnionSet u = union_set(layers, 5);

  REQUIRE(u.matched_pairs.size() == 3);  // (0,1) collapses
  CHECK(u.matched_pairs[0] == std::pair<std::size_t, std::size_t>{0, 1});
  CHECK(u.matched_pairs[1] == std::pair<std::size_t, std::size_t>{2, 0});
  CHECK(u.matched_pairs[2] == std::pair<std::size_t, std::size_t>{3, 0});
  CHECK(u.matched_predictions == std::vector<std::size_t>{0, 2, 3});
  CHECK(u.unmatched_predictions == std::vector<std::size_t>{1, 4});

  Assignment outside;
  outside.pairs = {{9, 0}};
  const std::vector<Assignment> bad{outside};
  CHECK_THROWS_AS(union_set(bad, 5), IndexError);
}
