#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "finloc/geometry.hpp"
#include "finloc/refinement.hpp"

namespace finloc {

// Dense rows-by-cols cost table; rows are predictions, cols are ground
// truths.
struct CostMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> cost;  // row-major

  static CostMatrix zeros(std::size_t rows, std::size_t cols);
  double& at(std::size_t row, std::size_t col);
  double at(std::size_t row, std::size_t col) const;
};

// Minimum-cost pairing of size min(rows, cols). Pairs are sorted by
// prediction index and total_cost is the plain sum of the chosen
// entries.
struct Assignment {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  double total_cost = 0.0;
};

// Aggregation of several layers' assignments over the same predictions.
struct UnionSet {
  std::vector<std::pair<std::size_t, std::size_t>> matched_pairs;  // deduplicated
  std::vector<std::size_t> matched_predictions;
  std::vector<std::size_t> unmatched_predictions;
};

struct GroundTruth {
  BoxCxCyWh box;
  int label = 0;
};

// Term weights of the matching cost.
struct DetrCostWeights {
  double classification = 1.0;
  double l1 = 5.0;
  double giou = 2.0;
};

// Optimal assignment; ties between equal-cost optima are broken toward
// the pairing whose (prediction, ground-truth) list, read in prediction
// order, is lexicographically smallest. Throws InvalidInputError on
// non-finite costs.
Assignment hungarian(const CostMatrix& cost);

// Matching cost per (prediction, ground truth): weighted sum of one
// minus the prediction's confidence, the mean absolute difference of
// the scene-normalized (cx, cy, w, h) coordinates, and one minus the
// generalized IoU.
CostMatrix detr_cost(const LayerState& layer,
                     std::span<const GroundTruth> ground_truths,
                     double scene_size, const DetrCostWeights& weights = {});

// Union of per-layer matches over num_predictions predictions: the
// deduplicated pair set, the predictions appearing in it, and the
// complement. All index lists come back sorted.
UnionSet union_set(std::span<const Assignment> assignments,
                   std::size_t num_predictions);

}  // namespace finloc
