#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "finloc/geometry.hpp"
#include "finloc/losses.hpp"
#include "finloc/matching.hpp"
#include "finloc/refinement.hpp"

namespace finloc {

// A synthetic single-class scene: ground-truth boxes, one initial box
// per query (the first num_gt jittered copies of the ground truths plus
// uniformly drawn distractors) and fixed confidences standing in for a
// classification head.
struct ToyProblem {
  double scene_size = 100.0;
  std::vector<BoxCxCyWh> gt_boxes;
  std::vector<BoxCxCyWh> initial_boxes;
  std::vector<double> confidences;
  int layers = 3;
  std::uint64_t seed = 1;
};

struct TrainConfig {
  int steps = 500;
  double learning_rate = 0.5;
  double weighting_range_scale = 0.5;
  double weighting_curvature = 0.25;
  int num_bins = 32;
  double temperature = 5.0;
  double fgl_weight = 0.15;
  double ddf_weight = 1.5;
  bool distill = true;
  // When false (with distill on) the distillation loss is still
  // evaluated and recorded but its gradient is thrown away; useful for
  // isolating what the gradient itself contributes.
  bool distill_gradient = true;
  int rematch_every = 10;
  KlDirection kl_direction = KlDirection::teacher_first;
};

// One row of the training log. Losses are the raw per-layer values
// before the configured loss weights; the distillation column is 0 for
// the final layer, which only teaches.
struct StepRecord {
  int step = 0;
  int layer = 1;  // 1-based
  std::optional<double> mean_iou;
  double fgl = 0.0;
  double ddf = 0.0;
};

struct TrainReport {
  std::vector<StepRecord> records;  // steps * layers rows, step-major
  // Post-training evaluation under a fresh matching.
  Assignment final_assignment;  // final layer's matching
  std::vector<std::optional<double>> final_mean_iou;  // per layer
  std::vector<EdgeDistributions> final_logits;        // cumulative, per layer
  double wall_seconds = 0.0;  // informational; not part of any output file
  std::int64_t floor_hits = 0;
};

// Deterministic scene generator: identical arguments give bit-identical
// problems. The first num_gt queries start at Gaussian-jittered copies
// of the ground truths (confidence 0.9); the rest are uniform
// distractors (confidence 0.1). Everything stays inside
// [0, scene_size]^2.
ToyProblem generate_problem(std::uint64_t seed, int num_queries, int num_gt,
                            double scene_size, double noise);

// Plain gradient descent on the first layer's logits and the per-layer
// residual deltas. Matching, target brackets and per-prediction loss
// weights are refreshed every rematch_every steps and frozen in
// between, so the objective is smooth between refreshes. Throws
// DivergenceError when the loss stops being finite.
TrainReport train(const ToyProblem& problem, const TrainConfig& config);

// Mean IoU of each layer's boxes over the assignment's pairs; empty
// assignments evaluate to nullopt rather than 0.
std::vector<std::optional<double>> evaluate(std::span<const LayerState> states,
                                            std::span<const BoxCxCyWh> gts,
                                            const Assignment& assignment);

}  // namespace finloc
