#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "finloc/geometry.hpp"
#include "finloc/refinement.hpp"
#include "finloc/weighting.hpp"

namespace finloc {

// Supervision for one prediction: the clamped relative offset of each
// edge toward its ground truth, the knot pair bracketing that offset,
// and a quality weight (typically the prediction's IoU, treated as a
// constant).
struct FglTarget {
  std::size_t prediction = 0;
  double iou_weight = 0.0;          // in [0, 1]
  std::array<double, 4> offsets{};  // clamped into the knot range
  std::array<Bracket, 4> brackets{};
};

// One layer's worth of targets; predictions without an entry contribute
// neither loss nor gradient.
using FglTargets = std::vector<FglTarget>;

// Derives the target offsets of `ground_truth` as seen from the
// reference distances (same anchor, same reference sizes), clamps them
// into the knot range and brackets them.
FglTarget make_fgl_target(std::size_t prediction,
                          const EdgeDistances& reference,
                          const BoxCxCyWh& ground_truth, double iou_weight,
                          const WeightingSpec& spec);

struct FglResult {
  double loss = 0.0;
  std::vector<double> per_layer;               // loss split by layer
  std::vector<std::vector<double>> gradients;  // per layer, logits layout
  std::int64_t floor_hits = 0;  // log-argument floors that fired
};

// Weighted cross-entropy against the two bracketing bins of each
// supervised edge, summed over layers. The bracket weights make the
// loss minimal exactly when the decoded offset reproduces the target.
// Gradients are with respect to the raw logits.
FglResult fgl_loss(const std::vector<EdgeDistributions>& layers,
                   const std::vector<FglTargets>& targets,
                   const WeightingSpec& spec);

// Argument order of the distillation divergence.
enum class KlDirection {
  teacher_first,  // KL(teacher || student); the default
  student_first,  // mirrored form KL(student || teacher)
};

// Per-prediction distillation weights. Matched predictions carry their
// IoU, unmatched ones their confidence, each scaled by a square-root
// group normalizer so neither side dominates as the split changes.
struct DdfWeights {
  std::size_t num_matched = 0;
  std::size_t num_unmatched = 0;
  std::vector<double> matched;    // aligned with the matched index list
  std::vector<double> unmatched;  // aligned with the unmatched index list
  double temperature = 5.0;
};

DdfWeights make_ddf_weights(std::span<const double> matched_iou,
                            std::span<const double> unmatched_confidence,
                            double temperature);

struct DdfResult {
  double loss = 0.0;
  std::vector<double> per_layer;               // loss split by student layer
  std::vector<std::vector<double>> gradients;  // per student layer only
  std::int64_t floor_hits = 0;
};

// Temperature-scaled divergence between every student layer and the
// final (teacher) layer, weighted per prediction. The teacher is a
// constant: gradients cover student layers only and the scale factor
// temperature^2 keeps the gradient magnitude independent of the
// temperature. Throws IndexError when the matched and unmatched lists
// overlap or leave the prediction range.
DdfResult ddf_loss(const std::vector<EdgeDistributions>& student_layers,
                   const EdgeDistributions& teacher, const DdfWeights& weights,
                   std::span<const std::size_t> matched,
                   std::span<const std::size_t> unmatched,
                   KlDirection direction = KlDirection::teacher_first);

// Sum over p_i * log(p_i / q_i) with q floored at 1e-12 inside the log;
// zero entries of p contribute nothing. Both arguments must already be
// normalized within 1e-6. floor_hits, when given, counts fired floors.
double kl_divergence(std::span<const double> p, std::span<const double> q,
                     std::int64_t* floor_hits = nullptr);

// Central-difference probe of an analytic gradient: perturbs each
// coordinate of `point` by +/- epsilon and returns the worst
// |analytic - numeric| / max(1, |numeric|) over coordinates. epsilon
// must lie in [1e-7, 1e-3].
double finite_difference_check(
    const std::function<double(std::span<const double>)>& loss,
    std::span<const double> analytic_gradient, std::span<const double> point,
    double epsilon);

}  // namespace finloc
