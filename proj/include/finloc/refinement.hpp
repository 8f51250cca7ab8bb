#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "finloc/geometry.hpp"
#include "finloc/weighting.hpp"

namespace finloc {

// Edge order used throughout: top, bottom, left, right. Top and bottom
// offsets are scaled by the reference height, left and right by the
// reference width.
inline constexpr int kNumEdges = 4;

// Per-prediction, per-edge bin logits, laid out row-major as
// (prediction * 4 + edge) * num_bins + bin. Gradients and probabilities
// reuse the same flat layout.
struct EdgeDistributions {
  std::size_t num_predictions = 0;
  std::size_t num_bins = 0;  // knot count, i.e. N + 1
  std::vector<double> logits;

  static EdgeDistributions zeros(std::size_t num_predictions,
                                 std::size_t num_bins);

  double& at(std::size_t prediction, int edge, std::size_t bin);
  double at(std::size_t prediction, int edge, std::size_t bin) const;
  std::span<double> row(std::size_t prediction, int edge);
  std::span<const double> row(std::size_t prediction, int edge) const;
  bool same_shape(const EdgeDistributions& other) const;
};

// Expected relative offsets of the four edges, each a convex combination
// of knots and therefore within [-2 * range_scale, 2 * range_scale].
struct EdgeOffsets {
  double top = 0.0;
  double bottom = 0.0;
  double left = 0.0;
  double right = 0.0;
};

// One decoder layer's view of K predictions. edge_distances holds the
// fixed per-prediction reference distances shared by every layer
// (anchored at the initial centers); boxes is this layer's refined
// decode of them. Confidences ride along unchanged.
struct LayerState {
  int layer_index = 1;  // 1-based
  std::vector<BoxCxCyWh> boxes;
  std::vector<EdgeDistances> edge_distances;
  EdgeDistributions distributions;
  std::vector<double> confidences;
};

// Classic integer-grid decode head: distance = max_distance * E[n / N].
struct GFocalSpec {
  double max_distance = 16.0;
  int num_bins = 32;
};

// Row-wise softmax over bins; same layout as the input logits.
// Throws InvalidInputError on non-finite logits.
std::vector<double> probabilities(const EdgeDistributions& dists);

// Elementwise sum of two logit grids of identical shape. Softmax is
// applied only at evaluation points, so accumulation order cannot
// change the decoded distributions.
EdgeDistributions apply_residual(const EdgeDistributions& prev,
                                 const EdgeDistributions& delta);

// Expected offset per edge under the softmax of one prediction's logits.
EdgeOffsets decode_offsets(const EdgeDistributions& dists,
                           std::size_t prediction, const WeightingSpec& spec);
std::vector<EdgeOffsets> decode_offsets(const EdgeDistributions& dists,
                                        const WeightingSpec& spec);

// Moves each reference edge by its decoded offset scaled by the
// reference size: top/bottom by init_h, left/right by init_w. The
// anchor never moves. Throws InvalidInputError for non-positive
// reference sizes.
EdgeDistances refine_edges(const EdgeDistances& d0, double init_w,
                           double init_h, const EdgeDistributions& dists,
                           std::size_t prediction, const WeightingSpec& spec);

// Unrolls the chain of residual refinements. The input state carries the
// reference geometry (edge_distances anchored at the initial centers)
// and the first layer's raw logits; deltas[i] is added to produce layer
// i + 2. Every returned layer's boxes are decoded against the same
// reference distances and reference sizes.
std::vector<LayerState> run_pipeline(const LayerState& initial,
                                     const std::vector<EdgeDistributions>& deltas,
                                     const WeightingSpec& spec);

// Expected distance under a normalized distribution on the uniform grid
// {0, 1/N, ..., 1} scaled by max_distance. Throws InvalidInputError when
// the input is not a distribution over num_bins + 1 entries.
double gfocal_decode(std::span<const double> distribution,
                     const GFocalSpec& spec);

}  // namespace finloc
