#include "finloc/refinement.hpp"

#include <cmath>
#include <string>

#include "finloc/errors.hpp"
#include "finloc/numeric.hpp"

namespace finloc {

namespace {

std::size_t flat_index(const EdgeDistributions& d, std::size_t prediction,
                       int edge, std::size_t bin) {
  if (prediction >= d.num_predictions || edge < 0 || edge >= kNumEdges ||
      bin >= d.num_bins) {
    throw IndexError("EdgeDistributions: element index out of range");
  }
  return (prediction * kNumEdges + static_cast<std::size_t>(edge)) *
             d.num_bins +
         bin;
}

void require_spec_match(const EdgeDistributions& d, const WeightingSpec& spec,
                        const char* who) {
  if (d.num_bins != static_cast<std::size_t>(spec.num_bins) + 1) {
    throw ShapeError(std::string(who) + ": distribution has " +
                     std::to_string(d.num_bins) + " bins, weighting expects " +
                     std::to_string(spec.num_bins + 1));
  }
}

}  // namespace

EdgeDistributions EdgeDistributions::zeros(std::size_t num_predictions,
                                           std::size_t num_bins) {
  EdgeDistributions d;
  d.num_predictions = num_predictions;
  d.num_bins = num_bins;
  d.logits.assign(num_predictions * kNumEdges * num_bins, 0.0);
  return d;
}

double& EdgeDistributions::at(std::size_t prediction, int edge,
                              std::size_t bin) {
  return logits[flat_index(*this, prediction, edge, bin)];
}

double EdgeDistributions::at(std::size_t prediction, int edge,
                             std::size_t bin) const {
  return logits[flat_index(*this, prediction, edge, bin)];
}

std::span<double> EdgeDistributions::row(std::size_t prediction, int edge) {
  const std::size_t start = flat_index(*this, prediction, edge, 0);
  return std::span<double>(logits).subspan(start, num_bins);
}

std::span<const double> EdgeDistributions::row(std::size_t prediction,
                                               int edge) const {
  const std::size_t start = flat_index(*this, prediction, edge, 0);
  return std::span<const double>(logits).subspan(start, num_bins);
}

bool EdgeDistributions::same_shape(const EdgeDistributions& other) const {
  return num_predictions == other.num_predictions &&
         num_bins == other.num_bins;
}

std::vector<double> probabilities(const EdgeDistributions& dists) {
  if (!all_finite(dists.logits)) {
    throw InvalidInputError("probabilities: logits must be finite");
  }
  std::vector<double> out(dists.logits.size());
  const std::size_t rows = dists.num_predictions * kNumEdges;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t start = r * dists.num_bins;
    softmax_into(std::span<const double>(dists.logits)
                     .subspan(start, dists.num_bins),
                 std::span<double>(out).subspan(start, dists.num_bins));
  }
  return out;
}

EdgeDistributions apply_residual(const EdgeDistributions& prev,
                                 const EdgeDistributions& delta) {
  if (!prev.same_shape(delta)) {
    throw ShapeError("apply_residual: shapes differ");
  }
  EdgeDistributions out = prev;
  for (std::size_t i = 0; i < out.logits.size(); ++i) {
    out.logits[i] += delta.logits[i];
  }
  return out;
}

EdgeOffsets decode_offsets(const EdgeDistributions& dists,
                           std::size_t prediction, const WeightingSpec& spec) {
  require_spec_match(dists, spec, "decode_offsets");
  if (prediction >= dists.num_predictions) {
    throw IndexError("decode_offsets: prediction index out of range");
  }
  double decoded[kNumEdges];
  std::vector<double> probs(dists.num_bins);
  for (int e = 0; e < kNumEdges; ++e) {
    const auto row = dists.row(prediction, e);
    if (!all_finite(row)) {
      throw InvalidInputError("decode_offsets: logits must be finite");
    }
    softmax_into(row, probs);
    double acc = 0.0;
    for (std::size_t n = 0; n < probs.size(); ++n) {
      acc += spec.knots[n] * probs[n];
    }
    decoded[e] = acc;
  }
  return EdgeOffsets{decoded[0], decoded[1], decoded[2], decoded[3]};
}

std::vector<EdgeOffsets> decode_offsets(const EdgeDistributions& dists,
                                        const WeightingSpec& spec) {
  std::vector<EdgeOffsets> out;
  out.reserve(dists.num_predictions);
  for (std::size_t k = 0; k < dists.num_predictions; ++k) {
    out.push_back(decode_offsets(dists, k, spec));
  }
  return out;
}

EdgeDistances refine_edges(const EdgeDistances& d0, double init_w,
                           double init_h, const EdgeDistributions& dists,
                           std::size_t prediction, const WeightingSpec& spec) {
  if (!std::isfinite(init_w) || !std::isfinite(init_h) || init_w <= 0.0 ||
      init_h <= 0.0) {
    throw InvalidInputError("refine_edges: reference sizes must be positive");
  }
  const EdgeOffsets off = decode_offsets(dists, prediction, spec);
  EdgeDistances refined = d0;
  refined.top = d0.top + init_h * off.top;
  refined.bottom = d0.bottom + init_h * off.bottom;
  refined.left = d0.left + init_w * off.left;
  refined.right = d0.right + init_w * off.right;
  return refined;
}

std::vector<LayerState> run_pipeline(const LayerState& initial,
                                     const std::vector<EdgeDistributions>& deltas,
                                     const WeightingSpec& spec) {
  if (initial.layer_index != 1) {
    throw InvalidInputError("run_pipeline: the input state must be layer 1");
  }
  require_spec_match(initial.distributions, spec, "run_pipeline");
  const std::size_t k = initial.distributions.num_predictions;
  if (initial.edge_distances.size() != k || initial.confidences.size() != k) {
    throw ShapeError("run_pipeline: per-prediction fields disagree on count");
  }
  for (const auto& delta : deltas) {
    if (!delta.same_shape(initial.distributions)) {
      throw ShapeError("run_pipeline: delta shape differs from layer 1");
    }
  }

  // Reference sizes come from the reference distances; for a symmetric
  // start these are exactly the initial box sizes.
  std::vector<double> ref_w(k), ref_h(k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto& d0 = initial.edge_distances[i];
    ref_w[i] = d0.left + d0.right;
    ref_h[i] = d0.top + d0.bottom;
    if (!(ref_w[i] > 0.0) || !(ref_h[i] > 0.0)) {
      throw InvalidInputError(
          "run_pipeline: reference distances span a non-positive size");
    }
  }

  const std::size_t layers = deltas.size() + 1;
  std::vector<LayerState> states;
  states.reserve(layers);

  EdgeDistributions logits = initial.distributions;
  for (std::size_t l = 0; l < layers; ++l) {
    if (l > 0) {
      logits = apply_residual(logits, deltas[l - 1]);
    }
    LayerState state;
    state.layer_index = static_cast<int>(l) + 1;
    state.edge_distances = initial.edge_distances;
    state.distributions = logits;
    state.confidences = initial.confidences;
    state.boxes.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
      const EdgeDistances refined = refine_edges(
          initial.edge_distances[i], ref_w[i], ref_h[i], logits, i, spec);
      state.boxes.push_back(from_edge_distances(refined));
    }
    states.push_back(std::move(state));
  }
  return states;
}

double gfocal_decode(std::span<const double> distribution,
                     const GFocalSpec& spec) {
  if (!std::isfinite(spec.max_distance) || spec.max_distance <= 0.0 ||
      spec.num_bins < 1) {
    throw InvalidInputError("gfocal_decode: spec must have positive range "
                            "and at least one bin");
  }
  if (distribution.size() != static_cast<std::size_t>(spec.num_bins) + 1) {
    throw InvalidInputError("gfocal_decode: expected " +
                            std::to_string(spec.num_bins + 1) + " entries");
  }
  double total = 0.0;
  for (double p : distribution) {
    if (!std::isfinite(p) || p < 0.0) {
      throw InvalidInputError("gfocal_decode: entries must be finite and "
                              ">= 0");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-6) {
    throw InvalidInputError("gfocal_decode: input is not normalized");
  }
  double acc = 0.0;
  for (std::size_t n = 0; n < distribution.size(); ++n) {
    acc += (static_cast<double>(n) / spec.num_bins) * distribution[n];
  }
  return spec.max_distance * acc;
}

}  // namespace finloc
