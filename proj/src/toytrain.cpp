#include "finloc/toytrain.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "finloc/errors.hpp"
#include "finloc/numeric.hpp"

namespace finloc {

namespace {

// A box between 10% and 30% of the scene on each side, fully inside it.
BoxCxCyWh sample_box(std::mt19937_64& rng, double scene) {
  BoxCxCyWh box;
  box.w = scene * (0.1 + 0.2 * uniform_unit(rng));
  box.h = scene * (0.1 + 0.2 * uniform_unit(rng));
  box.cx = box.w / 2.0 + (scene - box.w) * uniform_unit(rng);
  box.cy = box.h / 2.0 + (scene - box.h) * uniform_unit(rng);
  return box;
}

BoxCxCyWh jitter_box(std::mt19937_64& rng, const BoxCxCyWh& base, double sd,
                     double scene) {
  BoxCxCyWh box = base;
  box.cx += sd * normal_unit(rng);
  box.cy += sd * normal_unit(rng);
  box.w += sd * normal_unit(rng);
  box.h += sd * normal_unit(rng);
  box.w = std::clamp(box.w, 0.02 * scene, scene);
  box.h = std::clamp(box.h, 0.02 * scene, scene);
  box.cx = std::clamp(box.cx, box.w / 2.0, scene - box.w / 2.0);
  box.cy = std::clamp(box.cy, box.h / 2.0, scene - box.h / 2.0);
  return box;
}

std::optional<double> mean_matched_iou(std::span<const BoxCxCyWh> boxes,
                                       std::span<const BoxCxCyWh> gts,
                                       const Assignment& assignment) {
  if (assignment.pairs.empty()) {
    return std::nullopt;
  }
  double acc = 0.0;
  for (const auto& [pred, gt] : assignment.pairs) {
    if (pred >= boxes.size() || gt >= gts.size()) {
      throw IndexError("mean IoU: assignment refers outside the boxes");
    }
    acc += iou(boxes[pred], gts[gt]);
  }
  return acc / static_cast<double>(assignment.pairs.size());
}

void validate_problem(const ToyProblem& p) {
  if (!std::isfinite(p.scene_size) || p.scene_size <= 0.0) {
    throw ConfigError("train: scene_size must be finite and > 0");
  }
  if (p.layers < 2) {
    throw ConfigError("train: layers must be >= 2");
  }
  if (p.gt_boxes.empty()) {
    throw ConfigError("train: at least one ground truth required");
  }
  if (p.initial_boxes.size() < p.gt_boxes.size()) {
    throw ConfigError("train: need at least as many queries as ground truths");
  }
  if (p.confidences.size() != p.initial_boxes.size()) {
    throw ShapeError("train: one confidence per query required");
  }
  for (const BoxCxCyWh& b : p.gt_boxes) {
    if (!is_valid_box(b)) {
      throw InvalidInputError("train: invalid ground-truth box");
    }
  }
  for (const BoxCxCyWh& b : p.initial_boxes) {
    if (!is_valid_box(b)) {
      throw InvalidInputError("train: invalid initial box");
    }
  }
  for (double c : p.confidences) {
    if (!(c >= 0.0) || !(c <= 1.0)) {
      throw InvalidInputError("train: confidences must be in [0, 1]");
    }
  }
}

void validate_config(const TrainConfig& cfg) {
  if (cfg.steps < 0) {
    throw ConfigError("train: steps must be >= 0");
  }
  if (!std::isfinite(cfg.learning_rate) || cfg.learning_rate <= 0.0) {
    throw ConfigError("train: learning_rate must be finite and > 0");
  }
  if (cfg.rematch_every < 1) {
    throw ConfigError("train: rematch_every must be >= 1");
  }
  if (!(cfg.fgl_weight >= 0.0) || !(cfg.ddf_weight >= 0.0)) {
    throw ConfigError("train: loss weights must be >= 0");
  }
  if (!std::isfinite(cfg.temperature) || cfg.temperature <= 0.0) {
    throw ConfigError("train: temperature must be finite and > 0");
  }
}

}  // namespace

ToyProblem generate_problem(std::uint64_t seed, int num_queries, int num_gt,
                            double scene_size, double noise) {
  if (num_gt < 1 || num_queries < num_gt) {
    throw ConfigError("generate_problem: need num_queries >= num_gt >= 1");
  }
  if (!std::isfinite(scene_size) || scene_size <= 0.0) {
    throw ConfigError("generate_problem: scene_size must be finite and > 0");
  }
  if (!std::isfinite(noise) || noise < 0.0) {
    throw ConfigError("generate_problem: noise must be finite and >= 0");
  }

  ToyProblem problem;
  problem.scene_size = scene_size;
  problem.seed = seed;
  std::mt19937_64 rng(seed);

  problem.gt_boxes.reserve(static_cast<std::size_t>(num_gt));
  for (int i = 0; i < num_gt; ++i) {
    problem.gt_boxes.push_back(sample_box(rng, scene_size));
  }

  problem.initial_boxes.reserve(static_cast<std::size_t>(num_queries));
  const double sd = noise * scene_size;
  for (int i = 0; i < num_gt; ++i) {
    problem.initial_boxes.push_back(
        jitter_box(rng, problem.gt_boxes[static_cast<std::size_t>(i)], sd,
                   scene_size));
  }
  for (int i = num_gt; i < num_queries; ++i) {
    problem.initial_boxes.push_back(sample_box(rng, scene_size));
  }

  problem.confidences.assign(static_cast<std::size_t>(num_queries), 0.1);
  std::fill_n(problem.confidences.begin(), num_gt, 0.9);
  return problem;
}

TrainReport train(const ToyProblem& problem, const TrainConfig& config) {
  validate_problem(problem);
  validate_config(config);
  const auto t_start = std::chrono::steady_clock::now();

  const WeightingSpec spec =
      make_weighting_spec(config.weighting_range_scale,
                          config.weighting_curvature, config.num_bins);
  const std::size_t num_preds = problem.initial_boxes.size();
  const std::size_t layers = static_cast<std::size_t>(problem.layers);
  const std::size_t bins = static_cast<std::size_t>(spec.num_bins) + 1;

  std::vector<EdgeDistances> reference(num_preds);
  for (std::size_t i = 0; i < num_preds; ++i) {
    reference[i] = to_edge_distances(problem.initial_boxes[i]);
  }

  std::vector<GroundTruth> gts;
  gts.reserve(problem.gt_boxes.size());
  for (const BoxCxCyWh& b : problem.gt_boxes) {
    gts.push_back(GroundTruth{b, 0});
  }

  // Trainable parameters: first-layer logits plus one residual grid per
  // later layer. All zeros decode to the initial boxes.
  EdgeDistributions base = EdgeDistributions::zeros(num_preds, bins);
  std::vector<EdgeDistributions> deltas(
      layers - 1, EdgeDistributions::zeros(num_preds, bins));

  LayerState first;
  first.layer_index = 1;
  first.boxes = problem.initial_boxes;
  first.edge_distances = reference;
  first.confidences = problem.confidences;

  auto forward = [&](int step) {
    first.distributions = base;
    try {
      return run_pipeline(first, deltas, spec);
    } catch (const DegenerateBoxError& e) {
      throw DivergenceError("a box degenerated at step " +
                                std::to_string(step) + ": " + e.what(),
                            step, std::numeric_limits<double>::quiet_NaN());
    }
  };

  // Supervision state, refreshed only at rematch steps so the descent
  // target stays fixed in between.
  std::vector<Assignment> assignments(layers);
  std::vector<FglTargets> fgl_targets(layers);
  std::vector<std::size_t> matched_idx;
  std::vector<std::size_t> unmatched_idx;
  DdfWeights ddf_weights;

  auto rematch = [&](const std::vector<LayerState>& states) {
    for (std::size_t l = 0; l < layers; ++l) {
      assignments[l] =
          hungarian(detr_cost(states[l], gts, problem.scene_size));
    }
    const UnionSet uset = union_set(assignments, num_preds);
    matched_idx = uset.matched_predictions;
    unmatched_idx = uset.unmatched_predictions;

    // Distillation weights rate each matched prediction by the teacher's
    // overlap with its ground truth: the final-layer partner when there
    // is one, otherwise the best-overlap partner from the union.
    const LayerState& teacher = states[layers - 1];
    std::vector<int> final_gt(num_preds, -1);
    for (const auto& [pred, gt] : assignments[layers - 1].pairs) {
      final_gt[pred] = static_cast<int>(gt);
    }
    std::vector<double> matched_quality;
    matched_quality.reserve(matched_idx.size());
    for (std::size_t pred : matched_idx) {
      int gt = final_gt[pred];
      if (gt < 0) {
        double best = -1.0;
        for (const auto& [p2, g2] : uset.matched_pairs) {
          if (p2 != pred) {
            continue;
          }
          const double q = iou(teacher.boxes[pred], gts[g2].box);
          if (q > best) {
            best = q;
            gt = static_cast<int>(g2);
          }
        }
      }
      matched_quality.push_back(
          iou(teacher.boxes[pred], gts[static_cast<std::size_t>(gt)].box));
    }
    std::vector<double> unmatched_conf;
    unmatched_conf.reserve(unmatched_idx.size());
    for (std::size_t pred : unmatched_idx) {
      unmatched_conf.push_back(problem.confidences[pred]);
    }
    ddf_weights =
        make_ddf_weights(matched_quality, unmatched_conf, config.temperature);

    // Localization targets per layer, weighted by that layer's own
    // current overlap (held constant until the next refresh).
    for (std::size_t l = 0; l < layers; ++l) {
      fgl_targets[l].clear();
      for (const auto& [pred, gt] : assignments[l].pairs) {
        const double q = iou(states[l].boxes[pred], gts[gt].box);
        fgl_targets[l].push_back(
            make_fgl_target(pred, reference[pred], gts[gt].box, q, spec));
      }
    }
  };

  TrainReport report;
  report.records.reserve(static_cast<std::size_t>(config.steps) * layers);
  const std::size_t width = base.logits.size();
  const bool apply_ddf = config.distill && config.distill_gradient;
  std::vector<EdgeDistributions> layer_logits;
  std::vector<double> suffix(width);

  for (int step = 0; step < config.steps; ++step) {
    const auto states = forward(step);
    if (step % config.rematch_every == 0) {
      rematch(states);
    }

    layer_logits.clear();
    for (const LayerState& s : states) {
      layer_logits.push_back(s.distributions);
    }
    const FglResult fgl = fgl_loss(layer_logits, fgl_targets, spec);
    const std::vector<EdgeDistributions> students(layer_logits.begin(),
                                                  layer_logits.end() - 1);
    const DdfResult ddf =
        ddf_loss(students, layer_logits.back(), ddf_weights, matched_idx,
                 unmatched_idx, config.kl_direction);
    report.floor_hits += fgl.floor_hits + ddf.floor_hits;

    const double total =
        config.fgl_weight * fgl.loss +
        (config.distill ? config.ddf_weight * ddf.loss : 0.0);
    if (!std::isfinite(total)) {
      throw DivergenceError(
          "loss became non-finite at step " + std::to_string(step), step,
          total);
    }

    for (std::size_t l = 0; l < layers; ++l) {
      StepRecord rec;
      rec.step = step;
      rec.layer = static_cast<int>(l) + 1;
      rec.mean_iou =
          mean_matched_iou(states[l].boxes, problem.gt_boxes, assignments[l]);
      rec.fgl = fgl.per_layer[l];
      rec.ddf = (l + 1 < layers) ? ddf.per_layer[l] : 0.0;
      report.records.push_back(rec);
    }

    // Layer l's cumulative logits are base plus the first l deltas, so
    // each parameter collects the gradient of every layer at or above
    // its entry point (the teacher layer never receives distillation
    // gradient of its own).
    std::fill(suffix.begin(), suffix.end(), 0.0);
    for (std::size_t l = layers; l-- > 0;) {
      const std::vector<double>& gf = fgl.gradients[l];
      if (apply_ddf && l + 1 < layers) {
        const std::vector<double>& gd = ddf.gradients[l];
        for (std::size_t i = 0; i < width; ++i) {
          suffix[i] += config.fgl_weight * gf[i] + config.ddf_weight * gd[i];
        }
      } else {
        for (std::size_t i = 0; i < width; ++i) {
          suffix[i] += config.fgl_weight * gf[i];
        }
      }
      std::vector<double>& target =
          (l == 0) ? base.logits : deltas[l - 1].logits;
      for (std::size_t i = 0; i < width; ++i) {
        target[i] -= config.learning_rate * suffix[i];
      }
    }
  }

  // Fresh evaluation of the trained pipeline.
  const auto final_states = forward(config.steps);
  report.final_mean_iou.resize(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    const Assignment a =
        hungarian(detr_cost(final_states[l], gts, problem.scene_size));
    report.final_mean_iou[l] =
        mean_matched_iou(final_states[l].boxes, problem.gt_boxes, a);
    if (l + 1 == layers) {
      report.final_assignment = a;
    }
  }
  report.final_logits.reserve(layers);
  for (const LayerState& s : final_states) {
    report.final_logits.push_back(s.distributions);
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return report;
}

std::vector<std::optional<double>> evaluate(std::span<const LayerState> states,
                                            std::span<const BoxCxCyWh> gts,
                                            const Assignment& assignment) {
  std::vector<std::optional<double>> out;
  out.reserve(states.size());
  for (const LayerState& state : states) {
    out.push_back(mean_matched_iou(state.boxes, gts, assignment));
  }
  return out;
}

}  // namespace finloc
