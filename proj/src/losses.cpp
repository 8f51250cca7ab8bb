#include "finloc/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "finloc/errors.hpp"
#include "finloc/numeric.hpp"

namespace finloc {

namespace {

// Probability floor inside every log; keeps the loss finite while the
// gradient formulas stay untouched.
constexpr double kProbFloor = 1e-12;

double floored_log(double p, std::int64_t* floor_hits) {
  if (p < kProbFloor) {
    if (floor_hits != nullptr) {
      ++*floor_hits;
    }
    p = kProbFloor;
  }
  return std::log(p);
}

void require_target(const FglTarget& target, const EdgeDistributions& layer) {
  if (target.prediction >= layer.num_predictions) {
    throw IndexError("fgl_loss: target prediction out of range");
  }
  if (!(target.iou_weight >= 0.0) || !(target.iou_weight <= 1.0)) {
    throw InvalidInputError("fgl_loss: iou weight must be in [0, 1]");
  }
  for (const Bracket& b : target.brackets) {
    if (b.lower_bin < 0 || b.upper_bin != b.lower_bin + 1 ||
        static_cast<std::size_t>(b.upper_bin) >= layer.num_bins) {
      throw IndexError("fgl_loss: bracket bins out of range");
    }
  }
}

}  // namespace

FglTarget make_fgl_target(std::size_t prediction,
                          const EdgeDistances& reference,
                          const BoxCxCyWh& ground_truth, double iou_weight,
                          const WeightingSpec& spec) {
  if (!is_valid_box(ground_truth)) {
    throw InvalidInputError("make_fgl_target: invalid ground-truth box");
  }
  if (!(iou_weight >= 0.0) || !(iou_weight <= 1.0)) {
    throw InvalidInputError("make_fgl_target: iou weight must be in [0, 1]");
  }
  const double ref_w = reference.left + reference.right;
  const double ref_h = reference.top + reference.bottom;
  if (!(ref_w > 0.0) || !(ref_h > 0.0)) {
    throw InvalidInputError(
        "make_fgl_target: reference distances span a non-positive size");
  }

  // Ground-truth edge distances measured from the reference anchor.
  const double gt[4] = {
      reference.anchor_y - (ground_truth.cy - ground_truth.h / 2.0),
      (ground_truth.cy + ground_truth.h / 2.0) - reference.anchor_y,
      reference.anchor_x - (ground_truth.cx - ground_truth.w / 2.0),
      (ground_truth.cx + ground_truth.w / 2.0) - reference.anchor_x,
  };
  const double d0[4] = {reference.top, reference.bottom, reference.left,
                        reference.right};
  const double scale[4] = {ref_h, ref_h, ref_w, ref_w};

  FglTarget target;
  target.prediction = prediction;
  target.iou_weight = iou_weight;
  for (int e = 0; e < kNumEdges; ++e) {
    const double raw = (gt[e] - d0[e]) / scale[e];
    target.offsets[static_cast<std::size_t>(e)] =
        std::clamp(raw, spec.knots.front(), spec.knots.back());
    target.brackets[static_cast<std::size_t>(e)] = bracket(spec, raw);
  }
  return target;
}

FglResult fgl_loss(const std::vector<EdgeDistributions>& layers,
                   const std::vector<FglTargets>& targets,
                   const WeightingSpec& spec) {
  if (layers.size() != targets.size()) {
    throw ShapeError("fgl_loss: one target list per layer required");
  }

#ifdef FINLOC_FGL_GRADIENT_SIGN_FLIP
  // Deliberate fault for a self-test build: a sign error here must be
  // caught by the finite-difference comparison.
  constexpr double kGradientSign = -1.0;
#else
  constexpr double kGradientSign = 1.0;
#endif

  FglResult result;
  result.per_layer.assign(layers.size(), 0.0);
  result.gradients.reserve(layers.size());
  std::vector<double> probs;

  for (std::size_t l = 0; l < layers.size(); ++l) {
    const EdgeDistributions& layer = layers[l];
    if (layer.num_bins != static_cast<std::size_t>(spec.num_bins) + 1) {
      throw ShapeError("fgl_loss: layer bin count disagrees with weighting");
    }
    std::vector<double> grad(layer.logits.size(), 0.0);
    probs.resize(layer.num_bins);

    for (const FglTarget& target : targets[l]) {
      require_target(target, layer);
      const double iou = target.iou_weight;
      for (int e = 0; e < kNumEdges; ++e) {
        const Bracket& b = target.brackets[static_cast<std::size_t>(e)];
        const auto row = layer.row(target.prediction, e);
        if (!all_finite(row)) {
          throw InvalidInputError("fgl_loss: logits must be finite");
        }
        softmax_into(row, probs);

        const auto lo = static_cast<std::size_t>(b.lower_bin);
        const auto hi = static_cast<std::size_t>(b.upper_bin);
        result.per_layer[l] -=
            iou * (b.lower_weight * floored_log(probs[lo], &result.floor_hits) +
                   b.upper_weight * floored_log(probs[hi], &result.floor_hits));

        const std::size_t start =
            (target.prediction * kNumEdges + static_cast<std::size_t>(e)) *
            layer.num_bins;
        const double weight_sum = b.lower_weight + b.upper_weight;
        for (std::size_t n = 0; n < layer.num_bins; ++n) {
          grad[start + n] += kGradientSign * iou * weight_sum * probs[n];
        }
        grad[start + lo] -= kGradientSign * iou * b.lower_weight;
        grad[start + hi] -= kGradientSign * iou * b.upper_weight;
      }
    }
    result.loss += result.per_layer[l];
    result.gradients.push_back(std::move(grad));
  }
  return result;
}

DdfWeights make_ddf_weights(std::span<const double> matched_iou,
                            std::span<const double> unmatched_confidence,
                            double temperature) {
  if (!std::isfinite(temperature) || temperature <= 0.0) {
    throw ConfigError("ddf weights: temperature must be finite and > 0");
  }
  for (double v : matched_iou) {
    if (!(v >= 0.0) || !(v <= 1.0)) {
      throw InvalidInputError("ddf weights: IoU values must be in [0, 1]");
    }
  }
  for (double v : unmatched_confidence) {
    if (!(v >= 0.0) || !(v <= 1.0)) {
      throw InvalidInputError(
          "ddf weights: confidence values must be in [0, 1]");
    }
  }

  DdfWeights weights;
  weights.temperature = temperature;
  weights.num_matched = matched_iou.size();
  weights.num_unmatched = unmatched_confidence.size();
  if (weights.num_matched == 0 && weights.num_unmatched == 0) {
    return weights;
  }
  const double root_m = std::sqrt(static_cast<double>(weights.num_matched));
  const double root_u = std::sqrt(static_cast<double>(weights.num_unmatched));
  const double denom = root_m + root_u;
  weights.matched.reserve(weights.num_matched);
  for (double v : matched_iou) {
    weights.matched.push_back(v * root_m / denom);
  }
  weights.unmatched.reserve(weights.num_unmatched);
  for (double v : unmatched_confidence) {
    weights.unmatched.push_back(v * root_u / denom);
  }
  return weights;
}

DdfResult ddf_loss(const std::vector<EdgeDistributions>& student_layers,
                   const EdgeDistributions& teacher, const DdfWeights& weights,
                   std::span<const std::size_t> matched,
                   std::span<const std::size_t> unmatched,
                   KlDirection direction) {
  if (matched.size() != weights.matched.size() ||
      unmatched.size() != weights.unmatched.size() ||
      matched.size() != weights.num_matched ||
      unmatched.size() != weights.num_unmatched) {
    throw ShapeError("ddf_loss: weight lists disagree with index lists");
  }
  for (const EdgeDistributions& student : student_layers) {
    if (!student.same_shape(teacher)) {
      throw ShapeError("ddf_loss: student and teacher shapes differ");
    }
  }
  std::vector<char> seen(teacher.num_predictions, 0);
  for (std::span<const std::size_t> list : {matched, unmatched}) {
    for (std::size_t k : list) {
      if (k >= teacher.num_predictions) {
        throw IndexError("ddf_loss: prediction index out of range");
      }
      if (seen[k] != 0) {
        throw IndexError(
            "ddf_loss: matched and unmatched lists must be disjoint");
      }
      seen[k] = 1;
    }
  }

  const double t = weights.temperature;
  if (!std::isfinite(t) || t <= 0.0) {
    throw ConfigError("ddf_loss: temperature must be finite and > 0");
  }

  DdfResult result;
  result.per_layer.assign(student_layers.size(), 0.0);
  result.gradients.reserve(student_layers.size());

  std::vector<double> scaled(teacher.num_bins);
  std::vector<double> teacher_p(teacher.num_bins);
  std::vector<double> student_p(teacher.num_bins);

  auto tempered = [&](std::span<const double> row, std::vector<double>& out) {
    if (!all_finite(row)) {
      throw InvalidInputError("ddf_loss: logits must be finite");
    }
    for (std::size_t n = 0; n < row.size(); ++n) {
      scaled[n] = row[n] / t;
    }
    softmax_into(scaled, out);
  };

  auto weight_of = [&](std::size_t pos, bool is_matched) {
    return is_matched ? weights.matched[pos] : weights.unmatched[pos];
  };

  for (std::size_t l = 0; l < student_layers.size(); ++l) {
    const EdgeDistributions& student = student_layers[l];
    std::vector<double> grad(student.logits.size(), 0.0);

    for (int group = 0; group < 2; ++group) {
      const bool is_matched = group == 0;
      const auto& list = is_matched ? matched : unmatched;
      for (std::size_t pos = 0; pos < list.size(); ++pos) {
        const std::size_t k = list[pos];
        const double w = weight_of(pos, is_matched);
        for (int e = 0; e < kNumEdges; ++e) {
          tempered(teacher.row(k, e), teacher_p);
          tempered(student.row(k, e), student_p);

          const std::size_t start =
              (k * kNumEdges + static_cast<std::size_t>(e)) * student.num_bins;
          if (direction == KlDirection::teacher_first) {
            result.per_layer[l] +=
                t * t * w *
                kl_divergence(teacher_p, student_p, &result.floor_hits);
            for (std::size_t n = 0; n < student.num_bins; ++n) {
              grad[start + n] += t * w * (student_p[n] - teacher_p[n]);
            }
          } else {
            const double kl =
                kl_divergence(student_p, teacher_p, &result.floor_hits);
            result.per_layer[l] += t * t * w * kl;
            for (std::size_t n = 0; n < student.num_bins; ++n) {
              if (student_p[n] <= 0.0) {
                continue;
              }
              const double ratio =
                  std::log(student_p[n] / std::max(teacher_p[n], kProbFloor));
              grad[start + n] += t * w * student_p[n] * (ratio - kl);
            }
          }
        }
      }
    }
    result.loss += result.per_layer[l];
    result.gradients.push_back(std::move(grad));
  }
  return result;
}

double kl_divergence(std::span<const double> p, std::span<const double> q,
                     std::int64_t* floor_hits) {
  if (p.size() != q.size()) {
    throw ShapeError("kl_divergence: size mismatch");
  }
  double p_sum = 0.0;
  double q_sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!std::isfinite(p[i]) || p[i] < 0.0 || !std::isfinite(q[i]) ||
        q[i] < 0.0) {
      throw InvalidInputError("kl_divergence: entries must be finite and "
                              ">= 0");
    }
    p_sum += p[i];
    q_sum += q[i];
  }
  if (std::abs(p_sum - 1.0) > 1e-6 || std::abs(q_sum - 1.0) > 1e-6) {
    throw InvalidInputError("kl_divergence: inputs must be normalized");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) {
      continue;
    }
    double denom = q[i];
    if (denom < kProbFloor) {
      if (floor_hits != nullptr) {
        ++*floor_hits;
      }
      denom = kProbFloor;
    }
    acc += p[i] * std::log(p[i] / denom);
  }
  return acc;
}

double finite_difference_check(
    const std::function<double(std::span<const double>)>& loss,
    std::span<const double> analytic_gradient, std::span<const double> point,
    double epsilon) {
  if (!(epsilon >= 1e-7) || !(epsilon <= 1e-3)) {
    throw ConfigError("finite_difference_check: epsilon must lie in "
                      "[1e-7, 1e-3]");
  }
  if (analytic_gradient.size() != point.size()) {
    throw ShapeError("finite_difference_check: gradient size differs from "
                     "point size");
  }
  std::vector<double> probe(point.begin(), point.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + epsilon;
    const double up = loss(probe);
    probe[i] = saved - epsilon;
    const double down = loss(probe);
    probe[i] = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double err = std::abs(analytic_gradient[i] - numeric) /
                       std::max(1.0, std::abs(numeric));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace finloc
