#include "finloc/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "finloc/errors.hpp"
#include "finloc/gating.hpp"
#include "finloc/losses.hpp"
#include "finloc/numeric.hpp"
#include "finloc/toytrain.hpp"
#include "finloc/weighting.hpp"

namespace finloc {

namespace {

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open " + path + " for writing");
  }
  out << content;
  out.flush();
  if (!out) {
    throw IoError("cannot write " + path);
  }
}

void emit(const std::string& content, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << content;
  } else {
    write_text(out_path, content);
  }
}

std::string metrics_to_csv(const TrainReport& report) {
  std::string csv = "step,layer,mean_iou,fgl,ddf\n";
  for (const StepRecord& r : report.records) {
    csv += std::to_string(r.step);
    csv += ',';
    csv += std::to_string(r.layer);
    csv += ',';
    if (r.mean_iou.has_value()) {
      csv += format_double(*r.mean_iou);
    }
    csv += ',';
    csv += format_double(r.fgl);
    csv += ',';
    csv += format_double(r.ddf);
    csv += '\n';
  }
  return csv;
}

std::string summary_to_json(const RunConfig& cfg, const TrainReport& report) {
  nlohmann::json j;
  j["steps"] = cfg.train.steps;
  j["seed"] = cfg.train.seed;
  j["distill"] = cfg.train.distill;
  auto per_layer = nlohmann::json::array();
  for (const auto& v : report.final_mean_iou) {
    if (v.has_value()) {
      per_layer.push_back(*v);
    } else {
      per_layer.push_back(nullptr);
    }
  }
  j["final_iou_per_layer"] = per_layer;
  return j.dump(2) + "\n";
}

std::string trim(const std::string& s) {
  const auto from = s.find_first_not_of(" \t\r");
  if (from == std::string::npos) {
    return "";
  }
  const auto to = s.find_last_not_of(" \t\r");
  return s.substr(from, to - from + 1);
}

double parse_cost_field(const std::string& raw) {
  const std::string token = trim(raw);
  if (token.empty()) {
    throw ParseError("match: empty field in cost matrix");
  }
  double value = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ParseError("match: not a number: '" + token + "'");
  }
  if (!std::isfinite(value)) {
    throw ParseError("match: costs must be finite, got '" + token + "'");
  }
  return value;
}

}  // namespace

void cmd_weights(const RunConfig& cfg, const std::string& out_path) {
  const WeightingSpec spec = make_weighting_spec(
      cfg.weighting.a, cfg.weighting.c, cfg.weighting.n_bins);
  std::string csv = "n,w\n";
  for (int n = 0; n <= spec.num_bins; ++n) {
    csv += std::to_string(n);
    csv += ',';
    csv += format_double(spec.knots[static_cast<std::size_t>(n)]);
    csv += '\n';
  }
  emit(csv, out_path);
}

TrainFiles cmd_train(const RunConfig& cfg, const std::string& out_dir) {
  namespace fs = std::filesystem;
  if (out_dir.empty()) {
    throw ConfigError("train: an output directory is required (--out)");
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    throw IoError("train: cannot create " + out_dir + ": " + ec.message());
  }

  TrainFiles files;
  files.metrics_csv = (fs::path(out_dir) / "metrics.csv").string();
  files.summary_json = (fs::path(out_dir) / "summary.json").string();
  files.config_json = (fs::path(out_dir) / "effective_config.json").string();

  const ToyProblem problem = make_problem(cfg);
  TrainReport report;
  try {
    report = train(problem, to_train_config(cfg));
  } catch (const DivergenceError& e) {
    nlohmann::json j;
    j["error"] = "divergence";
    j["step"] = e.step;
    if (std::isfinite(e.loss)) {
      j["loss"] = e.loss;
    } else {
      j["loss"] = nullptr;
    }
    j["message"] = e.what();
    write_text((fs::path(out_dir) / "diagnostics.json").string(),
               j.dump(2) + "\n");
    throw;
  }

  write_text(files.config_json, serialize_config(cfg));
  write_text(files.metrics_csv, metrics_to_csv(report));
  write_text(files.summary_json, summary_to_json(cfg, report));
  return files;
}

GradcheckReport run_gradient_checks(const RunConfig& cfg, int instances,
                                    double epsilon) {
  if (instances < 1) {
    throw ConfigError("gradcheck: instances must be >= 1");
  }
  if (!(epsilon >= 1e-7) || !(epsilon <= 1e-3)) {
    throw ConfigError("gradcheck: epsilon must lie in [1e-7, 1e-3]");
  }

  GradcheckReport report;
  report.instances = instances;
  report.epsilon = epsilon;
  std::mt19937_64 rng(cfg.train.seed);
  constexpr int kBinChoices[] = {4, 8, 32};

  for (int inst = 0; inst < instances; ++inst) {
    // Localization loss over a random stack of layers and targets.
    {
      const int n_bins = kBinChoices[inst % 3];
      const WeightingSpec spec =
          make_weighting_spec(cfg.weighting.a, cfg.weighting.c, n_bins);
      const std::size_t bins = static_cast<std::size_t>(n_bins) + 1;
      const std::size_t num_preds = 1 + rng() % 8;
      const std::size_t num_layers = 1 + rng() % 3;

      std::vector<EdgeDistributions> layers;
      std::vector<FglTargets> targets(num_layers);
      std::vector<double> point;
      for (std::size_t l = 0; l < num_layers; ++l) {
        EdgeDistributions d = EdgeDistributions::zeros(num_preds, bins);
        for (double& v : d.logits) {
          v = normal_unit(rng);
        }
        point.insert(point.end(), d.logits.begin(), d.logits.end());
        for (std::size_t pred = 0; pred < num_preds; ++pred) {
          if (uniform_unit(rng) > 0.75) {
            continue;  // leave some predictions unsupervised
          }
          FglTarget t;
          t.prediction = pred;
          t.iou_weight = uniform_unit(rng);
          for (int e = 0; e < kNumEdges; ++e) {
            // occasionally outside the knot range to cover clamping
            const double phi =
                (uniform_unit(rng) * 2.0 - 1.0) * 2.4 * spec.range_scale;
            t.offsets[static_cast<std::size_t>(e)] =
                std::clamp(phi, spec.knots.front(), spec.knots.back());
            t.brackets[static_cast<std::size_t>(e)] = bracket(spec, phi);
          }
          targets[l].push_back(t);
        }
        layers.push_back(std::move(d));
      }

      const FglResult at_point = fgl_loss(layers, targets, spec);
      std::vector<double> analytic;
      for (const auto& g : at_point.gradients) {
        analytic.insert(analytic.end(), g.begin(), g.end());
      }
      auto loss_at = [&](std::span<const double> flat) {
        std::vector<EdgeDistributions> probe = layers;
        std::size_t off = 0;
        for (auto& d : probe) {
          std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(off),
                      d.logits.size(), d.logits.begin());
          off += d.logits.size();
        }
        return fgl_loss(probe, targets, spec).loss;
      };
      report.fgl_max_error =
          std::max(report.fgl_max_error,
                   finite_difference_check(loss_at, analytic, point, epsilon));
    }

    // Distillation loss; alternate the divergence direction.
    {
      const int n_bins = kBinChoices[(inst + 1) % 3];
      const std::size_t bins = static_cast<std::size_t>(n_bins) + 1;
      const std::size_t num_preds = 1 + rng() % 6;
      const std::size_t num_students = 1 + rng() % 2;
      const KlDirection direction = (inst % 2 == 0)
                                        ? KlDirection::teacher_first
                                        : KlDirection::student_first;

      EdgeDistributions teacher = EdgeDistributions::zeros(num_preds, bins);
      for (double& v : teacher.logits) {
        v = normal_unit(rng);
      }
      std::vector<EdgeDistributions> students;
      std::vector<double> point;
      for (std::size_t l = 0; l < num_students; ++l) {
        EdgeDistributions d = EdgeDistributions::zeros(num_preds, bins);
        for (double& v : d.logits) {
          v = normal_unit(rng);
        }
        point.insert(point.end(), d.logits.begin(), d.logits.end());
        students.push_back(std::move(d));
      }

      std::vector<std::size_t> matched;
      std::vector<std::size_t> unmatched;
      std::vector<double> ious;
      std::vector<double> confs;
      for (std::size_t pred = 0; pred < num_preds; ++pred) {
        const double r = uniform_unit(rng);
        if (r < 0.45) {
          matched.push_back(pred);
          ious.push_back(uniform_unit(rng));
        } else if (r < 0.9) {
          unmatched.push_back(pred);
          confs.push_back(uniform_unit(rng));
        }
      }
      const DdfWeights weights =
          make_ddf_weights(ious, confs, cfg.temperature);

      const DdfResult at_point =
          ddf_loss(students, teacher, weights, matched, unmatched, direction);
      std::vector<double> analytic;
      for (const auto& g : at_point.gradients) {
        analytic.insert(analytic.end(), g.begin(), g.end());
      }
      auto loss_at = [&](std::span<const double> flat) {
        std::vector<EdgeDistributions> probe = students;
        std::size_t off = 0;
        for (auto& d : probe) {
          std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(off),
                      d.logits.size(), d.logits.begin());
          off += d.logits.size();
        }
        return ddf_loss(probe, teacher, weights, matched, unmatched,
                        direction)
            .loss;
      };
      report.ddf_max_error =
          std::max(report.ddf_max_error,
                   finite_difference_check(loss_at, analytic, point, epsilon));
    }

    // Gating layer: objective is the dot product with a fixed upstream.
    {
      const std::size_t dim = 1 + rng() % 16;
      GateParams params = GateParams::zeros(dim);
      std::vector<double> x1(dim), x2(dim), upstream(dim);
      for (auto* vec : {&x1, &x2, &upstream}) {
        for (double& v : *vec) {
          v = normal_unit(rng);
        }
      }
      for (double& v : params.weight) {
        v = 0.5 * normal_unit(rng);
      }
      for (double& v : params.bias) {
        v = 0.5 * normal_unit(rng);
      }

      std::vector<double> point;
      point.insert(point.end(), x1.begin(), x1.end());
      point.insert(point.end(), x2.begin(), x2.end());
      point.insert(point.end(), params.weight.begin(), params.weight.end());
      point.insert(point.end(), params.bias.begin(), params.bias.end());

      const GateGradients grads = gate_backward(x1, x2, params, upstream);
      std::vector<double> analytic;
      analytic.insert(analytic.end(), grads.x1.begin(), grads.x1.end());
      analytic.insert(analytic.end(), grads.x2.begin(), grads.x2.end());
      analytic.insert(analytic.end(), grads.weight.begin(),
                      grads.weight.end());
      analytic.insert(analytic.end(), grads.bias.begin(), grads.bias.end());

      auto loss_at = [&](std::span<const double> flat) {
        GateParams probe = GateParams::zeros(dim);
        std::vector<double> px1(flat.begin(),
                                flat.begin() + static_cast<std::ptrdiff_t>(dim));
        std::vector<double> px2(
            flat.begin() + static_cast<std::ptrdiff_t>(dim),
            flat.begin() + static_cast<std::ptrdiff_t>(2 * dim));
        std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(2 * dim),
                    probe.weight.size(), probe.weight.begin());
        std::copy_n(flat.begin() +
                        static_cast<std::ptrdiff_t>(2 * dim + 4 * dim),
                    probe.bias.size(), probe.bias.begin());
        const std::vector<double> out = gate_forward(px1, px2, probe);
        double acc = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) {
          acc += upstream[i] * out[i];
        }
        return acc;
      };
      report.gate_max_error =
          std::max(report.gate_max_error,
                   finite_difference_check(loss_at, analytic, point, epsilon));
    }
  }
  return report;
}

Assignment cmd_match(const std::string& csv_path,
                     const std::string& out_path) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) {
    throw IoError("match: cannot open " + csv_path);
  }
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    lines.push_back(line);
  }
  if (in.bad()) {
    throw IoError("match: cannot read " + csv_path);
  }
  while (!lines.empty() && trim(lines.back()).empty()) {
    lines.pop_back();
  }
  if (lines.empty()) {
    throw ParseError("match: empty cost matrix");
  }

  std::vector<std::vector<double>> rows;
  for (const std::string& raw : lines) {
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = raw.find(',', start);
      const std::string field = raw.substr(
          start, comma == std::string::npos ? std::string::npos
                                            : comma - start);
      row.push_back(parse_cost_field(field));
      if (comma == std::string::npos) {
        break;
      }
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError("match: ragged cost matrix (row " +
                       std::to_string(rows.size()) + " has " +
                       std::to_string(row.size()) + " fields, expected " +
                       std::to_string(rows.front().size()) + ")");
    }
    rows.push_back(std::move(row));
  }

  CostMatrix m = CostMatrix::zeros(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m.at(r, c) = rows[r][c];
    }
  }

  const Assignment assignment = hungarian(m);
  nlohmann::json j;
  auto pairs = nlohmann::json::array();
  for (const auto& [pred, gt] : assignment.pairs) {
    pairs.push_back({pred, gt});
  }
  j["pairs"] = pairs;
  j["total_cost"] = assignment.total_cost;
  emit(j.dump(2) + "\n", out_path);
  return assignment;
}

}  // namespace finloc
