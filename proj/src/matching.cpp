#include "finloc/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "finloc/errors.hpp"
#include "finloc/numeric.hpp"

namespace finloc {

namespace {

// Shortest-augmenting-path assignment with potentials; requires
// n_rows <= n_cols. Only the optimal total is needed here: the pairing
// itself is reconstructed by the tie-break pass in hungarian().
template <typename CostFn>
double sap_solve(std::size_t n_rows, std::size_t n_cols, CostFn cost) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based internally; index 0 is the virtual start column.
  std::vector<double> u(n_rows + 1, 0.0);
  std::vector<double> v(n_cols + 1, 0.0);
  std::vector<double> min_slack(n_cols + 1);
  std::vector<int> row_in_col(n_cols + 1, 0);
  std::vector<int> path(n_cols + 1, 0);
  std::vector<char> visited(n_cols + 1);

  for (std::size_t i = 1; i <= n_rows; ++i) {
    row_in_col[0] = static_cast<int>(i);
    std::size_t j0 = 0;
    std::fill(min_slack.begin(), min_slack.end(), kInf);
    std::fill(visited.begin(), visited.end(), 0);
    do {
      visited[j0] = 1;
      const int i0 = row_in_col[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n_cols; ++j) {
        if (visited[j]) {
          continue;
        }
        const double slack =
            cost(static_cast<std::size_t>(i0) - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[j];
        if (slack < min_slack[j]) {
          min_slack[j] = slack;
          path[j] = static_cast<int>(j0);
        }
        if (min_slack[j] < delta) {
          delta = min_slack[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n_cols; ++j) {
        if (visited[j]) {
          u[static_cast<std::size_t>(row_in_col[j])] += delta;
          v[j] -= delta;
        } else {
          min_slack[j] -= delta;
        }
      }
      j0 = j1;
    } while (row_in_col[j0] != 0);
    // walk the augmenting path back to the start
    do {
      const std::size_t j1 = static_cast<std::size_t>(path[j0]);
      row_in_col[j0] = row_in_col[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  double total = 0.0;
  for (std::size_t j = 1; j <= n_cols; ++j) {
    if (row_in_col[j] != 0) {
      total += cost(static_cast<std::size_t>(row_in_col[j]) - 1, j - 1);
    }
  }
  return total;
}

// Optimal total over explicit row/col subsets; transposes internally so
// the solver always sees rows <= cols.
double optimal_cost(const CostMatrix& m, const std::vector<std::size_t>& rows,
                    const std::vector<std::size_t>& cols) {
  if (rows.empty() || cols.empty()) {
    return 0.0;
  }
  if (rows.size() <= cols.size()) {
    return sap_solve(rows.size(), cols.size(),
                     [&](std::size_t i, std::size_t j) {
                       return m.at(rows[i], cols[j]);
                     });
  }
  return sap_solve(cols.size(), rows.size(), [&](std::size_t i, std::size_t j) {
    return m.at(rows[j], cols[i]);
  });
}

}  // namespace

CostMatrix CostMatrix::zeros(std::size_t rows, std::size_t cols) {
  CostMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.cost.assign(rows * cols, 0.0);
  return m;
}

double& CostMatrix::at(std::size_t row, std::size_t col) {
  if (row >= rows || col >= cols) {
    throw IndexError("CostMatrix: element index out of range");
  }
  return cost[row * cols + col];
}

double CostMatrix::at(std::size_t row, std::size_t col) const {
  if (row >= rows || col >= cols) {
    throw IndexError("CostMatrix: element index out of range");
  }
  return cost[row * cols + col];
}

Assignment hungarian(const CostMatrix& m) {
  if (m.cost.size() != m.rows * m.cols) {
    throw ShapeError("hungarian: cost storage disagrees with dimensions");
  }
  if (!all_finite(m.cost)) {
    throw InvalidInputError("hungarian: costs must be finite");
  }

  Assignment out;
  std::size_t need = std::min(m.rows, m.cols);
  if (need == 0) {
    return out;
  }

  std::vector<std::size_t> all_rows(m.rows);
  std::vector<std::size_t> all_cols(m.cols);
  for (std::size_t r = 0; r < m.rows; ++r) {
    all_rows[r] = r;
  }
  for (std::size_t c = 0; c < m.cols; ++c) {
    all_cols[c] = c;
  }
  const double best = optimal_cost(m, all_rows, all_cols);
  const double tol = 1e-9 * std::max(1.0, std::abs(best));

  // Fix pairs row by row, always trying the smallest column first and
  // keeping the first choice that still completes to an optimal total.
  // This realizes the documented lexicographic tie-break exactly.
  std::vector<std::size_t> avail = all_cols;
  double fixed = 0.0;
  for (std::size_t r = 0; r < m.rows && need > 0; ++r) {
    std::vector<std::size_t> rest_rows;
    rest_rows.reserve(m.rows - r - 1);
    for (std::size_t rr = r + 1; rr < m.rows; ++rr) {
      rest_rows.push_back(rr);
    }

    bool matched = false;
    std::size_t fallback_col = 0;
    double fallback_total = std::numeric_limits<double>::infinity();
    for (std::size_t ci = 0; ci < avail.size(); ++ci) {
      const std::size_t c = avail[ci];
      std::vector<std::size_t> rest_cols = avail;
      rest_cols.erase(rest_cols.begin() + static_cast<std::ptrdiff_t>(ci));
      const double total =
          fixed + m.at(r, c) + optimal_cost(m, rest_rows, rest_cols);
      if (total <= best + tol) {
        out.pairs.emplace_back(r, c);
        fixed += m.at(r, c);
        avail.erase(avail.begin() + static_cast<std::ptrdiff_t>(ci));
        --need;
        matched = true;
        break;
      }
      if (total < fallback_total) {
        fallback_total = total;
        fallback_col = ci;
      }
    }
    if (!matched && rest_rows.size() < need) {
      // Every remaining row is required, so this row cannot stay
      // unmatched; take the numerically closest column instead.
      const std::size_t c = avail[fallback_col];
      out.pairs.emplace_back(r, c);
      fixed += m.at(r, c);
      avail.erase(avail.begin() + static_cast<std::ptrdiff_t>(fallback_col));
      --need;
    }
  }
  out.total_cost = fixed;
  return out;
}

CostMatrix detr_cost(const LayerState& layer,
                     std::span<const GroundTruth> ground_truths,
                     double scene_size, const DetrCostWeights& weights) {
  if (!std::isfinite(scene_size) || scene_size <= 0.0) {
    throw InvalidInputError("detr_cost: scene_size must be finite and > 0");
  }
  const std::size_t k = layer.boxes.size();
  if (layer.confidences.size() != k) {
    throw ShapeError("detr_cost: confidence count disagrees with box count");
  }
  for (double conf : layer.confidences) {
    if (!(conf >= 0.0) || !(conf <= 1.0)) {
      throw InvalidInputError("detr_cost: confidences must be in [0, 1]");
    }
  }
  for (const GroundTruth& gt : ground_truths) {
    if (!is_valid_box(gt.box)) {
      throw InvalidInputError("detr_cost: invalid ground-truth box");
    }
  }

  CostMatrix m = CostMatrix::zeros(k, ground_truths.size());
  for (std::size_t r = 0; r < k; ++r) {
    const BoxCxCyWh& p = layer.boxes[r];
    if (!is_valid_box(p)) {
      throw InvalidInputError("detr_cost: invalid prediction box");
    }
    for (std::size_t c = 0; c < ground_truths.size(); ++c) {
      const BoxCxCyWh& g = ground_truths[c].box;
      const double l1 = (std::abs(p.cx - g.cx) + std::abs(p.cy - g.cy) +
                         std::abs(p.w - g.w) + std::abs(p.h - g.h)) /
                        (4.0 * scene_size);
      m.at(r, c) = weights.classification * (1.0 - layer.confidences[r]) +
                   weights.l1 * l1 + weights.giou * (1.0 - giou(p, g));
    }
  }
  return m;
}

UnionSet union_set(std::span<const Assignment> assignments,
                   std::size_t num_predictions) {
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  for (const Assignment& a : assignments) {
    for (const auto& pair : a.pairs) {
      if (pair.first >= num_predictions) {
        throw IndexError("union_set: prediction index " +
                         std::to_string(pair.first) + " outside the " +
                         std::to_string(num_predictions) + " predictions");
      }
      pairs.insert(pair);
    }
  }

  UnionSet out;
  out.matched_pairs.assign(pairs.begin(), pairs.end());
  std::set<std::size_t> matched;
  for (const auto& pair : pairs) {
    matched.insert(pair.first);
  }
  out.matched_predictions.assign(matched.begin(), matched.end());
  for (std::size_t k = 0; k < num_predictions; ++k) {
    if (matched.count(k) == 0) {
      out.unmatched_predictions.push_back(k);
    }
  }
  return out;
}

}  // namespace finloc
