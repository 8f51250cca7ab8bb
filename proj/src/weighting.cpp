#include "finloc/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "finloc/errors.hpp"

namespace finloc {

WeightingSpec make_weighting_spec(double range_scale, double curvature,
                                  int num_bins) {
  if (!std::isfinite(range_scale) || range_scale <= 0.0) {
    throw ConfigError("weighting: range_scale must be finite and > 0");
  }
  if (!std::isfinite(curvature) || curvature <= 0.0) {
    throw ConfigError("weighting: curvature must be finite and > 0");
  }
  if (num_bins < 4 || num_bins % 2 != 0) {
    throw ConfigError("weighting: num_bins must be even and >= 4, got " +
                      std::to_string(num_bins));
  }

  WeightingSpec spec;
  spec.range_scale = range_scale;
  spec.curvature = curvature;
  spec.num_bins = num_bins;
  spec.knots.resize(static_cast<std::size_t>(num_bins) + 1);

  const int n = num_bins;
  const double base = range_scale / curvature + 1.0;
  spec.knots.front() = -2.0 * range_scale;
  spec.knots.back() = 2.0 * range_scale;
  for (int i = 1; i < n; ++i) {
    // Mirrored indices share the exact same integer exponent, which makes
    // the table antisymmetric to the last bit.
    const int numer = (i < n / 2) ? (n - 2 * i) : (2 * i - n);
    const double curve =
        curvature * std::pow(base, static_cast<double>(numer) / (n - 2));
    spec.knots[static_cast<std::size_t>(i)] =
        (i < n / 2) ? (curvature - curve) : (curve - curvature);
  }

  for (int i = 0; i < n; ++i) {
    if (!(spec.knots[static_cast<std::size_t>(i)] <
          spec.knots[static_cast<std::size_t>(i) + 1])) {
      throw ConfigError("weighting: knot table is not strictly increasing "
                        "for these parameters");
    }
  }
  return spec;
}

double knot_value(const WeightingSpec& spec, int n) {
  if (n < 0 || n > spec.num_bins) {
    throw IndexError("knot_value: index " + std::to_string(n) +
                     " outside [0, " + std::to_string(spec.num_bins) + "]");
  }
  return spec.knots[static_cast<std::size_t>(n)];
}

Bracket bracket(const WeightingSpec& spec, double offset) {
  if (!std::isfinite(offset)) {
    throw InvalidInputError("bracket: offset must be finite");
  }
  const auto& knots = spec.knots;
  const int n = spec.num_bins;

  Bracket out;
  if (offset <= knots.front()) {
    out = {0, 1, 1.0, 0.0};
    return out;
  }
  if (offset >= knots.back()) {
    out = {n - 1, n, 0.0, 1.0};
    return out;
  }

  const auto it = std::upper_bound(knots.begin(), knots.end(), offset);
  const int upper = static_cast<int>(it - knots.begin());
  const int lower = upper - 1;
  const double lo = knots[static_cast<std::size_t>(lower)];
  const double hi = knots[static_cast<std::size_t>(upper)];
  if (offset == lo) {
    out = {lower, lower + 1, 1.0, 0.0};
    return out;
  }
  out.lower_bin = lower;
  out.upper_bin = upper;
  out.lower_weight = (hi - offset) / (hi - lo);
  out.upper_weight = (offset - lo) / (hi - lo);
  return out;
}

}  // namespace finloc
