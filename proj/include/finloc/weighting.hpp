#pragma once

#include <vector>

namespace finloc {

// Non-uniform mapping from bin index n in [0, N] to a relative edge
// offset. Knots are dense near zero for fine correction of
// already-accurate edges and spread geometrically toward the ends,
// spanning [-2 * range_scale, 2 * range_scale].
struct WeightingSpec {
  double range_scale = 0.5;   // half of the largest representable offset
  double curvature = 0.25;    // smaller values pack knots tighter around zero
  int num_bins = 32;          // N: even, >= 4; the knot table has N + 1 entries
  std::vector<double> knots;  // strictly increasing, antisymmetric about N/2
};

// The two knots adjacent to a clamped offset plus interpolation weights.
// upper_bin is always lower_bin + 1; an offset that lands exactly on a
// knot gets weight 1 on that knot.
struct Bracket {
  int lower_bin = 0;
  int upper_bin = 1;
  double lower_weight = 0.0;
  double upper_weight = 0.0;
};

// Builds the knot table once; all later lookups read from it.
// Throws ConfigError for non-positive scales or an odd / too-small bin
// count.
WeightingSpec make_weighting_spec(double range_scale, double curvature,
                                  int num_bins);

// Table lookup for knot n in [0, num_bins]; throws IndexError outside.
double knot_value(const WeightingSpec& spec, int n);

// Clamps the offset into the knot range and finds the bracketing pair.
// Exact knot hits get (n, n+1, 1, 0), except the top knot which is
// reported as (N-1, N, 0, 1) so upper_bin stays in range.
Bracket bracket(const WeightingSpec& spec, double offset);

}  // namespace finloc
