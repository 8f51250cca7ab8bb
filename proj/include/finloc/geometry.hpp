#pragma once

namespace finloc {

// Axis-aligned box given by center and size. Corner form is
// (cx - w/2, cy - h/2, cx + w/2, cy + h/2); y grows downward, so "top"
// is the minimal-y edge.
struct BoxCxCyWh {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;
};

// Distances from an anchor point to the four box edges, in the order
// top, bottom, left, right. The anchor is carried along because the
// distances are only meaningful relative to it; they may go negative
// when an edge lies on the far side of the anchor.
struct EdgeDistances {
  double top = 0.0;
  double bottom = 0.0;
  double left = 0.0;
  double right = 0.0;
  double anchor_x = 0.0;
  double anchor_y = 0.0;
};

// True when all fields are finite and the size is strictly positive.
bool is_valid_box(const BoxCxCyWh& box);

// Symmetric distances (h/2, h/2, w/2, w/2) anchored at the box center.
EdgeDistances to_edge_distances(const BoxCxCyWh& box);

// Box spanned by the four edges. The resulting center is the corner
// midpoint, which differs from the anchor when the distances are
// asymmetric. Throws DegenerateBoxError when a side collapses.
BoxCxCyWh from_edge_distances(const EdgeDistances& d);

// Intersection-over-union in [0, 1]; 0 for disjoint or touching pairs.
double iou(const BoxCxCyWh& a, const BoxCxCyWh& b);

// Generalized IoU: iou minus the fraction of the smallest enclosing box
// not covered by the union. Range (-1, 1]; equals iou when one box
// contains the other.
double giou(const BoxCxCyWh& a, const BoxCxCyWh& b);

}  // namespace finloc
